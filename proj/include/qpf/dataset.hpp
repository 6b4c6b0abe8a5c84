/*
 * Copyright 2026 The qpf Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qpf/grid.hpp"
#include "qpf/powerflow.hpp"
#include "qpf/scaler.hpp"

namespace qpf {

/// One supervised sample. Inputs are [p_load per bus, q_load per bus, |V| of
/// slack then PV buses] in pu; targets are [|V| of PQ buses, delta of non-slack
/// buses] in pu / rad. For the 4-bus network that is 10 inputs and 5 targets.
struct SampleRecord {
  std::size_t id = 0;
  std::vector<double> multipliers;
  std::vector<double> inputs;
  std::vector<double> targets;
  bool converged = false;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetOptions {
  std::size_t n = 3000;
  double low = 0.8;
  double high = 1.2;
  std::uint64_t seed = 0;
  /// One multiplier per bus for both P and Q instead of independent draws.
  bool coupled = false;
  /// Perturb every bus load, not only PQ buses.
  bool perturb_all_loads = false;
  SolveOptions solve{1e-10, 30, true};
  int threads = 1;

  void validate() const;
};

/// Minimum fraction of converged samples before generation is rejected.
inline constexpr double kMinConvergedFraction = 0.9;

struct DatasetMeta {
  std::uint64_t seed = 0;
  std::size_t n_requested = 0;
  std::size_t n_converged = 0;
  double low = 0.0;
  double high = 0.0;
  bool coupled = false;
  bool perturb_all_loads = false;
  double solver_tol = 0.0;
  std::string network_fingerprint;

  nlohmann::json to_json() const;
};

/// Column names for one network layout.
struct DatasetLayout {
  std::vector<std::string> multipliers;
  std::vector<std::string> inputs;
  std::vector<std::string> targets;
  /// Targets that are angles (radians internally, degrees in files).
  std::vector<bool> target_is_angle;

  static DatasetLayout for_network(const NetworkModel& net, bool coupled, bool perturb_all_loads);
};

struct Dataset {
  DatasetLayout layout;
  std::vector<SampleRecord> samples;
  DatasetMeta meta;
};

Dataset generate(const NetworkModel& net, const DatasetOptions& opts);

/// Seeded shuffle, then the first floor(n * ratio) samples go to training.
std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> split(
    const std::vector<SampleRecord>& samples, double ratio, std::uint64_t seed);

/// Feature / target matrices with one column per sample.
Eigen::MatrixXd input_matrix(const std::vector<SampleRecord>& samples);
Eigen::MatrixXd target_matrix(const std::vector<SampleRecord>& samples);

/// Mismatch infinity norm of the power-flow equations at a sample's
/// (inputs, targets), using the network topology and set-points.
double sample_mismatch(const NetworkModel& net, const SampleRecord& sample);

/// Header row then sample_id, multipliers, inputs, targets, converged.
std::string samples_to_csv(const DatasetLayout& layout, const std::vector<SampleRecord>& samples);

struct LoadedSamples {
  DatasetLayout layout;
  std::vector<SampleRecord> samples;
};
LoadedSamples samples_from_csv(const std::string& text);

}  // namespace qpf
