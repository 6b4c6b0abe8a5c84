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

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpf {

class Spin;

struct CurvePoint {
  double u = 0.0;
  double y = 0.0;
  int collisions_used = 0;
  bool converged = true;
};

/// Sampled transfer curve y(u) of a neuron.
struct ActivationCurve {
  std::vector<CurvePoint> points;
  nlohmann::json provenance = nlohmann::json::object();

  /// Inputs strictly increasing and |y| <= 1 + 1e-9; throws Validation.
  void validate() const;

  std::string to_csv() const;
  static ActivationCurve from_csv(const std::string& text);
};

struct BetaFit {
  double beta = 0.0;
  double rss = 0.0;
  int n_points = 0;
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Steepness of tanh(beta x). Construction validates beta > 0.
class ActivationSpec {
 public:
  explicit ActivationSpec(double beta);
  double beta() const noexcept { return beta_; }

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;

 private:
  double beta_;
};

inline double activate(const ActivationSpec& spec, double x) {
  return std::tanh(spec.beta() * x);
}

inline double activate_deriv(const ActivationSpec& spec, double x) {
  const double t = std::tanh(spec.beta() * x);
  return spec.beta() * (1.0 - t * t);
}

/// Least-squares beta for y ~ tanh(beta u): golden-section search over
/// [1e-3, 100] then Newton refinement. Throws DegenerateCurve.
BetaFit fit_beta(const ActivationCurve& curve);

/// Published steepness per reservoir spin: 1/2, 1, 3/2, 5/2.
const std::map<int, double>& beta_table();  // keyed by 2J
/// Throws UnknownSpin for spins not in the table.
double beta_for_spin(const Spin& spin);

}  // namespace qpf
