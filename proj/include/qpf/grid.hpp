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

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpf {

enum class BusKind { Slack, PV, PQ };

const char* to_string(BusKind kind) noexcept;

/// One row of the bus table. Powers are in MW / Mvar as written in the
/// network file; the angle stays in degrees so that files round-trip exactly.
struct BusRecord {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double p_load = 0.0;
  double q_load = 0.0;
  std::optional<double> p_gen;  // absent for Slack
  std::optional<double> q_gen;  // absent for Slack and PV
  double v_mag = 1.0;
  double v_angle = 0.0;  // degrees

  double v_angle_rad() const noexcept;

  friend bool operator==(const BusRecord&, const BusRecord&) = default;
};

/// Dense complex bus admittance matrix in per-unit.
class AdmittanceMatrix {
 public:
  AdmittanceMatrix() = default;
  explicit AdmittanceMatrix(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  std::complex<double>& operator()(std::size_t i, std::size_t j) {
    return entries_[i * n_ + j];
  }
  const std::complex<double>& operator()(std::size_t i, std::size_t j) const {
    return entries_[i * n_ + j];
  }

  double conductance(std::size_t i, std::size_t j) const { return (*this)(i, j).real(); }
  double susceptance(std::size_t i, std::size_t j) const { return (*this)(i, j).imag(); }
  double magnitude(std::size_t i, std::size_t j) const { return std::abs((*this)(i, j)); }
  /// Polar angle in radians.
  double angle(std::size_t i, std::size_t j) const { return std::arg((*this)(i, j)); }

  /// Largest |Y_ij - Y_ji|.
  double asymmetry() const;

  friend bool operator==(const AdmittanceMatrix&, const AdmittanceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::complex<double>> entries_;
};

struct PerUnitBase {
  double s_base = 100.0;  // MVA
  friend bool operator==(const PerUnitBase&, const PerUnitBase&) = default;
};

/// Scheduled net injection at a bus, per-unit. Empty optionals mark the
/// quantities that the bus type leaves free (slack P and Q, PV Q).
struct ScheduledInjection {
  std::optional<double> p;
  std::optional<double> q;
};

/// A validated network. Immutable once constructed.
class NetworkModel {
 public:
  /// Validates and takes ownership; throws ValidationError on violations.
  NetworkModel(std::vector<BusRecord> buses, AdmittanceMatrix ybus, PerUnitBase base);

  const std::vector<BusRecord>& buses() const noexcept { return buses_; }
  const AdmittanceMatrix& ybus() const noexcept { return ybus_; }
  const PerUnitBase& base() const noexcept { return base_; }
  std::size_t size() const noexcept { return buses_.size(); }

  /// Zero-based index of the slack bus.
  std::size_t slack_index() const noexcept { return slack_; }
  /// Zero-based indices of non-slack buses, ascending.
  const std::vector<std::size_t>& non_slack() const noexcept { return non_slack_; }
  /// Zero-based indices of PQ buses, ascending.
  const std::vector<std::size_t>& pq() const noexcept { return pq_; }
  /// Zero-based indices of the slack then the PV buses.
  std::vector<std::size_t> voltage_controlled() const;

  /// Copy with every bus load replaced (MW, Mvar); used for load perturbation.
  NetworkModel with_loads(const std::vector<double>& p_load,
                          const std::vector<double>& q_load) const;

  nlohmann::json to_json() const;
  static NetworkModel from_json(const nlohmann::json& doc);

  /// Content hash of the canonical serialization.
  std::string fingerprint() const;

  friend bool operator==(const NetworkModel& a, const NetworkModel& b) {
    return a.buses_ == b.buses_ && a.ybus_ == b.ybus_ && a.base_ == b.base_;
  }

 private:
  std::vector<BusRecord> buses_;
  AdmittanceMatrix ybus_;
  PerUnitBase base_;
  std::size_t slack_ = 0;
  std::vector<std::size_t> non_slack_;
  std::vector<std::size_t> pq_;
};

/// Tolerance for YBUS reciprocity at load time.
inline constexpr double kYbusSymmetryTol = 1e-9;

/// Loads a network document. A path without extension also resolves to
/// `<path>.json` when only the latter exists.
NetworkModel load_network(const std::filesystem::path& path);
void save_network(const NetworkModel& net, const std::filesystem::path& path);

std::vector<ScheduledInjection> scheduled_injections(const NetworkModel& net);

}  // namespace qpf
