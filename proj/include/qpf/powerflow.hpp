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

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qpf/error.hpp"
#include "qpf/grid.hpp"

namespace qpf {

/// Per-bus voltage magnitude (pu) and angle (rad). Every bus is carried; the
/// unknowns are the angles of non-slack buses and the magnitudes of PQ buses,
/// taken in ascending bus order (see NetworkModel::non_slack / pq).
struct StateVector {
  std::vector<double> v_mag;
  std::vector<double> delta;

  /// |V| = 1, delta = 0 on unknowns; slack and PV set-points from the file.
  static StateVector flat_start(const NetworkModel& net);
  /// Magnitudes and angles exactly as written in the bus table.
  static StateVector from_bus_table(const NetworkModel& net);
};

struct Injections {
  std::vector<double> p;  // pu
  std::vector<double> q;  // pu
};

/// Stacked [dP over non-slack buses, dQ over PQ buses].
struct MismatchVector {
  std::vector<double> dp;
  std::vector<double> dq;

  std::size_t size() const noexcept { return dp.size() + dq.size(); }
  Eigen::VectorXd stacked() const;
  double inf_norm() const;
};

/// Blocks of the Newton matrix relating [d_delta; d|V|/|V|] to [dP; dQ]:
/// j11 = dP/d_delta, j12 = |V| dP/d|V|, j21 = dQ/d_delta, j22 = |V| dQ/d|V|.
struct JacobianBlocks {
  Eigen::MatrixXd j11, j12, j21, j22;
  Eigen::MatrixXd assembled() const;
};

struct SolveOptions {
  double tol = 1e-8;  // infinity norm of the mismatch, pu
  int max_iter = 20;
  bool flat_start = true;

  void validate() const;
};

struct PowerFlowSolution {
  std::vector<double> v_mag;   // pu
  std::vector<double> delta;   // rad
  std::vector<double> p_calc;  // pu, net injection
  std::vector<double> q_calc;  // pu
  int iterations = 0;
  double initial_mismatch = 0.0;
  /// Mismatch infinity norm after each Newton update.
  std::vector<double> mismatch_history;
  double tol = 0.0;
  bool converged = false;

  double final_mismatch() const {
    return mismatch_history.empty() ? initial_mismatch : mismatch_history.back();
  }

  nlohmann::json to_json(const NetworkModel& net) const;
  std::string to_csv(const NetworkModel& net) const;
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, PowerFlowSolution partial)
      : Error(ErrorCode::NotConverged, what), partial_(std::move(partial)) {}
  const PowerFlowSolution& partial() const noexcept { return partial_; }

 private:
  PowerFlowSolution partial_;
};

/// Pivot magnitude below which the Newton matrix counts as singular.
inline constexpr double kSingularPivot = 1e-12;

/// Polar-form bus injections for the given state.
Injections calc_injections(const StateVector& state, const NetworkModel& net);

MismatchVector mismatch(const StateVector& state, const NetworkModel& net);

JacobianBlocks jacobian(const StateVector& state, const NetworkModel& net);

/// Dense LU with partial pivoting. Throws SingularJacobian when a pivot falls
/// below kSingularPivot.
Eigen::VectorXd solve_linear(Eigen::MatrixXd a, Eigen::VectorXd b);

struct StepResult {
  StateVector state;
  double mismatch_norm = 0.0;    // at the input state
  double correction_norm = 0.0;  // infinity norm of [d_delta; d|V|/|V|]
};

/// One Newton update from `state`.
StepResult nr_step(const StateVector& state, const NetworkModel& net);

/// Newton-Raphson iteration until the mismatch infinity norm drops below
/// opts.tol. Throws NotConvergedError (with the history so far) after
/// opts.max_iter updates.
PowerFlowSolution solve(const NetworkModel& net, const SolveOptions& opts = {});

/// Fills injections for a converged state (slack P/Q and PV Q included).
PowerFlowSolution make_solution(const NetworkModel& net, const StateVector& state);

}  // namespace qpf
