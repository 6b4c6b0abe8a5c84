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

#include "qpf/powerflow.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qpf/util.hpp"

namespace qpf {

using nlohmann::json;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_dims(const StateVector& state, const NetworkModel& net) {
  if (state.v_mag.size() != net.size() || state.delta.size() != net.size())
    fail(ErrorCode::DimensionMismatch,
         "state has " + std::to_string(state.v_mag.size()) + "/" +
             std::to_string(state.delta.size()) + " entries for a " +
             std::to_string(net.size()) + "-bus network");
}

}  // namespace

StateVector StateVector::flat_start(const NetworkModel& net) {
  StateVector s;
  s.v_mag.assign(net.size(), 1.0);
  s.delta.assign(net.size(), 0.0);
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& bus = net.buses()[i];
    if (bus.kind != BusKind::PQ) s.v_mag[i] = bus.v_mag;
    if (bus.kind == BusKind::Slack) s.delta[i] = bus.v_angle_rad();
  }
  return s;
}

StateVector StateVector::from_bus_table(const NetworkModel& net) {
  StateVector s;
  for (const auto& bus : net.buses()) {
    s.v_mag.push_back(bus.v_mag);
    s.delta.push_back(bus.v_angle_rad());
  }
  return s;
}

Eigen::VectorXd MismatchVector::stacked() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  Eigen::Index k = 0;
  for (double v : dp) out[k++] = v;
  for (double v : dq) out[k++] = v;
  return out;
}

double MismatchVector::inf_norm() const {
  double worst = 0.0;
  for (double v : dp) worst = std::isnan(v) ? v : std::max(worst, std::abs(v));
  for (double v : dq) worst = std::isnan(v) ? v : std::max(worst, std::abs(v));
  return worst;
}

Eigen::MatrixXd JacobianBlocks::assembled() const {
  const auto np = j11.rows();
  const auto nq = j21.rows();
  Eigen::MatrixXd out(np + nq, j11.cols() + j12.cols());
  out << j11, j12, j21, j22;
  return out;
}

void SolveOptions::validate() const {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tol must be > 0");
  if (max_iter < 1) fail(ErrorCode::InvalidArgument, "max_iter must be >= 1");
}

Injections calc_injections(const StateVector& state, const NetworkModel& net) {
  check_dims(state, net);
  const auto& y = net.ybus();
  const auto n = net.size();
  Injections out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = state.v_mag[i];
    double p = vi * vi * y.conductance(i, i);
    double q = -vi * vi * y.susceptance(i, i);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double mag = vi * state.v_mag[k] * y.magnitude(i, k);
      if (mag == 0.0) continue;
      const double arg = y.angle(i, k) + state.delta[k] - state.delta[i];
      p += mag * std::cos(arg);
      q -= mag * std::sin(arg);
    }
    out.p[i] = p;
    out.q[i] = q;
  }
  return out;
}

MismatchVector mismatch(const StateVector& state, const NetworkModel& net) {
  const auto calc = calc_injections(state, net);
  const auto sched = scheduled_injections(net);
  MismatchVector m;
  for (auto i : net.non_slack()) m.dp.push_back(*sched[i].p - calc.p[i]);
  for (auto i : net.pq()) m.dq.push_back(*sched[i].q - calc.q[i]);
  return m;
}

JacobianBlocks jacobian(const StateVector& state, const NetworkModel& net) {
  check_dims(state, net);
  const auto& y = net.ybus();
  const auto n = net.size();

  // Full n x n partials; the reduced blocks are sliced out below.
  // m(i,k) = -|ViVkYik| sin(theta + dk - di), nn(i,k) = -|ViVkYik| cos(...).
  Eigen::MatrixXd dp_dd = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd dp_dv = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd dq_dd = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd dq_dv = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = state.v_mag[i];
    double m_sum = 0.0;
    double n_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double mag = vi * state.v_mag[k] * y.magnitude(i, k);
      const double arg = y.angle(i, k) + state.delta[k] - state.delta[i];
      const double m_ik = -mag * std::sin(arg);
      const double n_ik = -mag * std::cos(arg);
      dp_dd(i, k) = m_ik;
      dp_dv(i, k) = -n_ik;
      dq_dd(i, k) = n_ik;
      dq_dv(i, k) = m_ik;
      m_sum += m_ik;
      n_sum += n_ik;
    }
    const double m_ii = -m_sum;
    const double n_ii = -n_sum;
    dp_dd(i, i) = m_ii;
    dp_dv(i, i) = n_ii + 2.0 * vi * vi * y.conductance(i, i);
    dq_dd(i, i) = n_ii;
    dq_dv(i, i) = -m_ii - 2.0 * vi * vi * y.susceptance(i, i);
  }

  const auto& ang = net.non_slack();
  const auto& pq = net.pq();
  auto slice = [](const Eigen::MatrixXd& full, const std::vector<std::size_t>& rows,
                  const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = full(rows[r], cols[c]);
    return out;
  };
  return {slice(dp_dd, ang, ang), slice(dp_dv, ang, pq), slice(dq_dd, pq, ang),
          slice(dq_dv, pq, pq)};
}

Eigen::VectorXd solve_linear(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const auto n = a.rows();
  if (a.cols() != n || b.size() != n)
    fail(ErrorCode::DimensionMismatch, "linear system is not square");
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (!(std::abs(a(pivot, col)) >= kSingularPivot))
      fail(ErrorCode::SingularJacobian,
           "pivot " + format_double(a(pivot, col)) + " in column " + std::to_string(col));
    if (pivot != col) {
      a.row(col).swap(a.row(pivot));
      std::swap(b[col], b[pivot]);
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      a.row(r).tail(n - col) -= f * a.row(col).tail(n - col);
      b[r] -= f * b[col];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (Eigen::Index c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
    x[r] = s / a(r, r);
  }
  return x;
}

StepResult nr_step(const StateVector& state, const NetworkModel& net) {
  const auto m = mismatch(state, net);
  const auto j = jacobian(state, net).assembled();
  const Eigen::VectorXd dx = solve_linear(j, m.stacked());

  StepResult out{state, m.inf_norm(), dx.lpNorm<Eigen::Infinity>()};
  const auto& ang = net.non_slack();
  const auto& pq = net.pq();
  for (std::size_t k = 0; k < ang.size(); ++k) out.state.delta[ang[k]] += dx[k];
  for (std::size_t k = 0; k < pq.size(); ++k) {
    const auto i = pq[k];
    out.state.v_mag[i] *= 1.0 + dx[static_cast<Eigen::Index>(ang.size() + k)];
  }
  return out;
}

PowerFlowSolution make_solution(const NetworkModel& net, const StateVector& state) {
  const auto inj = calc_injections(state, net);
  PowerFlowSolution sol;
  sol.v_mag = state.v_mag;
  sol.delta = state.delta;
  sol.p_calc = inj.p;
  sol.q_calc = inj.q;
  return sol;
}

PowerFlowSolution solve(const NetworkModel& net, const SolveOptions& opts) {
  opts.validate();
  auto state = opts.flat_start ? StateVector::flat_start(net) : StateVector::from_bus_table(net);
  const double initial = mismatch(state, net).inf_norm();
  std::vector<double> history;
  int iterations = 0;
  bool converged = initial < opts.tol;
  while (!converged && iterations < opts.max_iter) {
    state = nr_step(state, net).state;
    ++iterations;
    history.push_back(mismatch(state, net).inf_norm());
    converged = history.back() < opts.tol;
  }

  auto sol = make_solution(net, state);
  sol.iterations = iterations;
  sol.initial_mismatch = initial;
  sol.mismatch_history = std::move(history);
  sol.tol = opts.tol;
  sol.converged = converged;
  if (!converged) {
    const auto what = "no convergence after " + std::to_string(iterations) +
                      " iterations (mismatch " + format_double(sol.final_mismatch()) + ")";
    throw NotConvergedError(what, std::move(sol));
  }
  return sol;
}

json PowerFlowSolution::to_json(const NetworkModel& net) const {
  json buses = json::array();
  for (std::size_t i = 0; i < v_mag.size(); ++i) {
    buses.push_back({{"bus", net.buses()[i].id},
                     {"kind", to_string(net.buses()[i].kind)},
                     {"v_mag_pu", v_mag[i]},
                     {"delta_deg", delta[i] * kRadToDeg},
                     {"p_pu", p_calc[i]},
                     {"q_pu", q_calc[i]}});
  }
  return {{"buses", std::move(buses)},
          {"convergence",
           {{"converged", converged},
            {"iterations", iterations},
            {"tol", tol},
            {"initial_mismatch", initial_mismatch},
            {"mismatch_history", mismatch_history}}}};
}

std::string PowerFlowSolution::to_csv(const NetworkModel& net) const {
  std::ostringstream out;
  out << "bus,kind,v_mag_pu,delta_deg,p_pu,q_pu\n";
  for (std::size_t i = 0; i < v_mag.size(); ++i) {
    out << net.buses()[i].id << ',' << to_string(net.buses()[i].kind) << ','
        << format_double(v_mag[i]) << ',' << format_double(delta[i] * kRadToDeg) << ','
        << format_double(p_calc[i]) << ',' << format_double(q_calc[i]) << '\n';
  }
  return out.str();
}

}  // namespace qpf
