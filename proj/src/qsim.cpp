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

#include "qpf/qsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "qpf/error.hpp"
#include "qpf/util.hpp"

namespace qpf {

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Spin spin_of_dim(Eigen::Index dim) {
  if (dim < 2) fail(ErrorCode::InvalidSpin, "probe dimension must be >= 2");
  return Spin::from_twice(static_cast<int>(dim) - 1);
}

// Ladder damping of the probe: level m decays to m-1 with probability
// 1 - exp(-gamma tau |<m-1|S-|m>|^2). Reduces to amplitude damping for a qubit.
std::vector<CMatrix> damping_kraus(Spin spin, double gamma, double tau) {
  if (gamma <= 0.0) return {};
  const int d = spin.dim();
  const double j = spin.value();
  CMatrix keep = CMatrix::Zero(d, d);
  CMatrix drop = CMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    const double c2 = j * (j + 1.0) - m * (m - 1.0);
    const double p = k + 1 < d ? 1.0 - std::exp(-gamma * tau * c2) : 0.0;
    keep(k, k) = std::sqrt(1.0 - p);
    if (k + 1 < d) drop(k + 1, k) = std::sqrt(p);
  }
  return {keep, drop};
}

}  // namespace

Spin Spin::from_twice(int twice_j) {
  if (twice_j < 1) fail(ErrorCode::InvalidSpin, "spin must be a positive multiple of 1/2");
  return Spin(twice_j);
}

Spin Spin::from_value(double j) {
  const double twice = 2.0 * j;
  const double rounded = std::round(twice);
  if (!std::isfinite(twice) || std::abs(twice - rounded) > 1e-9 || rounded < 1.0)
    fail(ErrorCode::InvalidSpin, "spin " + format_double(j) + " is not a positive half-integer");
  return Spin(static_cast<int>(rounded));
}

Spin Spin::parse(const std::string& text) {
  try {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return from_value(std::stod(text));
    const int num = std::stoi(text.substr(0, slash));
    const int den = std::stoi(text.substr(slash + 1));
    if (den == 1) return from_twice(2 * num);
    if (den == 2) return from_twice(num);
  } catch (const std::logic_error&) {
  }
  fail(ErrorCode::InvalidSpin, "cannot parse spin '" + text + "'");
}

std::string Spin::label() const {
  return twice_ % 2 == 0 ? std::to_string(twice_ / 2) : std::to_string(twice_) + "/2";
}

double DensityMatrix::hermiticity_error() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const CMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::purity() const { return (rho * rho).trace().real(); }

DensityMatrix DensityMatrix::pure(const CVector& psi) { return {psi * psi.adjoint()}; }

SpinOperators spin_ladder(Spin spin) {
  const int d = spin.dim();
  const double j = spin.value();
  SpinOperators ops{CMatrix::Zero(d, d), CMatrix::Zero(d, d), CMatrix::Zero(d, d)};
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    ops.z(k, k) = m;
    if (k > 0) ops.plus(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  ops.minus = ops.plus.adjoint();
  return ops;
}

void ReservoirSpec::validate() const {
  if (!(g >= 0.0) || !std::isfinite(g)) fail(ErrorCode::InvalidArgument, "g must be >= 0");
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    fail(ErrorCode::InvalidArgument, "theta must lie in [0, pi]");
  if (!std::isfinite(phi)) fail(ErrorCode::InvalidArgument, "phi must be finite");
}

const char* to_string(PropagatorMode mode) noexcept {
  return mode == PropagatorMode::ExactExponential ? "exact" : "second-order";
}

PropagatorMode parse_propagator_mode(const std::string& text) {
  if (text == "exact" || text == "ExactExponential") return PropagatorMode::ExactExponential;
  if (text == "second-order" || text == "truncated" || text == "SecondOrderTruncation")
    return PropagatorMode::SecondOrderTruncation;
  fail(ErrorCode::InvalidArgument, "unknown propagator mode '" + text + "'");
}

void CollisionParams::validate() const {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be > 0");
  if (n_collisions < 1) fail(ErrorCode::InvalidArgument, "n_collisions must be >= 1");
  if (!(gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "gamma must be >= 0");
}

double Evolution::tail_mean() const {
  if (trajectory.empty()) return result.sigma_z;
  const auto start = trajectory.size() / 2;
  double sum = 0.0;
  for (auto i = start; i < trajectory.size(); ++i) sum += trajectory[i];
  return sum / static_cast<double>(trajectory.size() - start);
}

CVector coherent_state(Spin spin, double theta, double phi) {
  const int n = spin.twice();
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  CVector psi(spin.dim());
  for (int k = 0; k <= n; ++k) {
    const double amp = std::sqrt(binomial(n, k)) * std::pow(c, n - k) * std::pow(s, k);
    psi[k] = std::polar(amp, k * phi);
  }
  return psi;
}

DensityMatrix reservoir_unit_state(const ReservoirSpec& spec) {
  spec.validate();
  return DensityMatrix::pure(coherent_state(spec.spin, spec.theta, spec.phi));
}

double magnetization(const DensityMatrix& rho, Spin spin) {
  if (rho.dim() != spin.dim()) fail(ErrorCode::DimensionMismatch, "state/spin dimension mismatch");
  double sum = 0.0;
  for (int k = 0; k < spin.dim(); ++k) sum += (spin.value() - k) * rho.rho(k, k).real();
  return sum / spin.value();
}

CMatrix collision_unitary(Spin probe_spin, const ReservoirSpec& spec,
                          const CollisionParams& params) {
  spec.validate();
  params.validate();
  const auto s = spin_ladder(probe_spin);
  const auto j = spin_ladder(spec.spin);
  const CMatrix exchange = kron(s.plus, j.minus) + kron(s.minus, j.plus);
  const auto dim = exchange.rows();
  const std::complex<double> i1(0.0, 1.0);

  if (params.mode == PropagatorMode::ExactExponential) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(spec.g * exchange);
    CVector phases(dim);
    for (Eigen::Index k = 0; k < dim; ++k)
      phases[k] = std::exp(-i1 * es.eigenvalues()[k] * params.tau);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  const double x = spec.g * params.tau;
  // With a qubit on either side this is S+S- (x) J-J+ + S-S+ (x) J+J-.
  const CMatrix second = exchange * exchange;
  return CMatrix::Identity(dim, dim) - i1 * x * exchange - 0.5 * x * x * second;
}

CollisionChannel::CollisionChannel(Spin probe_spin, const ReservoirSpec& spec,
                                   const CMatrix& unitary, const CollisionParams& params) {
  const int dp = probe_spin.dim();
  const int du = spec.spin.dim();
  if (unitary.rows() != dp * du || unitary.cols() != dp * du)
    fail(ErrorCode::DimensionMismatch, "propagator does not match probe (x) unit dimension");
  const CVector psi = coherent_state(spec.spin, spec.theta, spec.phi);
  // U (I (x) |psi>) maps the probe into probe (x) unit; row block b of each
  // probe index is the Kraus operator <b|U|psi>.
  const CMatrix lifted = unitary * kron(CMatrix::Identity(dp, dp), psi);
  kraus_.assign(du, CMatrix::Zero(dp, dp));
  for (int a = 0; a < dp; ++a)
    for (int b = 0; b < du; ++b) kraus_[b].row(a) = lifted.row(a * du + b);
  damping_ = damping_kraus(probe_spin, params.gamma, params.tau);
}

DensityMatrix CollisionChannel::apply(const DensityMatrix& probe) const {
  CMatrix out = CMatrix::Zero(probe.rho.rows(), probe.rho.cols());
  for (const auto& k : kraus_) out.noalias() += k * probe.rho * k.adjoint();
  if (damping_.empty()) return {out};
  CMatrix damped = CMatrix::Zero(out.rows(), out.cols());
  for (const auto& k : damping_) damped.noalias() += k * out * k.adjoint();
  return {damped};
}

DensityMatrix collide_once(const DensityMatrix& probe, const ReservoirSpec& spec,
                           const CMatrix& unitary, const CollisionParams& params) {
  if (probe.rho.rows() != probe.rho.cols())
    fail(ErrorCode::DimensionMismatch, "probe density matrix must be square");
  return CollisionChannel(spin_of_dim(probe.rho.rows()), spec, unitary, params).apply(probe);
}

Evolution evolve_collisions(const DensityMatrix& probe, const std::vector<ReservoirSpec>& reservoirs,
                            const CollisionParams& params, const Schedule& schedule) {
  params.validate();
  if (reservoirs.empty()) fail(ErrorCode::NoCoupling, "no reservoirs");
  double g2_total = 0.0;
  for (const auto& r : reservoirs) {
    r.validate();
    g2_total += r.g * r.g;
  }
  if (!(g2_total > 0.0)) fail(ErrorCode::NoCoupling, "all reservoir couplings are zero");
  const Spin probe_spin = spin_of_dim(probe.rho.rows());

  const bool random = schedule.kind == Schedule::Kind::WeightedRandom;
  std::vector<CollisionChannel> channels;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (auto spec : reservoirs) {
    acc += spec.g * spec.g / g2_total;
    cumulative.push_back(acc);
    if (random) spec.g = std::sqrt(g2_total);
    channels.emplace_back(probe_spin, spec, collision_unitary(probe_spin, spec, params), params);
  }

  Evolution ev;
  ev.trajectory.reserve(static_cast<std::size_t>(params.n_collisions));
  DensityMatrix state = probe;
  int used = 0;
  bool converged = false;

  if (random) {
    std::mt19937_64 rng(schedule.seed);
    while (used < params.n_collisions) {
      const double draw = uniform01(rng);
      const auto pick = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), draw) - cumulative.begin());
      state = channels[std::min(pick, channels.size() - 1)].apply(state);
      ++used;
      ev.trajectory.push_back(magnetization(state, probe_spin));
    }
  } else {
    double cycle_start = magnetization(state, probe_spin);
    while (used < params.n_collisions && !converged) {
      for (const auto& ch : channels) {
        state = ch.apply(state);
        ++used;
        ev.trajectory.push_back(magnetization(state, probe_spin));
        if (used == params.n_collisions) break;
      }
      const double now = ev.trajectory.back();
      if (used % static_cast<int>(channels.size()) == 0 &&
          std::abs(now - cycle_start) < kSteadyStateThreshold)
        converged = true;
      cycle_start = now;
    }
  }

  ev.result.sigma_z = magnetization(state, probe_spin);
  ev.result.rho = std::move(state);
  ev.result.collisions_used = used;
  ev.result.converged = converged;
  return ev;
}

double steady_state_closed_form(const std::vector<ReservoirSpec>& reservoirs) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : reservoirs) {
    r.validate();
    const double w = r.g * r.g;
    num += w * magnetization(reservoir_unit_state(r), r.spin);
    den += w;
  }
  if (!(den > 0.0)) fail(ErrorCode::NoCoupling, "all reservoir couplings are zero");
  return num / den;
}

const char* to_string(SpinSite site) noexcept {
  return site == SpinSite::Probe ? "probe" : "reservoir";
}

SpinSite parse_spin_site(const std::string& text) {
  if (text == "probe") return SpinSite::Probe;
  if (text == "reservoir") return SpinSite::Reservoir;
  fail(ErrorCode::InvalidArgument, "unknown spin site '" + text + "'");
}

ActivationCurve transfer_curve(const TransferOptions& opts) {
  if (opts.n_points < 5 || opts.n_points % 2 == 0)
    fail(ErrorCode::InvalidArgument, "n_points must be odd and >= 5");
  if (!(opts.g > 0.0)) fail(ErrorCode::NoCoupling, "g must be > 0");
  opts.params.validate();

  const Spin probe_spin = opts.site == SpinSite::Probe ? opts.spin : kSpinHalf;
  const Spin unit_spin = opts.site == SpinSite::Probe ? kSpinHalf : opts.spin;
  const auto start = DensityMatrix::pure(coherent_state(probe_spin, 0.5 * std::numbers::pi, 0.0));
  const int n = opts.n_points;

  ActivationCurve curve;
  curve.points.resize(static_cast<std::size_t>(n));
  auto run_point = [&](int k) {
    const double u = static_cast<double>(2 * k - (n - 1)) / (n - 1);
    std::vector<ReservoirSpec> res{
        {0.0, 0.0, unit_spin, opts.g * std::sqrt(0.5 * (1.0 + u))},
        {std::numbers::pi, 0.0, unit_spin, opts.g * std::sqrt(0.5 * (1.0 - u))},
    };
    Schedule sched = opts.schedule;
    if (sched.kind == Schedule::Kind::WeightedRandom)
      sched.seed = mix_seed(opts.schedule.seed, static_cast<std::uint64_t>(k));
    const auto ev = evolve_collisions(start, res, opts.params, sched);
    const double y = sched.kind == Schedule::Kind::WeightedRandom ? ev.tail_mean()
                                                                  : ev.result.sigma_z;
    curve.points[static_cast<std::size_t>(k)] = {u, y, ev.result.collisions_used,
                                                 ev.result.converged};
  };

  const int workers = std::clamp(opts.threads, 1, n);
  if (workers == 1) {
    for (int k = 0; k < n; ++k) run_point(k);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (int k = next++; k < n; k = next++) {
            try {
              run_point(k);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  curve.provenance = {
      {"source", "transfer_curve"},
      {"spin", opts.spin.label()},
      {"spin_site", to_string(opts.site)},
      {"g", opts.g},
      {"tau", opts.params.tau},
      {"gamma", opts.params.gamma},
      {"n_collisions", opts.params.n_collisions},
      {"mode", to_string(opts.params.mode)},
      {"schedule", opts.schedule.kind == Schedule::Kind::RoundRobin ? "round-robin"
                                                                     : "weighted-random"},
      {"seed", opts.schedule.seed},
  };
  return curve;
}

}  // namespace qpf
