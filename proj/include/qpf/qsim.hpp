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
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpf/activation.hpp"

namespace qpf {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Spin quantum number J stored as the integer 2J so that half-integers are
/// exact. Basis index k of a spin-J space is the state m = J - k (index 0 is
/// the top state; for J = 1/2 that is |e>).
class Spin {
 public:
  /// Throws InvalidSpin unless 2J is a positive integer.
  static Spin from_twice(int twice_j);
  static Spin from_value(double j);
  /// Accepts "5/2", "2.5", "1".
  static Spin parse(const std::string& text);

  int twice() const noexcept { return twice_; }
  double value() const noexcept { return 0.5 * twice_; }
  int dim() const noexcept { return twice_ + 1; }
  std::string label() const;

  friend auto operator<=>(const Spin&, const Spin&) = default;

 private:
  explicit Spin(int twice_j) : twice_(twice_j) {}
  int twice_ = 1;
};

inline const Spin kSpinHalf = Spin::from_twice(1);

struct DensityMatrix {
  CMatrix rho;

  int dim() const noexcept { return static_cast<int>(rho.rows()); }
  std::complex<double> trace() const { return rho.trace(); }
  /// max |rho - rho^dagger|.
  double hermiticity_error() const;
  double min_eigenvalue() const;
  double purity() const;

  static DensityMatrix pure(const CVector& psi);
};

struct SpinOperators {
  CMatrix plus;
  CMatrix minus;
  CMatrix z;
};

/// Ladder and z operators in the m = J..-J basis. Throws InvalidSpin.
SpinOperators spin_ladder(Spin spin);

/// One unit of an information reservoir: a spin-J coherent state pointing at
/// (theta, phi), coupled to the probe with strength g.
struct ReservoirSpec {
  double theta = 0.0;  // rad, 0 is the top (excited) state
  double phi = 0.0;    // rad
  Spin spin = kSpinHalf;
  double g = 0.01;

  void validate() const;
};

enum class PropagatorMode { ExactExponential, SecondOrderTruncation };

const char* to_string(PropagatorMode mode) noexcept;
PropagatorMode parse_propagator_mode(const std::string& text);

struct CollisionParams {
  double tau = 3.0;
  int n_collisions = 20000;
  double gamma = 0.0;  // probe amplitude-damping rate
  PropagatorMode mode = PropagatorMode::ExactExponential;

  void validate() const;
};

/// Fixed-point threshold on the magnetization change over one schedule cycle.
inline constexpr double kSteadyStateThreshold = 1e-9;

struct SteadyStateResult {
  double sigma_z = 0.0;  // normalized probe magnetization <S_z>/S
  DensityMatrix rho;
  int collisions_used = 0;
  bool converged = false;
};

struct Schedule {
  enum class Kind { RoundRobin, WeightedRandom };
  Kind kind = Kind::RoundRobin;
  std::uint64_t seed = 0;

  static Schedule round_robin() { return {}; }
  static Schedule weighted_random(std::uint64_t seed) { return {Kind::WeightedRandom, seed}; }
};

struct Evolution {
  SteadyStateResult result;
  /// Probe magnetization after every collision.
  std::vector<double> trajectory;
  /// Mean magnetization over the second half of the trajectory.
  double tail_mean() const;
};

/// Spin-J coherent state |J; theta, phi>.
CVector coherent_state(Spin spin, double theta, double phi);

DensityMatrix reservoir_unit_state(const ReservoirSpec& spec);

/// Normalized magnetization <S_z>/S of a state of the given spin.
double magnetization(const DensityMatrix& rho, Spin spin);

/// Propagator for H = g (S+ (x) J- + S- (x) J+) over time tau on probe (x)
/// unit. ExactExponential uses the spectral decomposition of H; the truncated
/// mode keeps terms through second order in g*tau.
CMatrix collision_unitary(Spin probe_spin, const ReservoirSpec& spec,
                          const CollisionParams& params);
inline CMatrix collision_unitary(const ReservoirSpec& spec, const CollisionParams& params) {
  return collision_unitary(kSpinHalf, spec, params);
}

/// Probe map for one collision with a fresh unit, as Kraus operators. Includes
/// the amplitude damping of the probe when gamma > 0.
class CollisionChannel {
 public:
  CollisionChannel(Spin probe_spin, const ReservoirSpec& spec, const CMatrix& unitary,
                   const CollisionParams& params);

  DensityMatrix apply(const DensityMatrix& probe) const;
  const std::vector<CMatrix>& kraus() const noexcept { return kraus_; }

 private:
  std::vector<CMatrix> kraus_;
  std::vector<CMatrix> damping_;
};

/// tr_unit(U (rho (x) rho_unit) U^dagger) followed by probe damping. The probe
/// spin is inferred from the probe dimension.
DensityMatrix collide_once(const DensityMatrix& probe, const ReservoirSpec& spec,
                           const CMatrix& unitary, const CollisionParams& params);

/// Repeated collisions until the magnetization settles or n_collisions is
/// reached. RoundRobin cycles through the reservoirs, each with its own g.
/// WeightedRandom draws reservoir i with probability g_i^2 / sum g^2 and
/// couples it with sqrt(sum g^2), so the expected per-collision map is the
/// convex combination of the individual maps. Stochastic schedules never
/// report a fixed point; use tail_mean() for their steady value.
Evolution evolve_collisions(const DensityMatrix& probe, const std::vector<ReservoirSpec>& reservoirs,
                            const CollisionParams& params, const Schedule& schedule = {});

/// g^2-weighted mean of reservoir magnetizations.
double steady_state_closed_form(const std::vector<ReservoirSpec>& reservoirs);

/// Which subsystem carries the spin J of a transfer-curve sweep.
enum class SpinSite {
  Probe,      // spin-J neuron fed by qubit reservoirs
  Reservoir,  // qubit probe fed by spin-J reservoir units
};

const char* to_string(SpinSite site) noexcept;
SpinSite parse_spin_site(const std::string& text);

struct TransferOptions {
  Spin spin = kSpinHalf;
  SpinSite site = SpinSite::Probe;
  double g = 0.01;
  int n_points = 41;
  CollisionParams params;
  Schedule schedule;
  int threads = 1;  // sweep points are independent
};

/// Sweeps u over [-1, 1] with two pole reservoirs (theta = 0 and pi) whose
/// squared couplings are g^2 (1 + u)/2 and g^2 (1 - u)/2, starting every point
/// from the equator state of the probe.
ActivationCurve transfer_curve(const TransferOptions& opts);

}  // namespace qpf
