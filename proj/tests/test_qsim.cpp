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

#include <random>

#include <doctest.h>

#include "oracles/oracles.hpp"
#include "qpf/error.hpp"
#include "qpf/qsim.hpp"

using qpf::CMatrix;
using qpf::Spin;

namespace {

const std::vector<Spin> kSpins = {Spin::from_twice(1), Spin::from_twice(2), Spin::from_twice(3),
                                  Spin::from_twice(5)};

qpf::DensityMatrix basis(int dim, int k) {
  qpf::CVector psi = qpf::CVector::Zero(dim);
  psi(k) = 1.0;
  return qpf::DensityMatrix::pure(psi);
}

}  // namespace

TEST_CASE("spin parsing") {
  CHECK(Spin::parse("5/2").twice() == 5);
  CHECK(Spin::parse("2.5").twice() == 5);
  CHECK(Spin::parse("1").twice() == 2);
  CHECK(Spin::parse("3/2").label() == "3/2");
  CHECK(Spin::from_value(1.5).dim() == 4);
  for (const char* bad : {"0", "-1/2", "1/3", "0.3", "abc", ""}) {
    try {
      Spin::parse(bad);
      FAIL("accepted " << bad);
    } catch (const qpf::Error& e) {
      CHECK(e.code() == qpf::ErrorCode::InvalidSpin);
    }
  }
  CHECK_THROWS_AS(Spin::from_twice(0), qpf::Error);
}

TEST_CASE("ladder operators satisfy the angular momentum algebra") {
  for (auto s : kSpins) {
    const auto ops = qpf::spin_ladder(s);
    const int d = s.dim();
    const CMatrix comm = ops.plus * ops.minus - ops.minus * ops.plus;
    CHECK((comm - 2.0 * ops.z).norm() < 1e-12);
    CHECK((ops.z * ops.plus - ops.plus * ops.z - ops.plus).norm() < 1e-12);
    CHECK((ops.minus - ops.plus.adjoint()).norm() < 1e-12);
    const CMatrix casimir = ops.z * ops.z + 0.5 * (comm + 2.0 * ops.minus * ops.plus);
    const double j = s.value();
    CHECK((casimir - j * (j + 1) * CMatrix::Identity(d, d)).norm() < 1e-10);
    CHECK(ops.z(0, 0).real() == doctest::Approx(j));
  }
}

TEST_CASE("coherent states") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.0, M_PI), ph(0.0, 2 * M_PI);
  for (auto s : kSpins) {
    for (int trial = 0; trial < 10; ++trial) {
      const double theta = th(rng), phi = ph(rng);
      const auto psi = qpf::coherent_state(s, theta, phi);
      CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
      const auto rho = qpf::DensityMatrix::pure(psi);
      CHECK(qpf::magnetization(rho, s) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
      CHECK(rho.purity() == doctest::Approx(1.0));
    }
    CHECK(qpf::magnetization(basis(s.dim(), 0), s) == doctest::Approx(1.0));
    CHECK(qpf::magnetization(basis(s.dim(), s.dim() - 1), s) == doctest::Approx(-1.0));
  }
}

TEST_CASE("collision unitary is unitary in both modes") {
  for (auto probe : kSpins)
    for (auto unit : kSpins) {
      qpf::ReservoirSpec spec{0.7, 0.3, unit, 0.01};
      qpf::CollisionParams exact;
      const CMatrix u = qpf::collision_unitary(probe, spec, exact);
      const auto n = u.rows();
      CHECK(n == probe.dim() * unit.dim());
      CHECK((u * u.adjoint() - CMatrix::Identity(n, n)).norm() < 1e-12);
      // The truncation error is third order in tau.
      auto err = [&](double tau) {
        qpf::CollisionParams e, t;
        e.tau = t.tau = tau;
        t.mode = qpf::PropagatorMode::SecondOrderTruncation;
        return (qpf::collision_unitary(probe, spec, e) - qpf::collision_unitary(probe, spec, t))
            .norm();
      };
      const double ratio = err(0.4) / err(0.2);
      CHECK(ratio > 7.0);
      CHECK(ratio < 9.0);
    }
}

TEST_CASE("qubit swap collision matches the analytic rotation") {
  const double g = 0.2, tau = 3.0;
  qpf::ReservoirSpec excited{0.0, 0.0, qpf::kSpinHalf, g};
  qpf::CollisionParams params;
  params.tau = tau;
  const auto u = qpf::collision_unitary(excited, params);
  const auto out = qpf::collide_once(basis(2, 1), excited, u, params);
  CHECK(qpf::magnetization(out, qpf::kSpinHalf) ==
        doctest::Approx(-std::cos(2 * g * tau)).epsilon(1e-12));
}

TEST_CASE("channel is trace preserving") {
  for (auto probe : kSpins) {
    qpf::ReservoirSpec spec{1.1, 0.4, qpf::kSpinHalf, 0.03};
    qpf::CollisionParams params;
    params.gamma = 0.01;
    qpf::CollisionChannel ch(probe, spec, qpf::collision_unitary(probe, spec, params), params);
    const int d = probe.dim();
    CMatrix sum = CMatrix::Zero(d, d);
    for (const auto& k : ch.kraus()) sum += k.adjoint() * k;
    CHECK((sum - CMatrix::Identity(d, d)).norm() < 1e-12);
    const auto rho = ch.apply(qpf::DensityMatrix::pure(qpf::coherent_state(probe, 0.9, 0.2)));
    CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    CHECK(rho.hermiticity_error() < 1e-12);
    CHECK(rho.min_eigenvalue() > -1e-12);
  }
}

TEST_CASE("single pole reservoir steady state follows the reservoir") {
  qpf::CollisionParams params;
  params.n_collisions = 200000;
  for (double theta : {0.0, M_PI}) {
    const std::vector<qpf::ReservoirSpec> res{{theta, 0.0, qpf::kSpinHalf, 0.01}};
    for (int start : {0, 1}) {
      const auto ev = qpf::evolve_collisions(basis(2, start), res, params);
      CHECK(ev.result.converged);
      CHECK(std::abs(ev.result.sigma_z - std::cos(theta)) < 1e-3);
    }
  }
}

TEST_CASE("tilted reservoir drives the probe towards saturation") {
  // Unit coherence acts as a first-order drive, relaxation is second order.
  qpf::CollisionParams params;
  params.n_collisions = 200000;
  const std::vector<qpf::ReservoirSpec> res{{0.6, 0.0, qpf::kSpinHalf, 0.01}};
  const auto ev = qpf::evolve_collisions(basis(2, 1), res, params);
  CHECK(std::abs(ev.result.sigma_z) < 0.05);
  CHECK(qpf::steady_state_closed_form(res) == doctest::Approx(std::cos(0.6)));
}

TEST_CASE("two pole reservoirs reach the weighted mean") {
  qpf::CollisionParams params;
  params.n_collisions = 200000;
  const std::vector<double> g{0.01, 0.02}, theta{0.0, M_PI};
  const std::vector<qpf::ReservoirSpec> res{{theta[0], 0.0, qpf::kSpinHalf, g[0]},
                                            {theta[1], 1.0, qpf::kSpinHalf, g[1]}};
  const double expected = oracle::weighted_polarization(g, theta);
  CHECK(expected == doctest::Approx(-0.6));
  CHECK(qpf::steady_state_closed_form(res) == doctest::Approx(expected).epsilon(1e-12));
  const auto ev = qpf::evolve_collisions(basis(2, 0), res, params);
  CHECK(std::abs(ev.result.sigma_z - expected) < 1e-3);
}

TEST_CASE("weighted random schedule averages to the weighted mean") {
  qpf::CollisionParams params;
  params.n_collisions = 60000;
  const std::vector<qpf::ReservoirSpec> res{{0.0, 0.0, qpf::kSpinHalf, 0.01},
                                            {M_PI, 0.0, qpf::kSpinHalf, 0.02}};
  const auto ev = qpf::evolve_collisions(basis(2, 0), res, params, qpf::Schedule::weighted_random(9));
  CHECK_FALSE(ev.result.converged);
  CHECK(ev.trajectory.size() == 60000);
  CHECK(std::abs(ev.tail_mean() - qpf::steady_state_closed_form(res)) < 0.05);
  const auto again =
      qpf::evolve_collisions(basis(2, 0), res, params, qpf::Schedule::weighted_random(9));
  CHECK(again.trajectory == ev.trajectory);
}

TEST_CASE("pole reservoir mixtures stay inside the bound") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> gg(0.005, 0.02);
  qpf::CollisionParams params;
  params.n_collisions = 200000;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<qpf::ReservoirSpec> res;
    std::vector<double> g, theta;
    for (int k = 0; k < 3; ++k) {
      theta.push_back(k == 0 ? 0.0 : M_PI);
      g.push_back(gg(rng));
      res.push_back({theta.back(), 0.0, qpf::kSpinHalf, g.back()});
    }
    const auto ev = qpf::evolve_collisions(basis(2, 1), res, params);
    CHECK(ev.result.sigma_z >= -1.0 - 1e-3);
    CHECK(ev.result.sigma_z <= 1.0 + 1e-3);
    CHECK(std::abs(ev.result.sigma_z - oracle::weighted_polarization(g, theta)) < 2e-3);
    CHECK(ev.result.sigma_z ==
          doctest::Approx(oracle::pole_cycle_fixed_point(g, {true, false, false}, 3.0))
              .epsilon(1e-6));
  }
}

TEST_CASE("no coupling is an error") {
  const std::vector<qpf::ReservoirSpec> res{{0.0, 0.0, qpf::kSpinHalf, 0.0}};
  try {
    qpf::steady_state_closed_form(res);
    FAIL("no throw");
  } catch (const qpf::Error& e) {
    CHECK(e.code() == qpf::ErrorCode::NoCoupling);
  }
  CHECK_THROWS_AS(qpf::evolve_collisions(basis(2, 0), res, {}), qpf::Error);
  CHECK_THROWS_AS(qpf::evolve_collisions(basis(2, 0), {}, {}), qpf::Error);
}

TEST_CASE("damping pulls the probe down") {
  qpf::CollisionParams params;
  params.gamma = 0.01;
  params.n_collisions = 100000;
  const std::vector<qpf::ReservoirSpec> res{{0.0, 0.0, qpf::kSpinHalf, 0.01}};
  const auto ev = qpf::evolve_collisions(basis(2, 1), res, params);
  CHECK(ev.result.sigma_z < 0.9);
}

TEST_CASE("transfer curve shape") {
  qpf::TransferOptions opts;
  opts.n_points = 5;
  opts.params.n_collisions = 100000;
  const auto curve = qpf::transfer_curve(opts);
  REQUIRE(curve.points.size() == 5);
  CHECK(curve.points[0].u == -1.0);
  CHECK(curve.points[2].u == 0.0);
  CHECK(std::abs(curve.points[2].y) < 1e-3);
  CHECK(curve.points[4].y == doctest::Approx(-curve.points[0].y).epsilon(1e-6));
  for (std::size_t k = 1; k < 5; ++k) CHECK(curve.points[k].y > curve.points[k - 1].y);
  CHECK(curve.provenance["spin"] == "1/2");
}

TEST_CASE("threads do not change the curve") {
  qpf::TransferOptions opts;
  opts.n_points = 7;
  opts.spin = Spin::from_twice(3);
  opts.params.n_collisions = 5000;
  const auto serial = qpf::transfer_curve(opts);
  opts.threads = 3;
  const auto parallel = qpf::transfer_curve(opts);
  CHECK(serial.to_csv() == parallel.to_csv());
}

TEST_CASE("second-order propagator tracks the exact one") {
  qpf::TransferOptions opts;
  opts.n_points = 9;
  opts.params.n_collisions = 100000;
  const auto exact = qpf::transfer_curve(opts);
  opts.params.mode = qpf::PropagatorMode::SecondOrderTruncation;
  const auto trunc = qpf::transfer_curve(opts);
  for (std::size_t k = 0; k < exact.points.size(); ++k)
    CHECK(std::abs(exact.points[k].y - trunc.points[k].y) < 1e-3);
}

TEST_CASE("option parsing") {
  CHECK(qpf::parse_propagator_mode("exact") == qpf::PropagatorMode::ExactExponential);
  CHECK(qpf::parse_propagator_mode("second-order") == qpf::PropagatorMode::SecondOrderTruncation);
  CHECK(qpf::parse_spin_site("reservoir") == qpf::SpinSite::Reservoir);
  CHECK_THROWS_AS(qpf::parse_spin_site("both"), qpf::Error);
  qpf::CollisionParams bad;
  bad.tau = -1;
  CHECK_THROWS_AS(bad.validate(), qpf::Error);
}
