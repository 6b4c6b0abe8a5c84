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

#include <algorithm>
#include <random>

#include <doctest.h>

#include "oracles/oracles.hpp"
#include "qpf/error.hpp"
#include "qpf/powerflow.hpp"
#include "qpf/util.hpp"
#include "test_support.hpp"

using testing_support::reference_network;

namespace {

qpf::StateVector random_state(std::mt19937_64& rng) {
  const auto& net = reference_network();
  auto s = qpf::StateVector::flat_start(net);
  std::uniform_real_distribution<double> mag(0.9, 1.1), ang(-0.3, 0.3);
  for (auto i : net.pq()) s.v_mag[i] = mag(rng);
  for (auto i : net.non_slack()) s.delta[i] = ang(rng);
  return s;
}

}  // namespace

TEST_CASE("calculated injections match the rectangular oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_state(rng);
    const auto inj = qpf::calc_injections(s, reference_network());
    const auto ref = oracle::rect_injections(reference_network(), s.v_mag, s.delta);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(inj.p[i] == doctest::Approx(ref.p[i]).epsilon(1e-12));
      CHECK(inj.q[i] == doctest::Approx(ref.q[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("flat start mismatch") {
  const auto& net = reference_network();
  const auto s = qpf::StateVector::flat_start(net);
  CHECK(s.v_mag == std::vector<double>{1.0, 1.0, 1.0, 1.02});
  CHECK(s.delta == std::vector<double>{0, 0, 0, 0});
  const auto m = qpf::mismatch(s, net);
  CHECK(m.dp.size() == 3);
  CHECK(m.dq.size() == 2);
  CHECK(m.inf_norm() == doctest::Approx(oracle::mismatch_inf(net, s.v_mag, s.delta)));
}

TEST_CASE("jacobian matches finite differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const auto s = random_state(rng);
    const auto j = qpf::jacobian(s, reference_network()).assembled();
    const auto fd = oracle::fd_jacobian(reference_network(), s.v_mag, s.delta);
    REQUIRE(j.rows() == 5);
    REQUIRE(j.cols() == 5);
    for (Eigen::Index r = 0; r < 5; ++r)
      for (Eigen::Index c = 0; c < 5; ++c)
        CHECK(std::abs(j(r, c) - fd(r, c)) <= 1e-6 * std::max(1.0, std::abs(fd(r, c))));
  }
}

TEST_CASE("block shapes") {
  const auto b = qpf::jacobian(qpf::StateVector::flat_start(reference_network()), reference_network());
  CHECK(b.j11.rows() == 3);
  CHECK(b.j11.cols() == 3);
  CHECK(b.j12.cols() == 2);
  CHECK(b.j21.rows() == 2);
  CHECK(b.j22.rows() == 2);
}

TEST_CASE("solver agrees with Gauss-Seidel") {
  const auto& net = reference_network();
  const auto sol = qpf::solve(net);
  const auto gs = oracle::gauss_seidel(net, 1e-12);
  CHECK(sol.converged);
  CHECK(sol.iterations <= 5);
  CHECK(sol.final_mismatch() < 1e-8);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(sol.v_mag[i] - gs.v_mag[i]) < 1e-6);
    CHECK(std::abs(sol.delta[i] - gs.delta[i]) < 1e-6);
  }
  CHECK(oracle::mismatch_inf(net, sol.v_mag, sol.delta) < 1e-8);
}

TEST_CASE("mismatch history decreases quadratically") {
  const auto sol = qpf::solve(reference_network(), {1e-12, 20, true});
  REQUIRE(sol.mismatch_history.size() >= 3);
  CHECK(sol.mismatch_history.size() == static_cast<std::size_t>(sol.iterations));
  CHECK(sol.mismatch_history[0] < sol.initial_mismatch);
  CHECK(sol.mismatch_history[1] < sol.mismatch_history[0] * sol.mismatch_history[0] * 10);
}

TEST_CASE("slack and PV injections are filled in") {
  const auto& net = reference_network();
  const auto sol = qpf::solve(net);
  const auto ref = oracle::rect_injections(net, sol.v_mag, sol.delta);
  CHECK(sol.p_calc[0] == doctest::Approx(ref.p[0]));
  CHECK(sol.q_calc[3] == doctest::Approx(ref.q[3]));
  double losses = 0.0;
  for (double p : sol.p_calc) losses += p;
  CHECK(losses > 0.0);
  CHECK(losses < 0.1);
}

TEST_CASE("non-convergence carries the partial solution") {
  try {
    qpf::solve(reference_network(), {1e-12, 1, true});
    FAIL("no throw");
  } catch (const qpf::NotConvergedError& e) {
    CHECK(e.code() == qpf::ErrorCode::NotConverged);
    CHECK_FALSE(e.partial().converged);
    CHECK(e.partial().iterations == 1);
    CHECK(e.partial().mismatch_history.size() == 1);
    CHECK(std::string(e.what()).find(qpf::format_double(e.partial().final_mismatch())) !=
          std::string::npos);
  }
}

TEST_CASE("invalid options") {
  CHECK_THROWS_AS(qpf::solve(reference_network(), {0.0, 10, true}), qpf::Error);
  CHECK_THROWS_AS(qpf::solve(reference_network(), {1e-8, 0, true}), qpf::Error);
}

TEST_CASE("linear solver") {
  Eigen::MatrixXd a(3, 3);
  a << 0, 2, 1, 1, 1, 1, 4, 0, 3;
  const Eigen::VectorXd x(Eigen::Vector3d(1, -2, 3));
  const Eigen::VectorXd b = a * x;
  CHECK((qpf::solve_linear(a, b) - x).norm() < 1e-12);

  Eigen::MatrixXd singular(2, 2);
  singular << 1, 2, 2, 4;
  try {
    qpf::solve_linear(singular, Eigen::Vector2d(1, 1));
    FAIL("no throw");
  } catch (const qpf::Error& e) {
    CHECK(e.code() == qpf::ErrorCode::SingularJacobian);
  }
}

TEST_CASE("islanded bus gives a singular jacobian") {
  auto doc = reference_network().to_json();
  for (int k : {0, 1, 3}) {
    doc["ybus"][2][k] = {0.0, 0.0};
    doc["ybus"][k][2] = {0.0, 0.0};
  }
  doc["ybus"][2][2] = {0.0, 0.0};
  const auto net = qpf::NetworkModel::from_json(doc);
  try {
    qpf::solve(net);
    FAIL("no throw");
  } catch (const qpf::Error& e) {
    CHECK(e.code() == qpf::ErrorCode::SingularJacobian);
  }
}

TEST_CASE("solution exports") {
  const auto& net = reference_network();
  const auto sol = qpf::solve(net);
  const auto doc = sol.to_json(net);
  CHECK(doc["buses"].size() == 4);
  CHECK(doc["convergence"]["converged"] == true);
  const auto csv = sol.to_csv(net);
  CHECK(csv.rfind("bus,kind,v_mag_pu,delta_deg,p_pu,q_pu\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
