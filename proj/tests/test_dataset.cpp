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

#include <doctest.h>

#include "oracles/oracles.hpp"
#include "qpf/dataset.hpp"
#include "qpf/error.hpp"
#include "qpf/experiment.hpp"
#include "qpf/util.hpp"
#include "test_support.hpp"

using testing_support::reference_network;

namespace {

qpf::Dataset small(std::size_t n, std::uint64_t seed) {
  qpf::DatasetOptions opts;
  opts.n = n;
  opts.seed = seed;
  return qpf::generate(reference_network(), opts);
}

/// Physical check through the oracle: rebuild the perturbed network and the
/// full state from one record.
double oracle_mismatch(const qpf::SampleRecord& s) {
  const auto& net = reference_network();
  std::vector<double> p(4), q(4);
  for (std::size_t i = 0; i < 4; ++i) {
    p[i] = s.inputs[i] * 100.0;
    q[i] = s.inputs[4 + i] * 100.0;
  }
  const auto perturbed = net.with_loads(p, q);
  std::vector<double> v{s.inputs[8], s.targets[0], s.targets[1], s.inputs[9]};
  std::vector<double> d{0.0, s.targets[2], s.targets[3], s.targets[4]};
  return oracle::mismatch_inf(perturbed, v, d);
}

}  // namespace

TEST_CASE("layout of the four-bus network") {
  const auto l = qpf::DatasetLayout::for_network(reference_network(), false, false);
  CHECK(l.multipliers == std::vector<std::string>{"mult_p_2", "mult_q_2", "mult_p_3", "mult_q_3"});
  CHECK(l.inputs.size() == 10);
  CHECK(l.inputs[8] == "in_v_mag_1");
  CHECK(l.inputs[9] == "in_v_mag_4");
  CHECK(l.targets == std::vector<std::string>{"out_v_mag_2", "out_v_mag_3", "out_delta_2_deg",
                                              "out_delta_3_deg", "out_delta_4_deg"});
  CHECK(l.target_is_angle == std::vector<bool>{false, false, true, true, true});
  CHECK(qpf::DatasetLayout::for_network(reference_network(), true, false).multipliers.size() == 2);
  CHECK(qpf::DatasetLayout::for_network(reference_network(), false, true).multipliers.size() == 8);
}

TEST_CASE("samples are power-flow solutions") {
  const auto ds = small(60, 4);
  REQUIRE(ds.samples.size() == 60);
  for (const auto& s : ds.samples) {
    CHECK(s.converged);
    CHECK(oracle_mismatch(s) < 1e-10);
    CHECK(qpf::sample_mismatch(reference_network(), s) < 1e-10);
    for (double m : s.multipliers) {
      CHECK(m >= 0.8);
      CHECK(m <= 1.2);
    }
    CHECK(s.inputs[1] == doctest::Approx(1.7 * s.multipliers[0]));
    CHECK(s.inputs[5] == doctest::Approx(1.0535 * s.multipliers[1]));
    CHECK(s.inputs[0] == 0.5);
  }
}

TEST_CASE("generation is deterministic and thread independent") {
  qpf::DatasetOptions opts;
  opts.n = 40;
  opts.seed = 21;
  const auto a = qpf::generate(reference_network(), opts);
  opts.threads = 4;
  const auto b = qpf::generate(reference_network(), opts);
  CHECK(a.samples == b.samples);
  CHECK(qpf::samples_to_csv(a.layout, a.samples) == qpf::samples_to_csv(b.layout, b.samples));
  opts.seed = 22;
  CHECK(qpf::generate(reference_network(), opts).samples != a.samples);
  CHECK(a.meta.network_fingerprint == reference_network().fingerprint());
}

TEST_CASE("unit range gives identical targets") {
  qpf::DatasetOptions opts;
  opts.n = 10;
  opts.low = opts.high = 1.0;
  const auto ds = qpf::generate(reference_network(), opts);
  for (const auto& s : ds.samples) CHECK(s.targets == ds.samples[0].targets);
  const auto base = qpf::solve(reference_network(), {1e-10, 30, true});
  CHECK(ds.samples[0].targets[0] == doctest::Approx(base.v_mag[1]).epsilon(1e-9));
}

TEST_CASE("coupled and all-load perturbation") {
  qpf::DatasetOptions opts;
  opts.n = 10;
  opts.coupled = true;
  opts.perturb_all_loads = true;
  const auto ds = qpf::generate(reference_network(), opts);
  for (const auto& s : ds.samples) {
    REQUIRE(s.multipliers.size() == 4);
    CHECK(s.inputs[0] == doctest::Approx(0.5 * s.multipliers[0]));
    CHECK(s.inputs[4] == doctest::Approx(0.3099 * s.multipliers[0]));
  }
}

TEST_CASE("too few converged") {
  qpf::DatasetOptions opts;
  opts.n = 20;
  opts.low = 4.0;
  opts.high = 6.0;
  try {
    qpf::generate(reference_network(), opts);
    FAIL("no throw");
  } catch (const qpf::Error& e) {
    CHECK(e.code() == qpf::ErrorCode::TooFewConverged);
  }
}

TEST_CASE("invalid options") {
  qpf::DatasetOptions opts;
  opts.n = 0;
  CHECK_THROWS_AS(opts.validate(), qpf::Error);
  opts.n = 10;
  opts.low = 1.3;
  CHECK_THROWS_AS(opts.validate(), qpf::Error);
}

TEST_CASE("split sizes and disjointness") {
  const auto ds = small(100, 2);
  auto [train, test] = qpf::split(ds.samples, 0.8, 5);
  CHECK(train.size() == 80);
  CHECK(test.size() == 20);
  std::vector<std::size_t> ids;
  for (const auto& s : train) ids.push_back(s.id);
  for (const auto& s : test) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t k = 0; k < 100; ++k) CHECK(ids[k] == k);
  auto [train2, test2] = qpf::split(ds.samples, 0.8, 5);
  CHECK(train2 == train);
  CHECK_THROWS_AS(qpf::split(ds.samples, 1.5, 5), qpf::Error);
}

TEST_CASE("csv round trip keeps values") {
  const auto ds = small(15, 3);
  const auto text = qpf::samples_to_csv(ds.layout, ds.samples);
  const auto back = qpf::samples_from_csv(text);
  CHECK(back.layout.targets == ds.layout.targets);
  REQUIRE(back.samples.size() == 15);
  for (std::size_t k = 0; k < 15; ++k) {
    CHECK(back.samples[k].inputs == ds.samples[k].inputs);
    for (std::size_t t = 0; t < 5; ++t)
      CHECK(back.samples[k].targets[t] == doctest::Approx(ds.samples[k].targets[t]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(qpf::samples_from_csv("sample_id,x\n1,2\n"), qpf::Error);
}

TEST_CASE("dataset directory and scaler isolation") {
  const auto ds = small(50, 6);
  const auto dir = testing_support::scratch_dir("dataset_dir");
  qpf::write_dataset_dir(dir, ds, {0.8, 6, qpf::ScalerKind::MinMax});
  const auto loaded = qpf::load_dataset_dir(dir);
  CHECK(loaded.train.size() == 40);
  CHECK(loaded.test.size() == 10);
  CHECK(loaded.scaler == qpf::ScalerKind::MinMax);
  CHECK(loaded.meta["n_train"] == 40);

  auto [train, test] = qpf::split(ds.samples, 0.8, 6);
  const auto fitted = qpf::Scaler::fit(qpf::input_matrix(train), qpf::ScalerKind::MinMax);
  CHECK(qpf::Scaler::from_json(loaded.meta["scalers"]["features"]) == fitted);

  // Changing test rows must not move the scaler.
  auto perturbed = ds;
  for (auto& s : perturbed.samples)
    if (std::any_of(test.begin(), test.end(), [&](const auto& t) { return t.id == s.id; }))
      for (auto& v : s.inputs) v *= 3.0;
  const auto dir2 = testing_support::scratch_dir("dataset_dir2");
  qpf::write_dataset_dir(dir2, perturbed, {0.8, 6, qpf::ScalerKind::MinMax});
  CHECK(qpf::load_dataset_dir(dir2).meta["scalers"] == loaded.meta["scalers"]);
}

TEST_CASE("evaluate agrees with the epoch log") {
  const auto ds = small(50, 8);
  auto h = qpf::Hyperparams::preset("table3");
  h.epochs = 30;
  h.batch_size = 10;
  const auto run = qpf::run_training(ds.samples, {}, h, qpf::ScalerKind::Standard);
  const auto ev = qpf::evaluate(run.model, ds.samples);
  CHECK(std::abs(ev.mse - run.report.final_train_mse()) <= 1e-12);
  CHECK(ev.mape.size() == 5);
  CHECK(ev.n_samples == 50);
  CHECK(run.report.val_mse.empty());
}
