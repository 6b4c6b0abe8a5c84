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

// Exercises the shared library through its C header only.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "qpf/qpf.h"

namespace {

std::string network_file() { return std::string(QPF_SOURCE_DIR) + "/networks/four_bus.json"; }

std::string scratch(const char* name) {
  const auto dir = std::filesystem::path(QPF_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("status names are distinct") {
  CHECK(std::strcmp(qpf_status_name(QPF_OK), "OK") == 0);
  CHECK(std::strcmp(qpf_status_name(QPF_ERR_NOT_CONVERGED), "NotConverged") == 0);
  CHECK(std::strcmp(qpf_status_name(QPF_ERR_FILE), "FileError") == 0);
  CHECK(std::strcmp(qpf_status_name(QPF_ERR_INTERNAL), "InternalError") == 0);
  CHECK(std::strcmp(qpf_status_name(static_cast<qpf_status>(1234)), "Unknown") == 0);
  for (int a = 2; a <= 17; ++a)
    for (int b = a + 1; b <= 17; ++b)
      CHECK(std::strcmp(qpf_status_name(static_cast<qpf_status>(a)),
                        qpf_status_name(static_cast<qpf_status>(b))) != 0);
}

TEST_CASE("solve through the C API") {
  qpf_network* net = nullptr;
  REQUIRE(qpf_network_load(network_file().c_str(), &net) == QPF_OK);
  CHECK(qpf_network_bus_count(net) == 4);
  int id = 0;
  qpf_bus_kind kind;
  CHECK(qpf_network_bus(net, 3, &id, &kind) == QPF_OK);
  CHECK(id == 4);
  CHECK(kind == QPF_BUS_PV);
  CHECK(qpf_network_bus(net, 9, &id, &kind) == QPF_ERR_INVALID_ARGUMENT);
  char fp[17];
  CHECK(qpf_network_fingerprint(net, fp, sizeof fp) == QPF_OK);
  CHECK(std::strlen(fp) == 16);
  CHECK(qpf_network_fingerprint(net, fp, 4) == QPF_ERR_INVALID_ARGUMENT);

  qpf_solve_options opts;
  qpf_solve_options_default(&opts);
  CHECK(opts.tol == 1e-8);
  qpf_solution* sol = nullptr;
  REQUIRE(qpf_solve(net, &opts, &sol) == QPF_OK);
  CHECK(qpf_solution_converged(sol) == 1);
  CHECK(qpf_solution_iterations(sol) <= 5);
  double v = 0, d = 0;
  CHECK(qpf_solution_bus(sol, 3, &v, &d, nullptr, nullptr) == QPF_OK);
  CHECK(v == doctest::Approx(1.02));
  const auto dir = scratch("capi_solve");
  CHECK(qpf_solution_write(sol, net, (dir + "/s.json").c_str(), nullptr) == QPF_OK);
  CHECK(std::filesystem::exists(dir + "/s.json"));
  qpf_solution_free(sol);

  opts.max_iter = 1;
  opts.tol = 1e-12;
  sol = nullptr;
  CHECK(qpf_solve(net, &opts, &sol) == QPF_ERR_NOT_CONVERGED);
  REQUIRE(sol != nullptr);
  CHECK(qpf_solution_converged(sol) == 0);
  CHECK(std::string(qpf_last_error()).find("no convergence") != std::string::npos);
  qpf_solution_free(sol);
  qpf_network_free(net);
}

TEST_CASE("errors map to codes") {
  qpf_network* net = nullptr;
  CHECK(qpf_network_load("/no/such/file.json", &net) == QPF_ERR_FILE);
  CHECK(net == nullptr);
  CHECK(std::strlen(qpf_last_error()) > 0);
  CHECK(qpf_network_load(nullptr, &net) == QPF_ERR_INVALID_ARGUMENT);
  int twice = 0;
  CHECK(qpf_parse_spin("1/3", &twice) == QPF_ERR_INVALID_SPIN);
  double beta = 0;
  CHECK(qpf_beta_for_spin(4, &beta) == QPF_ERR_UNKNOWN_SPIN);
  CHECK(qpf_beta_for_spin(5, &beta) == QPF_OK);
  CHECK(beta == 4.1);
  qpf_hyperparams h;
  CHECK(qpf_hyperparams_preset("nope", &h) == QPF_ERR_INVALID_ARGUMENT);
  qpf_model* model = nullptr;
  CHECK(qpf_model_load("/no/model.json", &model) == QPF_ERR_FILE);
  // Success clears the message.
  CHECK(qpf_parse_spin("3/2", &twice) == QPF_OK);
  CHECK(std::strlen(qpf_last_error()) == 0);
}

TEST_CASE("dataset, training and evaluation through the C API") {
  qpf_network* net = nullptr;
  REQUIRE(qpf_network_load(network_file().c_str(), &net) == QPF_OK);
  qpf_dataset_options dopts;
  qpf_dataset_options_default(&dopts);
  dopts.n = 60;
  dopts.seed = 3;
  qpf_dataset* ds = nullptr;
  REQUIRE(qpf_dataset_generate(net, &dopts, &ds) == QPF_OK);
  CHECK(qpf_dataset_size(ds) == 60);
  const auto dir = scratch("capi_ds");
  REQUIRE(qpf_dataset_write(ds, dir.c_str(), 0.75, 3, QPF_SCALER_MINMAX) == QPF_OK);
  qpf_splits* splits = nullptr;
  REQUIRE(qpf_splits_load(dir.c_str(), &splits) == QPF_OK);
  CHECK(qpf_splits_count(splits, QPF_SPLIT_TRAIN) == 45);
  CHECK(qpf_splits_count(splits, QPF_SPLIT_TEST) == 15);
  CHECK(qpf_splits_scaler(splits) == QPF_SCALER_MINMAX);
  CHECK(std::string(qpf_splits_target_name(splits, 2)) == "out_delta_2_deg");
  CHECK(qpf_splits_target_name(splits, 5) == nullptr);

  qpf_hyperparams h;
  REQUIRE(qpf_hyperparams_preset("table3", &h) == QPF_OK);
  h.epochs = 5;
  h.batch_size = 15;
  qpf_model* model = nullptr;
  qpf_train_report* report = nullptr;
  REQUIRE(qpf_train(splits, &h, QPF_SCALER_MINMAX, &model, &report) == QPF_OK);
  CHECK(qpf_train_report_rows(report) == 6);
  double tr = 0, va = 0;
  CHECK(qpf_train_report_row(report, 0, &tr, &va) == QPF_OK);
  CHECK(std::isnan(va));
  CHECK(qpf_train_report_row(report, 5, &tr, &va) == QPF_OK);
  CHECK(std::isfinite(va));
  CHECK(qpf_train_report_row(report, 6, &tr, &va) == QPF_ERR_INVALID_ARGUMENT);

  qpf_evaluation ev{};
  double mape[5];
  size_t n_out = 0;
  REQUIRE(qpf_evaluate(model, splits, QPF_SPLIT_TRAIN, &ev, mape, 5, &n_out) == QPF_OK);
  CHECK(n_out == 5);
  CHECK(ev.mse == doctest::Approx(tr).epsilon(1e-12));
  CHECK(qpf_evaluate(model, splits, QPF_SPLIT_TEST, &ev, mape, 5, &n_out) == QPF_OK);
  CHECK(ev.mse == doctest::Approx(va).epsilon(1e-12));

  const auto path = dir + "/model.json";
  CHECK(qpf_model_save(model, path.c_str()) == QPF_OK);
  qpf_model* loaded = nullptr;
  REQUIRE(qpf_model_load(path.c_str(), &loaded) == QPF_OK);
  qpf_evaluation ev2{};
  CHECK(qpf_evaluate(loaded, splits, QPF_SPLIT_TEST, &ev2, nullptr, 0, nullptr) == QPF_OK);
  CHECK(ev2.mse == ev.mse);

  qpf_model_free(loaded);
  qpf_model_free(model);
  qpf_train_report_free(report);
  qpf_splits_free(splits);
  qpf_dataset_free(ds);
  qpf_network_free(net);
}

TEST_CASE("activation through the C API") {
  qpf_activation_options opts;
  qpf_activation_options_default(&opts);
  CHECK(opts.twice_j == 1);
  CHECK(opts.g == 0.01);
  CHECK(opts.tau == 3.0);
  opts.n_points = 5;
  opts.n_collisions = 50000;
  qpf_curve* curve = nullptr;
  REQUIRE(qpf_activation_simulate(&opts, &curve) == QPF_OK);
  CHECK(qpf_curve_size(curve) == 5);
  double u = 0, y = 0;
  CHECK(qpf_curve_point(curve, 2, &u, &y, nullptr, nullptr) == QPF_OK);
  CHECK(u == 0.0);
  CHECK(std::abs(y) < 1e-3);
  double beta = 0, rss = 0;
  CHECK(qpf_curve_fit_beta(curve, &beta, &rss, nullptr) == QPF_OK);
  CHECK(beta > 1.0);
  const auto dir = scratch("capi_curve");
  CHECK(qpf_curve_write_csv(curve, (dir + "/c.csv").c_str()) == QPF_OK);
  qpf_curve* back = nullptr;
  REQUIRE(qpf_curve_load_csv((dir + "/c.csv").c_str(), &back) == QPF_OK);
  double beta2 = 0;
  CHECK(qpf_curve_fit_beta(back, &beta2, nullptr, (dir + "/fit.json").c_str()) == QPF_OK);
  CHECK(beta2 == beta);
  qpf_curve_free(back);
  qpf_curve_free(curve);

  opts.twice_j = 0;
  CHECK(qpf_activation_simulate(&opts, &curve) == QPF_ERR_INVALID_SPIN);
  CHECK(curve == nullptr);
}

TEST_CASE("name helpers") {
  qpf_optimizer o;
  CHECK(qpf_parse_optimizer("adamax", &o) == QPF_OK);
  CHECK(o == QPF_OPT_ADAMAX);
  CHECK(std::string(qpf_optimizer_name(QPF_OPT_NADAM)) == "nadam");
  qpf_scaler s;
  CHECK(qpf_parse_scaler("none", &s) == QPF_OK);
  CHECK(s == QPF_SCALER_NONE);
  CHECK(qpf_parse_scaler("log", &s) == QPF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qpf_version()) == "0.1.0");
}
