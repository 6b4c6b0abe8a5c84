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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kNet = std::string(QPF_SOURCE_DIR) + "/networks/four_bus";

int cli(const std::string& args) {
  const std::string cmd = std::string(QPF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string scratch(const char* name) {
  const auto dir = fs::path(QPF_SCRATCH_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string last_field(const std::string& csv_line, int from_end) {
  std::vector<std::string> parts;
  std::stringstream s(csv_line);
  std::string item;
  while (std::getline(s, item, ',')) parts.push_back(item);
  if (!csv_line.empty() && csv_line.back() == ',') parts.push_back("");
  return parts[parts.size() - 1 - static_cast<std::size_t>(from_end)];
}

std::string last_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return last;
}

}  // namespace

TEST_CASE("solve exit codes") {
  const auto d = scratch("cli_solve");
  CHECK(cli("--out-dir " + d + " solve " + kNet) == 0);
  CHECK(fs::exists(d + "/solution.json"));
  CHECK(lines(d + "/solution.csv") == 5);
  const auto snap = nlohmann::json::parse(slurp(d + "/config.resolved.json"));
  CHECK(snap["command"] == "solve");
  CHECK(snap["settings"]["tol"] == 1e-8);
  CHECK(cli("--out-dir " + d + " solve " + kNet + " --max-iter 1 --tol 1e-12") == 7);
  CHECK(cli("--out-dir " + d + " solve " + d + "/missing.json") == 3);
}

TEST_CASE("usage errors") {
  CHECK(cli("") == 64);
  CHECK(cli("solve") == 64);
  CHECK(cli("solve " + kNet + " --bogus 1") == 64);
  CHECK(cli("activation") == 64);
  CHECK(cli("--help") == 0);
}

TEST_CASE("dataset files and determinism") {
  const auto a = scratch("cli_ds_a");
  const auto b = scratch("cli_ds_b");
  CHECK(cli("--seed 5 --out-dir " + a + " dataset " + kNet + " --n 300 --split 0.8") == 0);
  CHECK(cli("--seed 5 --out-dir " + b + " dataset " + kNet + " --n 300 --split 0.8") == 0);
  CHECK(lines(a + "/train.csv") == 241);
  CHECK(lines(a + "/test.csv") == 61);
  for (const char* f : {"dataset.csv", "train.csv", "test.csv", "meta.json"})
    CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));

  const auto c = scratch("cli_ds_c");
  CHECK(cli("--seed 6 --out-dir " + c + " dataset " + kNet + " --n 300") == 0);
  CHECK(slurp(c + "/dataset.csv") != slurp(a + "/dataset.csv"));
}

TEST_CASE("unit range dataset has identical targets") {
  const auto d = scratch("cli_ds_unit");
  CHECK(cli("--out-dir " + d + " dataset " + kNet + " --n 20 --low 1 --high 1") == 0);
  std::ifstream in(d + "/dataset.csv");
  std::string header, line, first;
  std::getline(in, header);
  while (std::getline(in, line)) {
    std::stringstream s(line);
    std::string item, tail;
    int col = 0;
    while (std::getline(s, item, ','))
      if (++col > 15) tail += item + ",";
    if (first.empty()) first = tail;
    CHECK(tail == first);
  }
}

TEST_CASE("activation simulate and fit") {
  const auto d = scratch("cli_act");
  CHECK(cli("--out-dir " + d + " activation simulate --spin 1/2 3/2 --points 41") == 0);
  CHECK(lines(d + "/curve_J1_2.csv") == 42);
  CHECK(fs::exists(d + "/curve_J3_2.csv"));
  CHECK(lines(d + "/betas.csv") == 3);
  std::ifstream in(d + "/curve_J1_2.csv");
  std::string line;
  bool saw_zero = false;
  while (std::getline(in, line))
    if (line.rfind("0,", 0) == 0) {
      saw_zero = true;
      CHECK(std::abs(std::stod(line.substr(2))) < 1e-3);
    }
  CHECK(saw_zero);
  const auto fit = nlohmann::json::parse(slurp(d + "/fit_J1_2.json"));
  CHECK(fit["beta"].get<double>() > 1.0);

  const auto f = scratch("cli_fit");
  CHECK(cli("--out-dir " + f + " activation fit " + d + "/curve_J1_2.csv") == 0);
  CHECK(nlohmann::json::parse(slurp(f + "/fit.json"))["beta"] == fit["beta"]);
  CHECK(cli("--out-dir " + d + " activation simulate --spin 1/3") == 9);
  CHECK(cli("--out-dir " + f + " activation fit " + f + "/none.csv") == 3);
}

TEST_CASE("train, evaluate and determinism") {
  const auto ds = scratch("cli_train_ds");
  CHECK(cli("--seed 2 --out-dir " + ds + " dataset " + kNet + " --n 50") == 0);
  const auto a = scratch("cli_train_a");
  const auto b = scratch("cli_train_b");
  const std::string flags = " train --dataset " + ds + " --preset table3 --epochs 40 --batch-size 10";
  CHECK(cli("--seed 4 --out-dir " + a + flags) == 0);
  CHECK(cli("--seed 4 --out-dir " + b + flags) == 0);
  CHECK(slurp(a + "/epoch_log.csv") == slurp(b + "/epoch_log.csv"));
  CHECK(slurp(a + "/model.json") == slurp(b + "/model.json"));
  CHECK(lines(a + "/epoch_log.csv") == 42);

  const auto e = scratch("cli_eval");
  CHECK(cli("--out-dir " + e + " evaluate --model " + a + "/model.json --dataset " + ds +
            " --split train") == 0);
  const auto ev = nlohmann::json::parse(slurp(e + "/evaluation.json"));
  const double logged = std::stod(last_field(last_line(a + "/epoch_log.csv"), 1));
  CHECK(std::abs(ev["mse"].get<double>() - logged) <= 1e-12);
  CHECK(ev["mape_percent"].size() == 5);
  CHECK(cli("--out-dir " + e + " evaluate --model " + a + "/nope.json --dataset " + ds) == 3);
}

TEST_CASE("beta sources") {
  const auto ds = scratch("cli_beta_ds");
  CHECK(cli("--out-dir " + ds + " dataset " + kNet + " --n 40") == 0);
  const auto d = scratch("cli_beta");
  const std::string base = "--out-dir " + d + " train --dataset " + ds + " --epochs 1 --batch-size 8";
  CHECK(cli(base + " --spin 3/2") == 0);
  auto snap = nlohmann::json::parse(slurp(d + "/config.resolved.json"));
  CHECK(snap["settings"]["hyperparams"]["beta"] == 3.33);
  CHECK(cli(base + " --spin 2") == 12);
  CHECK(cli(base + " --spin 1 --beta 2") == 64);
  std::ofstream(d + "/fit.json") << R"({"beta": 1.875})";
  CHECK(cli(base + " --beta-from " + d + "/fit.json") == 0);
  snap = nlohmann::json::parse(slurp(d + "/config.resolved.json"));
  CHECK(snap["settings"]["hyperparams"]["beta"] == 1.875);
}

TEST_CASE("config file with command-line override") {
  const auto ds = scratch("cli_cfg_ds");
  CHECK(cli("--out-dir " + ds + " dataset " + kNet + " --n 40") == 0);
  const auto d = scratch("cli_cfg");
  std::ofstream(d + "/run.json") << R"({"seed": 9, "train": {"epochs": 3, "batch-size": 8, "beta": 2.78}})";
  CHECK(cli("--config " + d + "/run.json --out-dir " + d + " train --dataset " + ds +
            " --epochs 2") == 0);
  const auto snap = nlohmann::json::parse(slurp(d + "/config.resolved.json"));
  CHECK(snap["seed"] == 9);
  CHECK(snap["settings"]["hyperparams"]["epochs"] == 2);
  CHECK(snap["settings"]["hyperparams"]["batch_size"] == 8);
  CHECK(snap["settings"]["hyperparams"]["beta"] == 2.78);
  std::ofstream(d + "/broken.json") << "{";
  CHECK(cli("--config " + d + "/broken.json solve " + kNet) == 64);
}

TEST_CASE("table4 preset runs and reports MAPE") {
  const auto ds = scratch("cli_t4_ds");
  CHECK(cli("--out-dir " + ds + " dataset " + kNet + " --n 100") == 0);
  const auto d = scratch("cli_t4");
  CHECK(cli("--out-dir " + d + " train --dataset " + ds +
            " --preset table4 --beta 8 --optimizer adamax") == 0);
  const auto report = nlohmann::json::parse(slurp(d + "/train_report.json"));
  CHECK(report["epochs"] == 600);
  CHECK(report["test"]["mape_percent"].size() == 5);
  CHECK(report["hyperparams"]["optimizer"] == "adamax");
}

TEST_CASE("sweeps") {
  const auto ds = scratch("cli_sweep_ds");
  CHECK(cli("--out-dir " + ds + " dataset " + kNet + " --n 60") == 0);
  const auto d = scratch("cli_sweep");
  const std::string base = "--out-dir " + d + " sweep --dataset " + ds + " --epochs 2 --batch-size 12";
  CHECK(cli(base) == 64);
  CHECK(cli(base + " --betas") == 64);
  CHECK(cli(base + " --betas 2.22 4.1 --n-seeds 2 --workers 2") == 0);
  CHECK(lines(d + "/sweep_runs.csv") == 5);
  CHECK(lines(d + "/sweep_summary.csv") == 3);
  const auto first = slurp(d + "/sweep_runs.csv");
  CHECK(cli(base + " --betas 2.22 4.1 --n-seeds 2 --workers 1") == 0);
  CHECK(slurp(d + "/sweep_runs.csv") == first);
  CHECK(cli(base + " --optimizers adam adamax nadam --n-seeds 1") == 0);
  std::ifstream in(d + "/sweep_summary.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("adamax_median_train_mse") != std::string::npos);
  CHECK(header.find("nadam_median_val_mse") != std::string::npos);
  CHECK(cli(base + " --optimizers rmsprop") == 2);
}
