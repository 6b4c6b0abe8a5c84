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

// qpf command-line front end. Talks to the library only through qpf.h.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpf/qpf.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageError = 64;

struct Failure {
  int code;
  std::string message;
};

void check(qpf_status status) {
  if (status != QPF_OK)
    throw Failure{status, std::string(qpf_status_name(status)) + ": " + qpf_last_error()};
}

[[noreturn]] void usage(const std::string& message) { throw Failure{kUsageError, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using NetworkPtr = std::unique_ptr<qpf_network, Deleter<qpf_network, qpf_network_free>>;
using SolutionPtr = std::unique_ptr<qpf_solution, Deleter<qpf_solution, qpf_solution_free>>;
using DatasetPtr = std::unique_ptr<qpf_dataset, Deleter<qpf_dataset, qpf_dataset_free>>;
using SplitsPtr = std::unique_ptr<qpf_splits, Deleter<qpf_splits, qpf_splits_free>>;
using CurvePtr = std::unique_ptr<qpf_curve, Deleter<qpf_curve, qpf_curve_free>>;
using ModelPtr = std::unique_ptr<qpf_model, Deleter<qpf_model, qpf_model_free>>;
using ReportPtr =
    std::unique_ptr<qpf_train_report, Deleter<qpf_train_report, qpf_train_report_free>>;

// Reads a JSON object as CLI11 config items. Nested objects address
// subcommands, e.g. {"seed": 3, "train": {"beta": 2.22}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      input >> doc;
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config", "top level must be an object");
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        flatten(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.out_dir) / name; }

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{QPF_ERR_FILE, "FileError: cannot write " + path.string()};
}

void write_snapshot(const Globals& g, const std::string& command, json settings) {
  json doc = {{"command", command},
              {"version", qpf_version()},
              {"seed", g.seed},
              {"out_dir", g.out_dir},
              {"settings", std::move(settings)}};
  write_file(out_path(g, "config.resolved.json"), doc.dump(2) + "\n");
}

std::string spin_label(int twice_j) {
  return twice_j % 2 ? std::to_string(twice_j) + "/2" : std::to_string(twice_j / 2);
}

std::string spin_tag(int twice_j) {
  return twice_j % 2 ? std::to_string(twice_j) + "_2" : std::to_string(twice_j / 2);
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string full(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// solve

struct SolveArgs {
  std::string network;
  double tol = 1e-8;
  int max_iter = 20;
};

int run_solve(const Globals& g, const SolveArgs& a) {
  qpf_network* raw_net = nullptr;
  check(qpf_network_load(a.network.c_str(), &raw_net));
  NetworkPtr net(raw_net);

  qpf_solve_options opts;
  qpf_solve_options_default(&opts);
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  qpf_solution* raw_sol = nullptr;
  const qpf_status status = qpf_solve(net.get(), &opts, &raw_sol);
  const std::string message = qpf_last_error();
  SolutionPtr sol(raw_sol);
  if (!sol) check(status);

  write_snapshot(g, "solve", {{"network", a.network}, {"tol", a.tol}, {"max_iter", a.max_iter}});
  check(qpf_solution_write(sol.get(), net.get(), out_path(g, "solution.json").c_str(),
                           out_path(g, "solution.csv").c_str()));

  std::printf("%-4s %-6s %12s %12s %12s %12s\n", "bus", "kind", "|V| pu", "delta deg", "P pu",
              "Q pu");
  static const char* kinds[] = {"Slack", "PV", "PQ"};
  for (size_t i = 0; i < qpf_network_bus_count(net.get()); ++i) {
    int id = 0;
    qpf_bus_kind kind = QPF_BUS_PQ;
    double v = 0, d = 0, p = 0, q = 0;
    check(qpf_network_bus(net.get(), i, &id, &kind));
    check(qpf_solution_bus(sol.get(), i, &v, &d, &p, &q));
    std::printf("%-4d %-6s %12.6f %12.6f %12.6f %12.6f\n", id, kinds[kind], v, d * 180.0 / M_PI,
                p, q);
  }
  std::printf("%s after %d iterations, mismatch %.3e\n",
              qpf_solution_converged(sol.get()) ? "converged" : "NOT converged",
              qpf_solution_iterations(sol.get()), qpf_solution_final_mismatch(sol.get()));
  if (status != QPF_OK) {
    std::fprintf(stderr, "error: %s: %s\n", qpf_status_name(status), message.c_str());
    return status;
  }
  return 0;
}

// dataset

struct DatasetArgs {
  std::string network;
  size_t n = 3000;
  double low = 0.8;
  double high = 1.2;
  double split = 0.8;
  std::string scaler = "standard";
  bool coupled = false;
  bool perturb_all_loads = false;
  int threads = 1;
};

int run_dataset(const Globals& g, const DatasetArgs& a) {
  qpf_scaler scaler;
  check(qpf_parse_scaler(a.scaler.c_str(), &scaler));
  qpf_network* raw_net = nullptr;
  check(qpf_network_load(a.network.c_str(), &raw_net));
  NetworkPtr net(raw_net);

  qpf_dataset_options opts;
  qpf_dataset_options_default(&opts);
  opts.n = a.n;
  opts.low = a.low;
  opts.high = a.high;
  opts.seed = g.seed;
  opts.coupled = a.coupled;
  opts.perturb_all_loads = a.perturb_all_loads;
  opts.threads = a.threads;
  qpf_dataset* raw_ds = nullptr;
  check(qpf_dataset_generate(net.get(), &opts, &raw_ds));
  DatasetPtr ds(raw_ds);

  write_snapshot(g, "dataset",
                 {{"network", a.network}, {"n", a.n}, {"low", a.low}, {"high", a.high},
                  {"split", a.split}, {"scaler", qpf_scaler_name(scaler)},
                  {"coupled", a.coupled}, {"perturb_all_loads", a.perturb_all_loads}});
  check(qpf_dataset_write(ds.get(), g.out_dir.c_str(), a.split, g.seed, scaler));

  SplitsPtr splits;
  {
    qpf_splits* raw = nullptr;
    check(qpf_splits_load(g.out_dir.c_str(), &raw));
    splits.reset(raw);
  }
  std::printf("%zu of %zu samples converged; train %zu, test %zu -> %s\n",
              qpf_dataset_size(ds.get()), qpf_dataset_requested(ds.get()),
              qpf_splits_count(splits.get(), QPF_SPLIT_TRAIN),
              qpf_splits_count(splits.get(), QPF_SPLIT_TEST), g.out_dir.c_str());
  return 0;
}

// activation

struct SimulateArgs {
  std::vector<std::string> spins{"1/2"};
  std::string site = "probe";
  double g = 0.01;
  double tau = 3.0;
  double gamma = 0.0;
  int points = 41;
  int collisions = 20000;
  std::string mode = "exact";
  std::string schedule = "round-robin";
  int threads = 1;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  if (a.spins.empty()) usage("no spin values given");
  qpf_activation_options opts;
  qpf_activation_options_default(&opts);
  if (a.site == "probe") {
    opts.site = QPF_SITE_PROBE;
  } else if (a.site == "reservoir") {
    opts.site = QPF_SITE_RESERVOIR;
  } else {
    usage("--site must be probe or reservoir");
  }
  if (a.mode == "exact") {
    opts.mode = QPF_PROP_EXACT;
  } else if (a.mode == "second-order" || a.mode == "truncated") {
    opts.mode = QPF_PROP_SECOND_ORDER;
  } else {
    usage("--mode must be exact or second-order");
  }
  if (a.schedule == "round-robin") {
    opts.schedule = QPF_SCHED_ROUND_ROBIN;
  } else if (a.schedule == "weighted-random") {
    opts.schedule = QPF_SCHED_WEIGHTED_RANDOM;
  } else {
    usage("--schedule must be round-robin or weighted-random");
  }
  opts.g = a.g;
  opts.tau = a.tau;
  opts.gamma = a.gamma;
  opts.n_points = a.points;
  opts.n_collisions = a.collisions;
  opts.seed = g.seed;
  opts.threads = a.threads;

  std::vector<int> twice;
  for (const auto& s : a.spins) {
    int t = 0;
    check(qpf_parse_spin(s.c_str(), &t));
    twice.push_back(t);
  }
  json labels = json::array();
  for (int t : twice) labels.push_back(spin_label(t));
  write_snapshot(g, "activation simulate",
                 {{"spins", labels}, {"site", a.site}, {"g", a.g}, {"tau", a.tau},
                  {"gamma", a.gamma}, {"points", a.points}, {"collisions", a.collisions},
                  {"mode", a.mode}, {"schedule", a.schedule}});

  std::string summary = "spin,beta,rss,reference_beta\n";
  std::printf("%-6s %10s %12s %10s\n", "spin", "beta", "rss", "reference");
  for (int t : twice) {
    opts.twice_j = t;
    qpf_curve* raw = nullptr;
    check(qpf_activation_simulate(&opts, &raw));
    CurvePtr curve(raw);
    const auto tag = spin_tag(t);
    check(qpf_curve_write_csv(curve.get(), out_path(g, "curve_J" + tag + ".csv").c_str()));
    double beta = 0, rss = 0;
    check(qpf_curve_fit_beta(curve.get(), &beta, &rss,
                             out_path(g, "fit_J" + tag + ".json").c_str()));
    double reference = std::nan("");
    if (qpf_beta_for_spin(t, &reference) != QPF_OK) reference = std::nan("");
    summary += spin_label(t) + "," + full(beta) + "," + full(rss) + "," +
               (std::isnan(reference) ? std::string() : full(reference)) + "\n";
    std::printf("%-6s %10.4f %12.4e %10s\n", spin_label(t).c_str(), beta, rss,
                std::isnan(reference) ? "-" : fmt(reference).c_str());
  }
  write_file(out_path(g, "betas.csv"), summary);
  return 0;
}

struct FitArgs {
  std::string curve;
};

int run_fit(const Globals& g, const FitArgs& a) {
  qpf_curve* raw = nullptr;
  check(qpf_curve_load_csv(a.curve.c_str(), &raw));
  CurvePtr curve(raw);
  write_snapshot(g, "activation fit", {{"curve", a.curve}});
  double beta = 0, rss = 0;
  check(qpf_curve_fit_beta(curve.get(), &beta, &rss, out_path(g, "fit.json").c_str()));
  std::printf("beta %.6f  rss %.4e  points %zu\n", beta, rss, qpf_curve_size(curve.get()));
  return 0;
}

// training

struct TrainArgs {
  std::string dataset;
  std::string preset = "table3";
  std::optional<double> beta;
  std::optional<std::string> spin;
  std::optional<std::string> beta_from;
  std::optional<std::string> optimizer;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<int> hidden_layers;
  std::optional<int> hidden_size;
  std::optional<double> l1;
  std::optional<double> l2;
  std::optional<std::string> scaler;
  bool no_bias = false;
};

qpf_hyperparams resolve_hyper(const Globals& g, const TrainArgs& a) {
  qpf_hyperparams h;
  check(qpf_hyperparams_preset(a.preset.c_str(), &h));
  const int beta_sources = (a.beta ? 1 : 0) + (a.spin ? 1 : 0) + (a.beta_from ? 1 : 0);
  if (beta_sources > 1) usage("--beta, --spin and --beta-from are mutually exclusive");
  if (a.beta) h.beta = *a.beta;
  if (a.spin) {
    int t = 0;
    check(qpf_parse_spin(a.spin->c_str(), &t));
    check(qpf_beta_for_spin(t, &h.beta));
  }
  if (a.beta_from) {
    std::ifstream in(*a.beta_from);
    if (!in) throw Failure{QPF_ERR_FILE, "FileError: cannot open " + *a.beta_from};
    try {
      h.beta = json::parse(in).at("beta").get<double>();
    } catch (const json::exception& e) {
      throw Failure{QPF_ERR_PARSE, std::string("ParseError: ") + e.what()};
    }
  }
  if (a.optimizer) {
    check(qpf_parse_optimizer(a.optimizer->c_str(), &h.optimizer));
    if (!a.lr) h.learning_rate = h.optimizer == QPF_OPT_SGD ? 0.01 : 0.001;
  }
  if (a.lr) h.learning_rate = *a.lr;
  if (a.epochs) h.epochs = *a.epochs;
  if (a.batch_size) h.batch_size = *a.batch_size;
  if (a.hidden_layers) h.hidden_layers = *a.hidden_layers;
  if (a.hidden_size) h.hidden_size = *a.hidden_size;
  if (a.l1) h.l1 = *a.l1;
  if (a.l2) h.l2 = *a.l2;
  if (a.no_bias) h.use_bias = 0;
  h.seed = g.seed;
  return h;
}

json hyper_json(const qpf_hyperparams& h) {
  return {{"hidden_layers", h.hidden_layers}, {"hidden_size", h.hidden_size},
          {"epochs", h.epochs},               {"batch_size", h.batch_size},
          {"optimizer", qpf_optimizer_name(h.optimizer)},
          {"learning_rate", h.learning_rate}, {"beta1", h.beta1},
          {"beta2", h.beta2},                 {"epsilon", h.epsilon},
          {"l1", h.l1},                       {"l2", h.l2},
          {"seed", h.seed},                   {"beta", h.beta},
          {"use_bias", h.use_bias != 0}};
}

SplitsPtr load_splits(const std::string& dir) {
  qpf_splits* raw = nullptr;
  check(qpf_splits_load(dir.c_str(), &raw));
  return SplitsPtr(raw);
}

qpf_scaler resolve_scaler(const std::optional<std::string>& text, const qpf_splits* splits) {
  if (!text) return qpf_splits_scaler(splits);
  qpf_scaler s;
  check(qpf_parse_scaler(text->c_str(), &s));
  return s;
}

json evaluation_json(const qpf_splits* splits, const qpf_evaluation& ev,
                     const std::vector<double>& mape) {
  json per = json::object();
  for (size_t k = 0; k < mape.size(); ++k) {
    const char* name = qpf_splits_target_name(splits, k);
    per[name ? name : "out_" + std::to_string(k)] = mape[k];
  }
  return {{"n_samples", ev.n_samples},
          {"mse", ev.mse},
          {"mse_physical", ev.mse_physical},
          {"mape_percent", per}};
}

std::vector<double> run_evaluate(const qpf_model* model, const qpf_splits* splits,
                                 qpf_split_part part, qpf_evaluation& ev) {
  std::vector<double> mape(qpf_splits_target_count(splits));
  size_t n_out = 0;
  check(qpf_evaluate(model, splits, part, &ev, mape.data(), mape.size(), &n_out));
  mape.resize(std::min(n_out, mape.size()));
  return mape;
}

void print_mape(const qpf_splits* splits, const std::vector<double>& mape) {
  for (size_t k = 0; k < mape.size(); ++k) {
    const char* name = qpf_splits_target_name(splits, k);
    std::printf("  MAPE %-18s %10.4f %%\n", name ? name : "?", mape[k]);
  }
}

int run_train(const Globals& g, const TrainArgs& a) {
  const auto hyper = resolve_hyper(g, a);
  auto splits = load_splits(a.dataset);
  const auto scaler = resolve_scaler(a.scaler, splits.get());
  write_snapshot(g, "train",
                 {{"dataset", a.dataset},
                  {"preset", a.preset},
                  {"scaler", qpf_scaler_name(scaler)},
                  {"hyperparams", hyper_json(hyper)}});

  qpf_model* raw_model = nullptr;
  qpf_train_report* raw_report = nullptr;
  check(qpf_train(splits.get(), &hyper, scaler, &raw_model, &raw_report));
  ModelPtr model(raw_model);
  ReportPtr report(raw_report);
  check(qpf_model_save(model.get(), out_path(g, "model.json").c_str()));
  check(qpf_train_report_write_epoch_log(report.get(), out_path(g, "epoch_log.csv").c_str()));

  const size_t rows = qpf_train_report_rows(report.get());
  double initial = 0, final_train = 0, final_val = 0;
  check(qpf_train_report_row(report.get(), 0, &initial, nullptr));
  check(qpf_train_report_row(report.get(), rows - 1, &final_train, &final_val));

  json doc = {{"initial_train_mse", initial},
              {"final_train_mse", final_train},
              {"final_val_mse", std::isnan(final_val) ? json(nullptr) : json(final_val)},
              {"epochs", rows - 1},
              {"wall_seconds", qpf_train_report_wall_seconds(report.get())},
              {"hyperparams", hyper_json(hyper)}};
  std::printf("beta %.4g  %s  epochs %zu  train MSE %.4e -> %.4e", hyper.beta,
              qpf_optimizer_name(hyper.optimizer), rows - 1, initial, final_train);
  if (!std::isnan(final_val)) std::printf("  val MSE %.4e", final_val);
  std::printf("\n");

  if (qpf_splits_count(splits.get(), QPF_SPLIT_TEST) > 0) {
    qpf_evaluation ev{};
    std::vector<double> mape;
    try {
      mape = run_evaluate(model.get(), splits.get(), QPF_SPLIT_TEST, ev);
      doc["test"] = evaluation_json(splits.get(), ev, mape);
      print_mape(splits.get(), mape);
    } catch (const Failure& f) {
      if (f.code != QPF_ERR_MAPE_UNDEFINED) throw;
      doc["test"] = {{"error", f.message}};
    }
  }
  write_file(out_path(g, "train_report.json"), doc.dump(2) + "\n");
  return 0;
}

struct EvaluateArgs {
  std::string model;
  std::string dataset;
  std::string split = "test";
};

int run_evaluate_cmd(const Globals& g, const EvaluateArgs& a) {
  qpf_split_part part;
  if (a.split == "train") {
    part = QPF_SPLIT_TRAIN;
  } else if (a.split == "test") {
    part = QPF_SPLIT_TEST;
  } else {
    usage("--split must be train or test");
  }
  qpf_model* raw = nullptr;
  check(qpf_model_load(a.model.c_str(), &raw));
  ModelPtr model(raw);
  auto splits = load_splits(a.dataset);
  write_snapshot(g, "evaluate", {{"model", a.model}, {"dataset", a.dataset}, {"split", a.split}});
  qpf_evaluation ev{};
  const auto mape = run_evaluate(model.get(), splits.get(), part, ev);
  write_file(out_path(g, "evaluation.json"),
             evaluation_json(splits.get(), ev, mape).dump(2) + "\n");
  std::printf("%s split: %zu samples  MSE %.6e (scaled)  %.6e (physical)\n", a.split.c_str(),
              ev.n_samples, ev.mse, ev.mse_physical);
  print_mape(splits.get(), mape);
  return 0;
}

// sweep

struct SweepArgs {
  TrainArgs train;
  std::vector<double> betas;
  std::vector<std::string> optimizers;
  std::vector<std::uint64_t> seeds;
  int n_seeds = 5;
  int workers = 1;
  bool betas_given = false;
  bool optimizers_given = false;
};

struct SweepRun {
  double beta = 0;
  std::string optimizer;
  std::uint64_t seed = 0;
  double initial = 0, final_train = 0, final_val = 0;
  int status = 0;
  std::string error;
};

int run_sweep(const Globals& g, SweepArgs a) {
  if (!a.betas_given && !a.optimizers_given) usage("sweep needs --betas and/or --optimizers");
  if ((a.betas_given && a.betas.empty()) || (a.optimizers_given && a.optimizers.empty()))
    usage("empty sweep list");
  if (a.seeds.empty()) {
    if (a.n_seeds < 1) usage("--n-seeds must be positive");
    for (int k = 0; k < a.n_seeds; ++k) a.seeds.push_back(g.seed + static_cast<std::uint64_t>(k));
  }
  if (a.workers < 1) usage("--workers must be positive");

  const auto base = resolve_hyper(g, a.train);
  if (!a.betas_given) a.betas = {base.beta};
  std::vector<qpf_optimizer> opts;
  if (a.optimizers_given) {
    for (const auto& name : a.optimizers) {
      qpf_optimizer o;
      check(qpf_parse_optimizer(name.c_str(), &o));
      opts.push_back(o);
    }
  } else {
    opts.push_back(base.optimizer);
  }
  auto splits = load_splits(a.train.dataset);
  const auto scaler = resolve_scaler(a.train.scaler, splits.get());

  json seeds = a.seeds;
  json opt_names = json::array();
  for (auto o : opts) opt_names.push_back(qpf_optimizer_name(o));
  write_snapshot(g, "sweep",
                 {{"dataset", a.train.dataset},
                  {"preset", a.train.preset},
                  {"scaler", qpf_scaler_name(scaler)},
                  {"betas", a.betas},
                  {"optimizers", opt_names},
                  {"seeds", seeds},
                  {"base_hyperparams", hyper_json(base)}});

  std::vector<SweepRun> runs;
  std::vector<qpf_hyperparams> configs;
  for (double beta : a.betas)
    for (auto o : opts)
      for (auto seed : a.seeds) {
        auto h = base;
        h.beta = beta;
        if (a.optimizers_given) {
          h.optimizer = o;
          if (!a.train.lr) h.learning_rate = o == QPF_OPT_SGD ? 0.01 : 0.001;
        }
        h.seed = seed;
        configs.push_back(h);
        runs.push_back({beta, qpf_optimizer_name(o), seed});
      }

  // Each worker takes every workers-th run; results land by index.
  auto work = [&](size_t first) {
    for (size_t i = first; i < runs.size(); i += static_cast<size_t>(a.workers)) {
      qpf_model* m = nullptr;
      qpf_train_report* r = nullptr;
      const auto st = qpf_train(splits.get(), &configs[i], scaler, &m, &r);
      ModelPtr model(m);
      ReportPtr report(r);
      runs[i].status = st;
      if (st != QPF_OK) {
        runs[i].error = qpf_last_error();
        continue;
      }
      const size_t rows = qpf_train_report_rows(report.get());
      qpf_train_report_row(report.get(), 0, &runs[i].initial, nullptr);
      qpf_train_report_row(report.get(), rows - 1, &runs[i].final_train, &runs[i].final_val);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < a.workers; ++w) pool.emplace_back(work, static_cast<size_t>(w));
    work(0);
  }

  std::string long_csv = "beta,optimizer,seed,initial_train_mse,final_train_mse,final_val_mse\n";
  for (const auto& r : runs) {
    if (r.status != QPF_OK)
      throw Failure{r.status, std::string(qpf_status_name(static_cast<qpf_status>(r.status))) +
                                  ": " + r.error};
    long_csv += full(r.beta) + "," + r.optimizer + "," + std::to_string(r.seed) + "," +
                full(r.initial) + "," + full(r.final_train) + "," +
                (std::isnan(r.final_val) ? std::string() : full(r.final_val)) + "\n";
  }
  write_file(out_path(g, "sweep_runs.csv"), long_csv);

  std::string header = "beta";
  for (const auto& o : opt_names) {
    const auto name = o.get<std::string>();
    header += "," + name + "_median_train_mse," + name + "_median_val_mse";
  }
  std::string wide = header + "\n";
  std::printf("%-8s", "beta");
  for (const auto& o : opt_names) std::printf(" %16s", o.get<std::string>().c_str());
  std::printf("   (median final train MSE over %zu seeds)\n", a.seeds.size());
  for (double beta : a.betas) {
    wide += full(beta);
    std::printf("%-8.4g", beta);
    for (const auto& o : opt_names) {
      std::vector<double> tr, va;
      for (const auto& r : runs)
        if (r.beta == beta && r.optimizer == o.get<std::string>()) {
          tr.push_back(r.final_train);
          if (!std::isnan(r.final_val)) va.push_back(r.final_val);
        }
      const double mt = median(tr);
      const double mv = median(va);
      wide += "," + full(mt) + "," + (std::isnan(mv) ? std::string() : full(mv));
      std::printf(" %16.6e", mt);
    }
    wide += "\n";
    std::printf("\n");
  }
  write_file(out_path(g, "sweep_summary.csv"), wide);
  return 0;
}

void add_train_options(CLI::App* cmd, TrainArgs& t) {
  cmd->add_option("--dataset", t.dataset, "Dataset directory")->required();
  cmd->add_option("--preset", t.preset, "table3 or table4")->capture_default_str();
  cmd->add_option("--beta", t.beta, "Hidden-layer tanh steepness");
  cmd->add_option("--spin", t.spin, "Use the reference beta for this spin (e.g. 5/2)");
  cmd->add_option("--beta-from", t.beta_from, "Use the beta in a fit record (fit.json)");
  cmd->add_option("--optimizer", t.optimizer, "sgd, adam, adamax or nadam");
  cmd->add_option("--lr", t.lr, "Learning rate");
  cmd->add_option("--epochs", t.epochs);
  cmd->add_option("--batch-size", t.batch_size);
  cmd->add_option("--hidden-layers", t.hidden_layers);
  cmd->add_option("--hidden-size", t.hidden_size);
  cmd->add_option("--l1", t.l1);
  cmd->add_option("--l2", t.l2);
  cmd->add_option("--scaler", t.scaler, "Override the scaler recorded in meta.json");
  cmd->add_flag("--no-bias", t.no_bias);
}

int run(int argc, char** argv) {
  CLI::App app{"Power-flow surrogates with quantum-inspired activations", "qpf"};
  app.set_version_flag("--version", qpf_version());
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags override it");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  SolveArgs solve;
  auto* cmd_solve = app.add_subcommand("solve", "Newton-Raphson power flow");
  cmd_solve->add_option("network", solve.network, "Network file")->required();
  cmd_solve->add_option("--tol", solve.tol)->capture_default_str();
  cmd_solve->add_option("--max-iter", solve.max_iter)->capture_default_str();

  DatasetArgs ds;
  auto* cmd_ds = app.add_subcommand("dataset", "Generate a power-flow dataset");
  cmd_ds->add_option("network", ds.network, "Network file")->required();
  cmd_ds->add_option("--n", ds.n)->capture_default_str();
  cmd_ds->add_option("--low", ds.low)->capture_default_str();
  cmd_ds->add_option("--high", ds.high)->capture_default_str();
  cmd_ds->add_option("--split", ds.split, "Training fraction")->capture_default_str();
  cmd_ds->add_option("--scaler", ds.scaler, "standard, minmax or none")->capture_default_str();
  cmd_ds->add_flag("--coupled", ds.coupled, "One multiplier per bus for P and Q");
  cmd_ds->add_flag("--perturb-all-loads", ds.perturb_all_loads);
  cmd_ds->add_option("--threads", ds.threads)->capture_default_str();

  auto* cmd_act = app.add_subcommand("activation", "Collision-model activation functions");
  cmd_act->require_subcommand(1);
  SimulateArgs sim;
  auto* cmd_sim = cmd_act->add_subcommand("simulate", "Simulate transfer curves and fit beta");
  cmd_sim->add_option("--spin", sim.spins, "Spin values, e.g. --spin 1/2 1 3/2 5/2")
      ->capture_default_str();
  cmd_sim->add_option("--site", sim.site, "probe or reservoir")->capture_default_str();
  cmd_sim->add_option("--g", sim.g)->capture_default_str();
  cmd_sim->add_option("--tau", sim.tau)->capture_default_str();
  cmd_sim->add_option("--gamma", sim.gamma)->capture_default_str();
  cmd_sim->add_option("--points", sim.points)->capture_default_str();
  cmd_sim->add_option("--collisions", sim.collisions)->capture_default_str();
  cmd_sim->add_option("--mode", sim.mode, "exact or second-order")->capture_default_str();
  cmd_sim->add_option("--schedule", sim.schedule, "round-robin or weighted-random")
      ->capture_default_str();
  cmd_sim->add_option("--threads", sim.threads)->capture_default_str();
  FitArgs fit;
  auto* cmd_fit = cmd_act->add_subcommand("fit", "Fit beta to a curve file");
  cmd_fit->add_option("curve", fit.curve, "Curve CSV")->required();

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "Train the network");
  add_train_options(cmd_train, train);

  EvaluateArgs eval;
  auto* cmd_eval = app.add_subcommand("evaluate", "Evaluate a saved model");
  cmd_eval->add_option("--model", eval.model)->required();
  cmd_eval->add_option("--dataset", eval.dataset)->required();
  cmd_eval->add_option("--split", eval.split, "train or test")->capture_default_str();

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "Train over beta / optimizer / seed grids");
  add_train_options(cmd_sweep, sweep.train);
  auto* opt_betas = cmd_sweep->add_option("--betas", sweep.betas)->expected(0, -1);
  auto* opt_opts = cmd_sweep->add_option("--optimizers", sweep.optimizers)->expected(0, -1);
  cmd_sweep->add_option("--seeds", sweep.seeds, "Explicit seed list");
  cmd_sweep->add_option("--n-seeds", sweep.n_seeds, "Seeds seed..seed+n-1")
      ->capture_default_str();
  cmd_sweep->add_option("--workers", sweep.workers)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  const auto bare = [](const CLI::Option* o) {
    for (const auto& r : o->results())
      if (!r.empty()) return false;
    return true;
  };
  sweep.betas_given = opt_betas->count() > 0 || !sweep.betas.empty();
  sweep.optimizers_given = opt_opts->count() > 0 || !sweep.optimizers.empty();
  if (opt_betas->count() > 0 && bare(opt_betas)) sweep.betas.clear();
  if (opt_opts->count() > 0 && bare(opt_opts)) sweep.optimizers.clear();

  if (*cmd_solve) return run_solve(g, solve);
  if (*cmd_ds) return run_dataset(g, ds);
  if (*cmd_sim) return run_simulate(g, sim);
  if (*cmd_fit) return run_fit(g, fit);
  if (*cmd_train) return run_train(g, train);
  if (*cmd_eval) return run_evaluate_cmd(g, eval);
  if (*cmd_sweep) return run_sweep(g, sweep);
  return kUsageError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: InternalError: %s\n", e.what());
    return QPF_ERR_INTERNAL;
  }
}
