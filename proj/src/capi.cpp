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

#include "qpf/qpf.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "qpf/activation.hpp"
#include "qpf/dataset.hpp"
#include "qpf/error.hpp"
#include "qpf/experiment.hpp"
#include "qpf/grid.hpp"
#include "qpf/nn.hpp"
#include "qpf/powerflow.hpp"
#include "qpf/qsim.hpp"
#include "qpf/util.hpp"

struct qpf_network {
  qpf::NetworkModel net;
};
struct qpf_solution {
  qpf::PowerFlowSolution sol;
};
struct qpf_dataset {
  qpf::Dataset ds;
};
struct qpf_splits {
  qpf::SplitData data;
};
struct qpf_curve {
  qpf::ActivationCurve curve;
};
struct qpf_model {
  qpf::Model model;
};
struct qpf_train_report {
  qpf::TrainReport report;
};

namespace {

thread_local std::string g_last_error;

qpf_status status_of(qpf::ErrorCode code) {
  using qpf::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return QPF_ERR_INVALID_ARGUMENT;
    case ErrorCode::File: return QPF_ERR_FILE;
    case ErrorCode::Parse: return QPF_ERR_PARSE;
    case ErrorCode::Validation: return QPF_ERR_VALIDATION;
    case ErrorCode::DimensionMismatch: return QPF_ERR_DIMENSION_MISMATCH;
    case ErrorCode::NotConverged: return QPF_ERR_NOT_CONVERGED;
    case ErrorCode::SingularJacobian: return QPF_ERR_SINGULAR_JACOBIAN;
    case ErrorCode::InvalidSpin: return QPF_ERR_INVALID_SPIN;
    case ErrorCode::NoCoupling: return QPF_ERR_NO_COUPLING;
    case ErrorCode::DegenerateCurve: return QPF_ERR_DEGENERATE_CURVE;
    case ErrorCode::UnknownSpin: return QPF_ERR_UNKNOWN_SPIN;
    case ErrorCode::ShapeMismatch: return QPF_ERR_SHAPE_MISMATCH;
    case ErrorCode::MapeUndefined: return QPF_ERR_MAPE_UNDEFINED;
    case ErrorCode::NonFinite: return QPF_ERR_NON_FINITE;
    case ErrorCode::VersionMismatch: return QPF_ERR_VERSION_MISMATCH;
    case ErrorCode::TooFewConverged: return QPF_ERR_TOO_FEW_CONVERGED;
  }
  return QPF_ERR_INTERNAL;
}

qpf_status set_error(qpf_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
qpf_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return QPF_OK;
  } catch (const qpf::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(QPF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(QPF_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(QPF_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) qpf::fail(qpf::ErrorCode::InvalidArgument, what);
}

qpf::ScalerKind to_kind(qpf_scaler s) {
  switch (s) {
    case QPF_SCALER_STANDARD: return qpf::ScalerKind::Standard;
    case QPF_SCALER_MINMAX: return qpf::ScalerKind::MinMax;
    case QPF_SCALER_NONE: return qpf::ScalerKind::Identity;
  }
  qpf::fail(qpf::ErrorCode::InvalidArgument, "unknown scaler");
}

qpf_scaler from_kind(qpf::ScalerKind k) {
  switch (k) {
    case qpf::ScalerKind::MinMax: return QPF_SCALER_MINMAX;
    case qpf::ScalerKind::Standard: return QPF_SCALER_STANDARD;
    case qpf::ScalerKind::Identity: return QPF_SCALER_NONE;
  }
  return QPF_SCALER_STANDARD;
}

qpf::OptimizerKind to_kind(qpf_optimizer o) {
  switch (o) {
    case QPF_OPT_SGD: return qpf::OptimizerKind::SGD;
    case QPF_OPT_ADAM: return qpf::OptimizerKind::Adam;
    case QPF_OPT_ADAMAX: return qpf::OptimizerKind::Adamax;
    case QPF_OPT_NADAM: return qpf::OptimizerKind::Nadam;
  }
  qpf::fail(qpf::ErrorCode::InvalidArgument, "unknown optimizer");
}

qpf_optimizer from_kind(qpf::OptimizerKind k) {
  switch (k) {
    case qpf::OptimizerKind::SGD: return QPF_OPT_SGD;
    case qpf::OptimizerKind::Adam: return QPF_OPT_ADAM;
    case qpf::OptimizerKind::Adamax: return QPF_OPT_ADAMAX;
    case qpf::OptimizerKind::Nadam: return QPF_OPT_NADAM;
  }
  return QPF_OPT_ADAM;
}

qpf_hyperparams to_c(const qpf::Hyperparams& h) {
  qpf_hyperparams c{};
  c.hidden_layers = h.hidden_layers;
  c.hidden_size = h.hidden_size;
  c.epochs = h.epochs;
  c.batch_size = h.batch_size;
  c.optimizer = from_kind(h.optimizer.kind);
  c.learning_rate = h.optimizer.learning_rate;
  c.beta1 = h.optimizer.beta1;
  c.beta2 = h.optimizer.beta2;
  c.epsilon = h.optimizer.epsilon;
  c.l1 = h.l1;
  c.l2 = h.l2;
  c.seed = h.seed;
  c.beta = h.beta;
  c.use_bias = h.use_bias ? 1 : 0;
  return c;
}

qpf::Hyperparams from_c(const qpf_hyperparams& c) {
  qpf::Hyperparams h;
  h.hidden_layers = c.hidden_layers;
  h.hidden_size = c.hidden_size;
  h.epochs = c.epochs;
  h.batch_size = c.batch_size;
  h.optimizer.kind = to_kind(c.optimizer);
  h.optimizer.learning_rate = c.learning_rate;
  h.optimizer.beta1 = c.beta1;
  h.optimizer.beta2 = c.beta2;
  h.optimizer.epsilon = c.epsilon;
  h.l1 = c.l1;
  h.l2 = c.l2;
  h.seed = c.seed;
  h.beta = c.beta;
  h.use_bias = c.use_bias != 0;
  return h;
}

const std::vector<qpf::SampleRecord>& part_of(const qpf_splits* s, qpf_split_part part) {
  require(part == QPF_SPLIT_TRAIN || part == QPF_SPLIT_TEST, "unknown split part");
  return part == QPF_SPLIT_TRAIN ? s->data.train : s->data.test;
}

}  // namespace

extern "C" {

const char* qpf_version(void) { return "0.1.0"; }

const char* qpf_last_error(void) { return g_last_error.c_str(); }

const char* qpf_status_name(qpf_status status) {
  switch (status) {
    case QPF_OK: return "OK";
    case QPF_ERR_INTERNAL: return "InternalError";
    default: break;
  }
  for (int c = 0; c <= static_cast<int>(qpf::ErrorCode::TooFewConverged); ++c) {
    const auto code = static_cast<qpf::ErrorCode>(c);
    if (status_of(code) == status) return qpf::to_string(code);
  }
  return "Unknown";
}

qpf_status qpf_network_load(const char* path, qpf_network** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new qpf_network{qpf::load_network(path)};
  });
}

void qpf_network_free(qpf_network* net) { delete net; }

size_t qpf_network_bus_count(const qpf_network* net) { return net ? net->net.size() : 0; }

qpf_status qpf_network_bus(const qpf_network* net, size_t index, int* id, qpf_bus_kind* kind) {
  return guarded([&] {
    require(net && index < net->net.size(), "bus index out of range");
    const auto& bus = net->net.buses()[index];
    if (id) *id = bus.id;
    if (kind) {
      switch (bus.kind) {
        case qpf::BusKind::Slack: *kind = QPF_BUS_SLACK; break;
        case qpf::BusKind::PV: *kind = QPF_BUS_PV; break;
        case qpf::BusKind::PQ: *kind = QPF_BUS_PQ; break;
      }
    }
  });
}

qpf_status qpf_network_fingerprint(const qpf_network* net, char* buf, size_t len) {
  return guarded([&] {
    require(net && buf, "null argument");
    const auto fp = net->net.fingerprint();
    require(len > fp.size(), "buffer too small");
    std::memcpy(buf, fp.c_str(), fp.size() + 1);
  });
}

void qpf_solve_options_default(qpf_solve_options* opts) {
  if (!opts) return;
  const qpf::SolveOptions d;
  opts->tol = d.tol;
  opts->max_iter = d.max_iter;
}

qpf_status qpf_solve(const qpf_network* net, const qpf_solve_options* opts, qpf_solution** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(net && out, "null argument");
    qpf::SolveOptions so;
    if (opts) {
      so.tol = opts->tol;
      so.max_iter = opts->max_iter;
    }
    try {
      *out = new qpf_solution{qpf::solve(net->net, so)};
    } catch (const qpf::NotConvergedError& e) {
      *out = new qpf_solution{e.partial()};
      throw;
    }
  });
}

void qpf_solution_free(qpf_solution* sol) { delete sol; }

int qpf_solution_converged(const qpf_solution* sol) { return sol && sol->sol.converged ? 1 : 0; }

int qpf_solution_iterations(const qpf_solution* sol) { return sol ? sol->sol.iterations : 0; }

double qpf_solution_final_mismatch(const qpf_solution* sol) {
  return sol ? sol->sol.final_mismatch() : std::numeric_limits<double>::quiet_NaN();
}

qpf_status qpf_solution_bus(const qpf_solution* sol, size_t index, double* v_mag,
                            double* delta_rad, double* p_pu, double* q_pu) {
  return guarded([&] {
    require(sol && index < sol->sol.v_mag.size(), "bus index out of range");
    if (v_mag) *v_mag = sol->sol.v_mag[index];
    if (delta_rad) *delta_rad = sol->sol.delta[index];
    if (p_pu) *p_pu = sol->sol.p_calc[index];
    if (q_pu) *q_pu = sol->sol.q_calc[index];
  });
}

qpf_status qpf_solution_write(const qpf_solution* sol, const qpf_network* net,
                              const char* json_path, const char* csv_path) {
  return guarded([&] {
    require(sol && net, "null argument");
    if (json_path) qpf::write_text_file(json_path, sol->sol.to_json(net->net).dump(2) + "\n");
    if (csv_path) qpf::write_text_file(csv_path, sol->sol.to_csv(net->net));
  });
}

void qpf_dataset_options_default(qpf_dataset_options* opts) {
  if (!opts) return;
  const qpf::DatasetOptions d;
  opts->n = d.n;
  opts->low = d.low;
  opts->high = d.high;
  opts->seed = d.seed;
  opts->coupled = d.coupled ? 1 : 0;
  opts->perturb_all_loads = d.perturb_all_loads ? 1 : 0;
  opts->threads = d.threads;
}

qpf_status qpf_dataset_generate(const qpf_network* net, const qpf_dataset_options* opts,
                                qpf_dataset** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(net && opts && out, "null argument");
    qpf::DatasetOptions d;
    d.n = opts->n;
    d.low = opts->low;
    d.high = opts->high;
    d.seed = opts->seed;
    d.coupled = opts->coupled != 0;
    d.perturb_all_loads = opts->perturb_all_loads != 0;
    d.threads = opts->threads;
    *out = new qpf_dataset{qpf::generate(net->net, d)};
  });
}

void qpf_dataset_free(qpf_dataset* ds) { delete ds; }

size_t qpf_dataset_size(const qpf_dataset* ds) { return ds ? ds->ds.samples.size() : 0; }

size_t qpf_dataset_requested(const qpf_dataset* ds) { return ds ? ds->ds.meta.n_requested : 0; }

qpf_status qpf_dataset_write(const qpf_dataset* ds, const char* dir, double split_ratio,
                             uint64_t split_seed, qpf_scaler scaler) {
  return guarded([&] {
    require(ds && dir, "null argument");
    qpf::write_dataset_dir(dir, ds->ds, {split_ratio, split_seed, to_kind(scaler)});
  });
}

qpf_status qpf_splits_load(const char* dir, qpf_splits** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(dir && out, "null argument");
    *out = new qpf_splits{qpf::load_dataset_dir(dir)};
  });
}

void qpf_splits_free(qpf_splits* splits) { delete splits; }

size_t qpf_splits_count(const qpf_splits* splits, qpf_split_part part) {
  if (!splits) return 0;
  return part == QPF_SPLIT_TRAIN ? splits->data.train.size() : splits->data.test.size();
}

qpf_scaler qpf_splits_scaler(const qpf_splits* splits) {
  return splits ? from_kind(splits->data.scaler) : QPF_SCALER_STANDARD;
}

size_t qpf_splits_target_count(const qpf_splits* splits) {
  return splits ? splits->data.layout.targets.size() : 0;
}

const char* qpf_splits_target_name(const qpf_splits* splits, size_t index) {
  if (!splits || index >= splits->data.layout.targets.size()) return nullptr;
  return splits->data.layout.targets[index].c_str();
}

void qpf_activation_options_default(qpf_activation_options* opts) {
  if (!opts) return;
  const qpf::TransferOptions d;
  opts->twice_j = d.spin.twice();
  opts->site = d.site == qpf::SpinSite::Probe ? QPF_SITE_PROBE : QPF_SITE_RESERVOIR;
  opts->g = d.g;
  opts->tau = d.params.tau;
  opts->gamma = d.params.gamma;
  opts->n_points = d.n_points;
  opts->n_collisions = d.params.n_collisions;
  opts->mode = QPF_PROP_EXACT;
  opts->schedule = QPF_SCHED_ROUND_ROBIN;
  opts->seed = 0;
  opts->threads = d.threads;
}

qpf_status qpf_parse_spin(const char* text, int* twice_j) {
  return guarded([&] {
    require(text && twice_j, "null argument");
    *twice_j = qpf::Spin::parse(text).twice();
  });
}

qpf_status qpf_beta_for_spin(int twice_j, double* beta) {
  return guarded([&] {
    require(beta != nullptr, "null argument");
    *beta = qpf::beta_for_spin(qpf::Spin::from_twice(twice_j));
  });
}

qpf_status qpf_activation_simulate(const qpf_activation_options* opts, qpf_curve** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(opts && out, "null argument");
    qpf::TransferOptions t;
    t.spin = qpf::Spin::from_twice(opts->twice_j);
    t.site = opts->site == QPF_SITE_RESERVOIR ? qpf::SpinSite::Reservoir : qpf::SpinSite::Probe;
    t.g = opts->g;
    t.n_points = opts->n_points;
    t.params.tau = opts->tau;
    t.params.gamma = opts->gamma;
    t.params.n_collisions = opts->n_collisions;
    t.params.mode = opts->mode == QPF_PROP_SECOND_ORDER ? qpf::PropagatorMode::SecondOrderTruncation
                                                        : qpf::PropagatorMode::ExactExponential;
    t.schedule = opts->schedule == QPF_SCHED_WEIGHTED_RANDOM
                     ? qpf::Schedule::weighted_random(opts->seed)
                     : qpf::Schedule::round_robin();
    t.threads = opts->threads;
    *out = new qpf_curve{qpf::transfer_curve(t)};
  });
}

qpf_status qpf_curve_load_csv(const char* path, qpf_curve** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(path && out, "null argument");
    *out = new qpf_curve{qpf::ActivationCurve::from_csv(qpf::read_text_file(path))};
  });
}

void qpf_curve_free(qpf_curve* curve) { delete curve; }

size_t qpf_curve_size(const qpf_curve* curve) { return curve ? curve->curve.points.size() : 0; }

qpf_status qpf_curve_point(const qpf_curve* curve, size_t index, double* u, double* y,
                           int* collisions_used, int* converged) {
  return guarded([&] {
    require(curve && index < curve->curve.points.size(), "point index out of range");
    const auto& p = curve->curve.points[index];
    if (u) *u = p.u;
    if (y) *y = p.y;
    if (collisions_used) *collisions_used = p.collisions_used;
    if (converged) *converged = p.converged ? 1 : 0;
  });
}

qpf_status qpf_curve_write_csv(const qpf_curve* curve, const char* path) {
  return guarded([&] {
    require(curve && path, "null argument");
    qpf::write_text_file(path, curve->curve.to_csv());
  });
}

qpf_status qpf_curve_fit_beta(const qpf_curve* curve, double* beta, double* rss,
                              const char* json_path) {
  return guarded([&] {
    require(curve != nullptr, "null argument");
    const auto fit = qpf::fit_beta(curve->curve);
    if (beta) *beta = fit.beta;
    if (rss) *rss = fit.rss;
    if (json_path) qpf::write_text_file(json_path, fit.to_json().dump(2) + "\n");
  });
}

qpf_status qpf_hyperparams_preset(const char* name, qpf_hyperparams* out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = to_c(qpf::Hyperparams::preset(name));
  });
}

qpf_status qpf_parse_optimizer(const char* text, qpf_optimizer* out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = from_kind(qpf::parse_optimizer(text));
  });
}

qpf_status qpf_parse_scaler(const char* text, qpf_scaler* out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = from_kind(qpf::parse_scaler_kind(text));
  });
}

const char* qpf_optimizer_name(qpf_optimizer opt) {
  try {
    return qpf::to_string(to_kind(opt));
  } catch (...) {
    return "unknown";
  }
}

const char* qpf_scaler_name(qpf_scaler scaler) {
  try {
    return qpf::to_string(to_kind(scaler));
  } catch (...) {
    return "unknown";
  }
}

qpf_status qpf_train(const qpf_splits* splits, const qpf_hyperparams* hyper, qpf_scaler scaler,
                     qpf_model** model, qpf_train_report** report) {
  if (model) *model = nullptr;
  if (report) *report = nullptr;
  return guarded([&] {
    require(splits && hyper && model, "null argument");
    auto run = qpf::run_training(splits->data.train, splits->data.test, from_c(*hyper),
                                 to_kind(scaler));
    auto m = std::make_unique<qpf_model>(qpf_model{std::move(run.model)});
    if (report) *report = new qpf_train_report{std::move(run.report)};
    *model = m.release();
  });
}

void qpf_train_report_free(qpf_train_report* report) { delete report; }

size_t qpf_train_report_rows(const qpf_train_report* report) {
  return report ? report->report.train_mse.size() + 1 : 0;
}

qpf_status qpf_train_report_row(const qpf_train_report* report, size_t epoch, double* train_mse,
                                double* val_mse) {
  return guarded([&] {
    require(report && epoch <= report->report.train_mse.size(), "epoch out of range");
    const auto& r = report->report;
    if (train_mse) *train_mse = epoch == 0 ? r.initial_train_mse : r.train_mse[epoch - 1];
    if (val_mse) {
      *val_mse = epoch > 0 && epoch <= r.val_mse.size() ? r.val_mse[epoch - 1]
                                                         : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

double qpf_train_report_wall_seconds(const qpf_train_report* report) {
  return report ? report->report.wall_seconds : 0.0;
}

qpf_status qpf_train_report_write_epoch_log(const qpf_train_report* report, const char* path) {
  return guarded([&] {
    require(report && path, "null argument");
    qpf::write_text_file(path, report->report.epoch_log_csv());
  });
}

qpf_status qpf_model_save(const qpf_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    qpf::save_model(model->model, path);
  });
}

qpf_status qpf_model_load(const char* path, qpf_model** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(path && out, "null argument");
    *out = new qpf_model{qpf::load_model(path)};
  });
}

void qpf_model_free(qpf_model* model) { delete model; }

qpf_status qpf_evaluate(const qpf_model* model, const qpf_splits* splits, qpf_split_part part,
                        qpf_evaluation* out, double* mape, size_t mape_capacity,
                        size_t* n_outputs) {
  return guarded([&] {
    require(model && splits && out, "null argument");
    const auto ev = qpf::evaluate(model->model, part_of(splits, part));
    out->n_samples = ev.n_samples;
    out->mse = ev.mse;
    out->mse_physical = ev.mse_physical;
    if (n_outputs) *n_outputs = ev.mape.size();
    if (mape)
      for (size_t k = 0; k < ev.mape.size() && k < mape_capacity; ++k) mape[k] = ev.mape[k];
  });
}

}  // extern "C"
