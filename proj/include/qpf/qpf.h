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

/* C interface to the qpf library. Every function that can fail returns a
 * qpf_status; on failure qpf_last_error() describes the error for the
 * calling thread. Handles are opaque and released with their _free call. */

#ifndef QPF_QPF_H_
#define QPF_QPF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(QPF_BUILDING_LIBRARY)
#define QPF_API __declspec(dllexport)
#else
#define QPF_API __declspec(dllimport)
#endif
#else
#define QPF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qpf_status {
  QPF_OK = 0,
  QPF_ERR_INVALID_ARGUMENT = 2,
  QPF_ERR_FILE = 3,
  QPF_ERR_PARSE = 4,
  QPF_ERR_VALIDATION = 5,
  QPF_ERR_DIMENSION_MISMATCH = 6,
  QPF_ERR_NOT_CONVERGED = 7,
  QPF_ERR_SINGULAR_JACOBIAN = 8,
  QPF_ERR_INVALID_SPIN = 9,
  QPF_ERR_NO_COUPLING = 10,
  QPF_ERR_DEGENERATE_CURVE = 11,
  QPF_ERR_UNKNOWN_SPIN = 12,
  QPF_ERR_SHAPE_MISMATCH = 13,
  QPF_ERR_MAPE_UNDEFINED = 14,
  QPF_ERR_NON_FINITE = 15,
  QPF_ERR_VERSION_MISMATCH = 16,
  QPF_ERR_TOO_FEW_CONVERGED = 17,
  QPF_ERR_INTERNAL = 70
} qpf_status;

typedef enum qpf_bus_kind { QPF_BUS_SLACK = 0, QPF_BUS_PV = 1, QPF_BUS_PQ = 2 } qpf_bus_kind;
typedef enum qpf_scaler {
  QPF_SCALER_STANDARD = 0,
  QPF_SCALER_MINMAX = 1,
  QPF_SCALER_NONE = 2
} qpf_scaler;
typedef enum qpf_optimizer {
  QPF_OPT_SGD = 0,
  QPF_OPT_ADAM = 1,
  QPF_OPT_ADAMAX = 2,
  QPF_OPT_NADAM = 3
} qpf_optimizer;
typedef enum qpf_propagator { QPF_PROP_EXACT = 0, QPF_PROP_SECOND_ORDER = 1 } qpf_propagator;
typedef enum qpf_spin_site { QPF_SITE_PROBE = 0, QPF_SITE_RESERVOIR = 1 } qpf_spin_site;
typedef enum qpf_schedule { QPF_SCHED_ROUND_ROBIN = 0, QPF_SCHED_WEIGHTED_RANDOM = 1 } qpf_schedule;
typedef enum qpf_split_part { QPF_SPLIT_TRAIN = 0, QPF_SPLIT_TEST = 1 } qpf_split_part;

typedef struct qpf_network qpf_network;
typedef struct qpf_solution qpf_solution;
typedef struct qpf_dataset qpf_dataset;
typedef struct qpf_splits qpf_splits;
typedef struct qpf_curve qpf_curve;
typedef struct qpf_model qpf_model;
typedef struct qpf_train_report qpf_train_report;

QPF_API const char* qpf_version(void);
QPF_API const char* qpf_last_error(void);
QPF_API const char* qpf_status_name(qpf_status status);

/* Networks and power flow */

QPF_API qpf_status qpf_network_load(const char* path, qpf_network** out);
QPF_API void qpf_network_free(qpf_network* net);
QPF_API size_t qpf_network_bus_count(const qpf_network* net);
QPF_API qpf_status qpf_network_bus(const qpf_network* net, size_t index, int* id, qpf_bus_kind* kind);
/* Writes a NUL-terminated hex digest; buf needs at least 17 bytes. */
QPF_API qpf_status qpf_network_fingerprint(const qpf_network* net, char* buf, size_t len);

typedef struct qpf_solve_options {
  double tol;
  int max_iter;
} qpf_solve_options;

QPF_API void qpf_solve_options_default(qpf_solve_options* opts);
/* On QPF_ERR_NOT_CONVERGED *out still receives the last iterate. */
QPF_API qpf_status qpf_solve(const qpf_network* net, const qpf_solve_options* opts,
                             qpf_solution** out);
QPF_API void qpf_solution_free(qpf_solution* sol);
QPF_API int qpf_solution_converged(const qpf_solution* sol);
QPF_API int qpf_solution_iterations(const qpf_solution* sol);
QPF_API double qpf_solution_final_mismatch(const qpf_solution* sol);
/* Per-bus result in pu and radians. */
QPF_API qpf_status qpf_solution_bus(const qpf_solution* sol, size_t index, double* v_mag,
                                    double* delta_rad, double* p_pu, double* q_pu);
/* Either path may be NULL. */
QPF_API qpf_status qpf_solution_write(const qpf_solution* sol, const qpf_network* net,
                                      const char* json_path, const char* csv_path);

/* Datasets */

typedef struct qpf_dataset_options {
  size_t n;
  double low;
  double high;
  uint64_t seed;
  int coupled;
  int perturb_all_loads;
  int threads;
} qpf_dataset_options;

QPF_API void qpf_dataset_options_default(qpf_dataset_options* opts);
QPF_API qpf_status qpf_dataset_generate(const qpf_network* net, const qpf_dataset_options* opts,
                                        qpf_dataset** out);
QPF_API void qpf_dataset_free(qpf_dataset* ds);
QPF_API size_t qpf_dataset_size(const qpf_dataset* ds);
QPF_API size_t qpf_dataset_requested(const qpf_dataset* ds);
/* Writes dataset.csv, train.csv, test.csv and meta.json into dir. */
QPF_API qpf_status qpf_dataset_write(const qpf_dataset* ds, const char* dir, double split_ratio,
                                     uint64_t split_seed, qpf_scaler scaler);

QPF_API qpf_status qpf_splits_load(const char* dir, qpf_splits** out);
QPF_API void qpf_splits_free(qpf_splits* splits);
QPF_API size_t qpf_splits_count(const qpf_splits* splits, qpf_split_part part);
QPF_API qpf_scaler qpf_splits_scaler(const qpf_splits* splits);
QPF_API size_t qpf_splits_target_count(const qpf_splits* splits);
QPF_API const char* qpf_splits_target_name(const qpf_splits* splits, size_t index);

/* Activation functions from the collision model */

typedef struct qpf_activation_options {
  int twice_j;
  qpf_spin_site site;
  double g;
  double tau;
  double gamma;
  int n_points;
  int n_collisions;
  qpf_propagator mode;
  qpf_schedule schedule;
  uint64_t seed;
  int threads;
} qpf_activation_options;

QPF_API void qpf_activation_options_default(qpf_activation_options* opts);
/* Accepts "1/2", "3/2", "0.5", "2.5" and similar. */
QPF_API qpf_status qpf_parse_spin(const char* text, int* twice_j);
QPF_API qpf_status qpf_beta_for_spin(int twice_j, double* beta);
QPF_API qpf_status qpf_activation_simulate(const qpf_activation_options* opts, qpf_curve** out);
QPF_API qpf_status qpf_curve_load_csv(const char* path, qpf_curve** out);
QPF_API void qpf_curve_free(qpf_curve* curve);
QPF_API size_t qpf_curve_size(const qpf_curve* curve);
QPF_API qpf_status qpf_curve_point(const qpf_curve* curve, size_t index, double* u, double* y,
                                   int* collisions_used, int* converged);
QPF_API qpf_status qpf_curve_write_csv(const qpf_curve* curve, const char* path);
/* json_path may be NULL; otherwise the fit record is written there. */
QPF_API qpf_status qpf_curve_fit_beta(const qpf_curve* curve, double* beta, double* rss,
                                      const char* json_path);

/* Training */

typedef struct qpf_hyperparams {
  int hidden_layers;
  int hidden_size;
  int epochs;
  int batch_size;
  qpf_optimizer optimizer;
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double l1;
  double l2;
  uint64_t seed;
  double beta;
  int use_bias;
} qpf_hyperparams;

/* "table3" or "table4". */
QPF_API qpf_status qpf_hyperparams_preset(const char* name, qpf_hyperparams* out);
QPF_API qpf_status qpf_parse_optimizer(const char* text, qpf_optimizer* out);
QPF_API qpf_status qpf_parse_scaler(const char* text, qpf_scaler* out);
QPF_API const char* qpf_optimizer_name(qpf_optimizer opt);
QPF_API const char* qpf_scaler_name(qpf_scaler scaler);

/* Fits scalers on the training split and validates on the test split. */
QPF_API qpf_status qpf_train(const qpf_splits* splits, const qpf_hyperparams* hyper,
                             qpf_scaler scaler, qpf_model** model, qpf_train_report** report);
QPF_API void qpf_train_report_free(qpf_train_report* report);
/* Number of rows in the epoch log, including epoch 0. */
QPF_API size_t qpf_train_report_rows(const qpf_train_report* report);
/* val_mse is NaN when there was no validation data. */
QPF_API qpf_status qpf_train_report_row(const qpf_train_report* report, size_t epoch,
                                        double* train_mse, double* val_mse);
QPF_API double qpf_train_report_wall_seconds(const qpf_train_report* report);
QPF_API qpf_status qpf_train_report_write_epoch_log(const qpf_train_report* report,
                                                    const char* path);

QPF_API qpf_status qpf_model_save(const qpf_model* model, const char* path);
QPF_API qpf_status qpf_model_load(const char* path, qpf_model** out);
QPF_API void qpf_model_free(qpf_model* model);

typedef struct qpf_evaluation {
  size_t n_samples;
  double mse;          /* scaled target units, as in the epoch log */
  double mse_physical; /* pu and rad */
} qpf_evaluation;

/* mape receives up to mape_capacity per-output values in percent;
 * n_outputs receives the full count. */
QPF_API qpf_status qpf_evaluate(const qpf_model* model, const qpf_splits* splits,
                                qpf_split_part part, qpf_evaluation* out, double* mape,
                                size_t mape_capacity, size_t* n_outputs);

#ifdef __cplusplus
}
#endif

#endif /* QPF_QPF_H_ */
