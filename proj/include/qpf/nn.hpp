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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpf/activation.hpp"
#include "qpf/scaler.hpp"

namespace qpf {

enum class OutputActivation { Linear, BetaTanh };

struct LayerTopology {
  std::vector<int> sizes;  // [n_in, hidden..., n_out]
  ActivationSpec hidden{4.1};
  OutputActivation output = OutputActivation::Linear;
  ActivationSpec output_spec{1.0};  // used when output is BetaTanh
  bool use_bias = true;

  std::size_t layers() const noexcept { return sizes.empty() ? 0 : sizes.size() - 1; }
  void validate() const;

  friend bool operator==(const LayerTopology&, const LayerTopology&) = default;
};

/// Layer L maps n_{L-1} inputs to n_L outputs: weights[L] is n_L x n_{L-1}.
struct MLPParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  /// Zero tensors with the same shapes.
  MLPParams zeros_like() const;
  void check_shapes(const LayerTopology& topo) const;
};

/// Pre-activations and outputs per layer for a batch (one column per sample).
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> out;

  const Eigen::MatrixXd& output() const { return out.back(); }
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
MLPParams glorot_init(const LayerTopology& topo, std::uint64_t seed);

ForwardTrace forward(const LayerTopology& topo, const MLPParams& params, const Eigen::MatrixXd& x);

inline ForwardTrace forward(const LayerTopology& topo, const MLPParams& params,
                            const Eigen::VectorXd& x) {
  return forward(topo, params, Eigen::MatrixXd(x));
}

double mse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

/// Mean absolute percentage error per output row, in percent. Throws
/// MapeUndefined when any target magnitude is below 1e-9.
std::vector<double> mape(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

struct Regularization {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// MSE over the batch plus l1 sum|w| + l2 sum w^2 (weights only).
double loss(const LayerTopology& topo, const MLPParams& params, const Eigen::MatrixXd& x,
            const Eigen::MatrixXd& targets, const Regularization& reg = {});

/// Gradient of loss() by backpropagation through a stored trace.
MLPParams backward(const LayerTopology& topo, const MLPParams& params, const ForwardTrace& trace,
                   const Eigen::MatrixXd& targets, const Regularization& reg = {});

enum class OptimizerKind { SGD, Adam, Adamax, Nadam };

const char* to_string(OptimizerKind kind) noexcept;
OptimizerKind parse_optimizer(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Conventional step sizes: 0.01 for SGD, 0.001 for the Adam family.
  static OptimizerConfig defaults(OptimizerKind kind);
  void validate() const;
};

/// First and second moment accumulators, shaped like the parameters.
struct OptimizerState {
  MLPParams m;
  MLPParams v;

  static OptimizerState for_params(const MLPParams& params);
};

/// Applies one update with 1-based step index t.
void optimizer_step(const OptimizerConfig& cfg, OptimizerState& state, MLPParams& params,
                    const MLPParams& grads, long t);

struct Hyperparams {
  int hidden_layers = 7;
  int hidden_size = 10;
  int epochs = 50;
  int batch_size = 50;
  OptimizerConfig optimizer;
  double l1 = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double beta = 4.1;
  bool use_bias = true;

  void validate() const;
  /// "table3" (10 x 7 hidden, 50 epochs, Adam) or "table4" (50 x 10 hidden,
  /// 600 epochs, Adamax, L1 = L2 = 1e-4).
  static Hyperparams preset(const std::string& name);
  LayerTopology topology(int n_in, int n_out) const;
};

struct TrainData {
  Eigen::MatrixXd x_train, y_train;
  Eigen::MatrixXd x_val, y_val;  // may be empty

  bool has_validation() const noexcept { return x_val.cols() > 0; }
};

struct TrainReport {
  double initial_train_mse = 0.0;
  std::vector<double> train_mse;  // per epoch
  std::vector<double> val_mse;    // per epoch, empty without validation data
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  bool deterministic = true;

  double final_train_mse() const { return train_mse.empty() ? initial_train_mse : train_mse.back(); }
  /// epoch,train_mse,val_mse rows; epoch 0 is the untrained network.
  std::string epoch_log_csv() const;
};

struct TrainResult {
  MLPParams params;
  TrainReport report;
};

/// Mini-batch training on already-scaled data. The sample order is reshuffled
/// every epoch from the run seed; results are bit-reproducible.
TrainResult train(const TrainData& data, const LayerTopology& topo, const Hyperparams& hyper);

/// Everything needed to reproduce predictions in physical units.
struct Model {
  LayerTopology topology;
  MLPParams params;
  std::optional<Scaler> feature_scaler;
  std::optional<Scaler> target_scaler;

  /// Raw features in, raw targets out.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
};

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const Model& model);
Model parse_model(const std::string& text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace qpf
