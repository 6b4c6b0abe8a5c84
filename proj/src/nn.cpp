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

#include "qpf/nn.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "qpf/error.hpp"
#include "qpf/util.hpp"

namespace qpf {

using nlohmann::json;

namespace {

bool is_output_layer(const LayerTopology& topo, std::size_t layer) {
  return layer + 1 == topo.layers();
}

// Activation for layer `layer` applied to its pre-activations.
Eigen::MatrixXd activate_layer(const LayerTopology& topo, std::size_t layer,
                               const Eigen::MatrixXd& pre) {
  if (is_output_layer(topo, layer)) {
    if (topo.output == OutputActivation::Linear) return pre;
    return (topo.output_spec.beta() * pre.array()).tanh().matrix();
  }
  return (topo.hidden.beta() * pre.array()).tanh().matrix();
}

// d out / d pre, expressed through the layer output.
Eigen::ArrayXXd activation_slope(const LayerTopology& topo, std::size_t layer,
                                 const Eigen::MatrixXd& out) {
  if (is_output_layer(topo, layer)) {
    if (topo.output == OutputActivation::Linear)
      return Eigen::ArrayXXd::Ones(out.rows(), out.cols());
    return topo.output_spec.beta() * (1.0 - out.array().square());
  }
  return topo.hidden.beta() * (1.0 - out.array().square());
}

double sign(double w) { return (w > 0.0) - (w < 0.0); }

void check_batch(const LayerTopology& topo, const Eigen::MatrixXd& x) {
  if (x.rows() != topo.sizes.front())
    fail(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.rows()) +
                                       " features, network expects " +
                                       std::to_string(topo.sizes.front()));
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx,
                               std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) out.col(static_cast<Eigen::Index>(k - begin)) = m.col(idx[k]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index n_rows, Eigen::Index n_cols) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n_rows)
    fail(ErrorCode::Parse, "weight matrix has the wrong number of rows");
  Eigen::MatrixXd m(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols)
      fail(ErrorCode::Parse, "weight matrix has the wrong number of columns");
    for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

void LayerTopology::validate() const {
  if (sizes.size() < 2) fail(ErrorCode::InvalidArgument, "topology needs at least 2 layers");
  for (int s : sizes)
    if (s < 1) fail(ErrorCode::InvalidArgument, "layer sizes must be >= 1");
}

MLPParams MLPParams::zeros_like() const {
  MLPParams z;
  for (const auto& w : weights) z.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) z.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  return z;
}

void MLPParams::check_shapes(const LayerTopology& topo) const {
  if (weights.size() != topo.layers() || biases.size() != topo.layers())
    fail(ErrorCode::ShapeMismatch, "parameter count does not match topology");
  for (std::size_t l = 0; l < topo.layers(); ++l) {
    if (weights[l].rows() != topo.sizes[l + 1] || weights[l].cols() != topo.sizes[l] ||
        biases[l].size() != topo.sizes[l + 1])
      fail(ErrorCode::ShapeMismatch, "layer " + std::to_string(l + 1) + " has the wrong shape");
  }
}

MLPParams glorot_init(const LayerTopology& topo, std::uint64_t seed) {
  topo.validate();
  std::mt19937_64 rng(seed);
  MLPParams p;
  for (std::size_t l = 0; l < topo.layers(); ++l) {
    const int fan_in = topo.sizes[l];
    const int fan_out = topo.sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng, -limit, limit);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

ForwardTrace forward(const LayerTopology& topo, const MLPParams& params, const Eigen::MatrixXd& x) {
  params.check_shapes(topo);
  check_batch(topo, x);
  ForwardTrace t;
  t.input = x;
  const Eigen::MatrixXd* prev = &t.input;
  for (std::size_t l = 0; l < topo.layers(); ++l) {
    Eigen::MatrixXd pre = params.weights[l] * (*prev);
    if (topo.use_bias) pre.colwise() += params.biases[l];
    t.out.push_back(activate_layer(topo, l, pre));
    t.pre.push_back(std::move(pre));
    prev = &t.out.back();
  }
  return t;
}

double mse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    fail(ErrorCode::ShapeMismatch, "predictions and targets differ in shape");
  if (targets.size() == 0) fail(ErrorCode::ShapeMismatch, "empty batch");
  return (predictions - targets).squaredNorm() / static_cast<double>(targets.size());
}

std::vector<double> mape(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    fail(ErrorCode::ShapeMismatch, "predictions and targets differ in shape");
  if (targets.cols() == 0) fail(ErrorCode::ShapeMismatch, "empty batch");
  std::vector<double> out(static_cast<std::size_t>(targets.rows()), 0.0);
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      const double t = targets(r, c);
      if (std::abs(t) < 1e-9)
        fail(ErrorCode::MapeUndefined, "target " + std::to_string(r) + " is zero in sample " +
                                           std::to_string(c));
      sum += std::abs(t - predictions(r, c)) / std::abs(t);
    }
    out[static_cast<std::size_t>(r)] = 100.0 * sum / static_cast<double>(targets.cols());
  }
  return out;
}

double loss(const LayerTopology& topo, const MLPParams& params, const Eigen::MatrixXd& x,
            const Eigen::MatrixXd& targets, const Regularization& reg) {
  double value = mse(forward(topo, params, x).output(), targets);
  for (const auto& w : params.weights)
    value += reg.l1 * w.cwiseAbs().sum() + reg.l2 * w.squaredNorm();
  return value;
}

MLPParams backward(const LayerTopology& topo, const MLPParams& params, const ForwardTrace& trace,
                   const Eigen::MatrixXd& targets, const Regularization& reg) {
  params.check_shapes(topo);
  if (trace.out.size() != topo.layers())
    fail(ErrorCode::ShapeMismatch, "trace does not match topology");
  const auto& y = trace.output();
  if (targets.rows() != y.rows() || targets.cols() != y.cols())
    fail(ErrorCode::ShapeMismatch, "targets do not match network output");

  MLPParams grads = params.zeros_like();
  const auto last = topo.layers() - 1;
  // dE/dI for the output layer of the batch-mean squared error.
  Eigen::MatrixXd delta = (2.0 / static_cast<double>(targets.size())) * (y - targets);
  delta = (delta.array() * activation_slope(topo, last, y)).matrix();

  for (std::size_t l = topo.layers(); l-- > 0;) {
    const Eigen::MatrixXd& below = l == 0 ? trace.input : trace.out[l - 1];
    grads.weights[l] = delta * below.transpose();
    if (topo.use_bias) grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.weights[l].transpose() * delta;
      delta = (back.array() * activation_slope(topo, l - 1, trace.out[l - 1])).matrix();
    }
  }
  if (reg.l1 != 0.0 || reg.l2 != 0.0) {
    for (std::size_t l = 0; l < topo.layers(); ++l)
      grads.weights[l] += (reg.l1 * params.weights[l].unaryExpr(&sign) +
                           (2.0 * reg.l2) * params.weights[l]);
  }
  return grads;
}

const char* to_string(OptimizerKind kind) noexcept {
  switch (kind) {
    case OptimizerKind::SGD: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adamax: return "adamax";
    case OptimizerKind::Nadam: return "nadam";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "sgd") return OptimizerKind::SGD;
  if (lower == "adam") return OptimizerKind::Adam;
  if (lower == "adamax") return OptimizerKind::Adamax;
  if (lower == "nadam") return OptimizerKind::Nadam;
  fail(ErrorCode::InvalidArgument, "unknown optimizer '" + text + "'");
}

OptimizerConfig OptimizerConfig::defaults(OptimizerKind kind) {
  OptimizerConfig cfg;
  cfg.kind = kind;
  cfg.learning_rate = kind == OptimizerKind::SGD ? 0.01 : 0.001;
  return cfg;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    fail(ErrorCode::InvalidArgument, "optimizer decay rates must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be > 0");
}

OptimizerState OptimizerState::for_params(const MLPParams& params) {
  return {params.zeros_like(), params.zeros_like()};
}

void optimizer_step(const OptimizerConfig& cfg, OptimizerState& state, MLPParams& params,
                    const MLPParams& grads, long t) {
  if (t < 1) fail(ErrorCode::InvalidArgument, "optimizer step index starts at 1");
  const double lr = cfg.learning_rate;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double eps = cfg.epsilon;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c1_next = 1.0 - std::pow(b1, static_cast<double>(t + 1));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));

  auto update = [&](auto& w_mat, const auto& g_mat, auto& m_mat, auto& v_mat) {
    auto w = w_mat.array();
    const auto g = g_mat.array();
    auto m = m_mat.array();
    auto v = v_mat.array();
    switch (cfg.kind) {
      case OptimizerKind::SGD:
        w -= lr * g;
        break;
      case OptimizerKind::Adam:
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.square();
        w -= lr * (m / c1) / ((v / c2).sqrt() + eps);
        break;
      case OptimizerKind::Adamax:
        m = b1 * m + (1.0 - b1) * g;
        v = (b2 * v).max(g.abs());
        w -= (lr / c1) * m / (v + eps);
        break;
      case OptimizerKind::Nadam:
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.square();
        w -= lr * (b1 * m / c1_next + (1.0 - b1) * g / c1) / ((v / c2).sqrt() + eps);
        break;
    }
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]);
    update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]);
  }
}

void Hyperparams::validate() const {
  if (hidden_layers < 0) fail(ErrorCode::InvalidArgument, "hidden_layers must be >= 0");
  if (hidden_size < 1) fail(ErrorCode::InvalidArgument, "hidden_size must be >= 1");
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) fail(ErrorCode::InvalidArgument, "l1 and l2 must be >= 0");
  optimizer.validate();
  ActivationSpec check(beta);
  (void)check;
}

Hyperparams Hyperparams::preset(const std::string& name) {
  Hyperparams h;
  if (name == "table3") {
    h.hidden_layers = 7;
    h.hidden_size = 10;
    h.epochs = 50;
    h.batch_size = 50;
    h.optimizer = OptimizerConfig::defaults(OptimizerKind::Adam);
    h.beta = 4.1;  // spin 5/2
    return h;
  }
  if (name == "table4") {
    h.hidden_layers = 10;
    h.hidden_size = 50;
    h.epochs = 600;
    h.batch_size = 50;
    h.optimizer = OptimizerConfig::defaults(OptimizerKind::Adamax);
    h.l1 = 1e-4;
    h.l2 = 1e-4;
    h.beta = 4.1;
    return h;
  }
  fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "' (expected table3 or table4)");
}

LayerTopology Hyperparams::topology(int n_in, int n_out) const {
  LayerTopology topo;
  topo.sizes.push_back(n_in);
  for (int k = 0; k < hidden_layers; ++k) topo.sizes.push_back(hidden_size);
  topo.sizes.push_back(n_out);
  topo.hidden = ActivationSpec(beta);
  topo.use_bias = use_bias;
  topo.validate();
  return topo;
}

std::string TrainReport::epoch_log_csv() const {
  std::ostringstream out;
  out << "epoch,train_mse,val_mse\n";
  out << 0 << ',' << format_double(initial_train_mse) << ",\n";
  for (std::size_t e = 0; e < train_mse.size(); ++e) {
    out << e + 1 << ',' << format_double(train_mse[e]) << ',';
    if (e < val_mse.size()) out << format_double(val_mse[e]);
    out << '\n';
  }
  return out.str();
}

TrainResult train(const TrainData& data, const LayerTopology& topo, const Hyperparams& hyper) {
  const auto started = std::chrono::steady_clock::now();
  topo.validate();
  hyper.validate();
  const auto n = data.x_train.cols();
  if (data.x_train.rows() != topo.sizes.front() || data.y_train.rows() != topo.sizes.back() ||
      data.y_train.cols() != n)
    fail(ErrorCode::ShapeMismatch, "training data does not match the topology");
  if (n == 0) fail(ErrorCode::ShapeMismatch, "empty training set");
  if (hyper.batch_size > n)
    fail(ErrorCode::InvalidArgument, "batch_size exceeds the training-set size");
  if (data.has_validation() &&
      (data.x_val.rows() != data.x_train.rows() || data.y_val.rows() != data.y_train.rows() ||
       data.y_val.cols() != data.x_val.cols()))
    fail(ErrorCode::ShapeMismatch, "validation data does not match the topology");

  TrainResult result{glorot_init(topo, hyper.seed), {}};
  auto& params = result.params;
  auto& report = result.report;
  report.seed = hyper.seed;
  report.initial_train_mse = mse(forward(topo, params, data.x_train).output(), data.y_train);

  const Regularization reg{hyper.l1, hyper.l2};
  auto state = OptimizerState::for_params(params);
  std::mt19937_64 rng(mix_seed(hyper.seed, 1));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  long step = 0;
  const auto batch = static_cast<std::size_t>(hyper.batch_size);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[uniform_index(rng, k)]);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const auto end = std::min(order.size(), begin + batch);
      const auto xb = gather_columns(data.x_train, order, begin, end);
      const auto yb = gather_columns(data.y_train, order, begin, end);
      const auto trace = forward(topo, params, xb);
      const auto grads = backward(topo, params, trace, yb, reg);
      optimizer_step(hyper.optimizer, state, params, grads, ++step);
    }
    const double train_mse = mse(forward(topo, params, data.x_train).output(), data.y_train);
    if (!std::isfinite(train_mse))
      fail(ErrorCode::NonFinite, "training loss became non-finite in epoch " +
                                     std::to_string(epoch + 1));
    report.train_mse.push_back(train_mse);
    if (data.has_validation())
      report.val_mse.push_back(mse(forward(topo, params, data.x_val).output(), data.y_val));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

Eigen::MatrixXd Model::predict(const Eigen::MatrixXd& x) const {
  const auto scaled = feature_scaler ? feature_scaler->apply(x) : x;
  const auto out = forward(topology, params, scaled).output();
  return target_scaler ? target_scaler->invert(out) : out;
}

std::string serialize_model(const Model& model) {
  model.params.check_shapes(model.topology);
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < model.topology.layers(); ++l) {
    weights.push_back(matrix_to_json(model.params.weights[l]));
    biases.push_back(std::vector<double>(model.params.biases[l].data(),
                                         model.params.biases[l].data() + model.params.biases[l].size()));
  }
  json scalers = json::object();
  if (model.feature_scaler) scalers["features"] = model.feature_scaler->to_json();
  if (model.target_scaler) scalers["targets"] = model.target_scaler->to_json();
  const auto& topo = model.topology;
  json doc = {
      {"format_version", kModelFormatVersion},
      {"topology",
       {{"sizes", topo.sizes},
        {"hidden_activation", "beta_tanh"},
        {"output_activation", topo.output == OutputActivation::Linear ? "linear" : "beta_tanh"},
        {"output_beta", topo.output_spec.beta()},
        {"use_bias", topo.use_bias}}},
      {"beta", topo.hidden.beta()},
      {"weights", std::move(weights)},
      {"biases", std::move(biases)},
      {"scalers", std::move(scalers)},
  };
  return doc.dump(1) + "\n";
}

Model parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("model file: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("format_version"))
      fail(ErrorCode::Parse, "model file has no format_version");
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      fail(ErrorCode::VersionMismatch, "model format_version " + std::to_string(version) +
                                           " (this build reads " +
                                           std::to_string(kModelFormatVersion) + ")");
    Model model;
    const auto& t = doc.at("topology");
    model.topology.sizes = t.at("sizes").get<std::vector<int>>();
    model.topology.hidden = ActivationSpec(doc.at("beta").get<double>());
    const auto out = t.at("output_activation").get<std::string>();
    if (out == "linear")
      model.topology.output = OutputActivation::Linear;
    else if (out == "beta_tanh")
      model.topology.output = OutputActivation::BetaTanh;
    else
      fail(ErrorCode::Parse, "unknown output activation '" + out + "'");
    model.topology.output_spec = ActivationSpec(t.at("output_beta").get<double>());
    model.topology.use_bias = t.at("use_bias").get<bool>();
    model.topology.validate();

    const auto& w = doc.at("weights");
    const auto& b = doc.at("biases");
    if (w.size() != model.topology.layers() || b.size() != model.topology.layers())
      fail(ErrorCode::Parse, "layer count does not match topology");
    for (std::size_t l = 0; l < model.topology.layers(); ++l) {
      model.params.weights.push_back(
          matrix_from_json(w[l], model.topology.sizes[l + 1], model.topology.sizes[l]));
      const auto bias = b[l].get<std::vector<double>>();
      if (static_cast<int>(bias.size()) != model.topology.sizes[l + 1])
        fail(ErrorCode::Parse, "bias vector has the wrong length");
      model.params.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(),
                                                                      static_cast<Eigen::Index>(bias.size())));
    }
    const auto& sc = doc.at("scalers");
    if (sc.contains("features")) model.feature_scaler = Scaler::from_json(sc.at("features"));
    if (sc.contains("targets")) model.target_scaler = Scaler::from_json(sc.at("targets"));
    return model;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("model file: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_text_file(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

}  // namespace qpf
