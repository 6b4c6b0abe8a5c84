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

#include "qpf/experiment.hpp"

#include "qpf/error.hpp"
#include "qpf/util.hpp"

namespace qpf {

using nlohmann::json;

void write_dataset_dir(const std::filesystem::path& dir, const Dataset& ds, const SplitSpec& spec) {
  auto [train, test] = split(ds.samples, spec.ratio, spec.seed);
  if (train.empty()) fail(ErrorCode::InvalidArgument, "training split is empty");
  const auto features = Scaler::fit(input_matrix(train), spec.scaler);
  const auto targets = Scaler::fit(target_matrix(train), spec.scaler);

  write_text_file(dir / kAllSamplesFile, samples_to_csv(ds.layout, ds.samples));
  write_text_file(dir / kTrainFile, samples_to_csv(ds.layout, train));
  write_text_file(dir / kTestFile, samples_to_csv(ds.layout, test));

  json meta = ds.meta.to_json();
  meta["split_ratio"] = spec.ratio;
  meta["split_seed"] = spec.seed;
  meta["n_train"] = train.size();
  meta["n_test"] = test.size();
  meta["scaler"] = to_string(spec.scaler);
  meta["scalers"] = {{"features", features.to_json()}, {"targets", targets.to_json()}};
  meta["columns"] = {{"multipliers", ds.layout.multipliers},
                     {"inputs", ds.layout.inputs},
                     {"targets", ds.layout.targets}};
  write_text_file(dir / kMetaFile, meta.dump(2) + "\n");
}

SplitData load_dataset_dir(const std::filesystem::path& dir) {
  SplitData out;
  auto train = samples_from_csv(read_text_file(dir / kTrainFile));
  out.layout = std::move(train.layout);
  out.train = std::move(train.samples);
  if (std::filesystem::exists(dir / kTestFile))
    out.test = samples_from_csv(read_text_file(dir / kTestFile)).samples;
  if (std::filesystem::exists(dir / kMetaFile)) {
    try {
      out.meta = json::parse(read_text_file(dir / kMetaFile));
      if (out.meta.contains("scaler"))
        out.scaler = parse_scaler_kind(out.meta.at("scaler").get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, std::string("meta.json: ") + e.what());
    }
  }
  return out;
}

TrainRun run_training(const std::vector<SampleRecord>& train, const std::vector<SampleRecord>& test,
                      const Hyperparams& hyper, ScalerKind scaler) {
  if (train.empty()) fail(ErrorCode::InvalidArgument, "no training samples");
  const Eigen::MatrixXd x = input_matrix(train);
  const Eigen::MatrixXd y = target_matrix(train);
  TrainRun run;
  run.model.feature_scaler = Scaler::fit(x, scaler);
  run.model.target_scaler = Scaler::fit(y, scaler);
  run.model.topology = hyper.topology(static_cast<int>(x.rows()), static_cast<int>(y.rows()));

  TrainData data;
  data.x_train = run.model.feature_scaler->apply(x);
  data.y_train = run.model.target_scaler->apply(y);
  if (!test.empty()) {
    data.x_val = run.model.feature_scaler->apply(input_matrix(test));
    data.y_val = run.model.target_scaler->apply(target_matrix(test));
  }
  auto result = qpf::train(data, run.model.topology, hyper);
  run.model.params = std::move(result.params);
  run.report = std::move(result.report);
  return run;
}

Evaluation evaluate(const Model& model, const std::vector<SampleRecord>& samples) {
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "no samples to evaluate");
  const Eigen::MatrixXd x = input_matrix(samples);
  const Eigen::MatrixXd y = target_matrix(samples);
  const Eigen::MatrixXd xs = model.feature_scaler ? model.feature_scaler->apply(x) : x;
  const Eigen::MatrixXd ys = model.target_scaler ? model.target_scaler->apply(y) : y;
  const Eigen::MatrixXd pred_scaled = forward(model.topology, model.params, xs).output();
  const Eigen::MatrixXd pred =
      model.target_scaler ? model.target_scaler->invert(pred_scaled) : pred_scaled;

  Evaluation ev;
  ev.n_samples = samples.size();
  ev.mse = mse(pred_scaled, ys);
  ev.mse_physical = mse(pred, y);
  ev.mape = mape(pred, y);
  return ev;
}

json Evaluation::to_json(const DatasetLayout& layout) const {
  json per_output = json::object();
  for (std::size_t k = 0; k < mape.size(); ++k) {
    const auto name = k < layout.targets.size() ? layout.targets[k] : "out_" + std::to_string(k);
    per_output[name] = mape[k];
  }
  return {{"n_samples", n_samples},
          {"mse", mse},
          {"mse_physical", mse_physical},
          {"mape_percent", std::move(per_output)}};
}

json hyperparams_to_json(const Hyperparams& h) {
  return {{"hidden_layers", h.hidden_layers},
          {"hidden_size", h.hidden_size},
          {"epochs", h.epochs},
          {"batch_size", h.batch_size},
          {"optimizer", to_string(h.optimizer.kind)},
          {"learning_rate", h.optimizer.learning_rate},
          {"beta1", h.optimizer.beta1},
          {"beta2", h.optimizer.beta2},
          {"epsilon", h.optimizer.epsilon},
          {"l1", h.l1},
          {"l2", h.l2},
          {"seed", h.seed},
          {"beta", h.beta},
          {"use_bias", h.use_bias}};
}

}  // namespace qpf
