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
#include <string>
#include <vector>

#include <json.hpp>

#include "qpf/dataset.hpp"
#include "qpf/nn.hpp"
#include "qpf/scaler.hpp"

namespace qpf {

/// File names inside a dataset directory.
inline constexpr const char* kAllSamplesFile = "dataset.csv";
inline constexpr const char* kTrainFile = "train.csv";
inline constexpr const char* kTestFile = "test.csv";
inline constexpr const char* kMetaFile = "meta.json";

struct SplitSpec {
  double ratio = 0.8;
  std::uint64_t seed = 0;
  ScalerKind scaler = ScalerKind::Standard;
};

/// Splits, fits scalers on the training part, and writes dataset.csv,
/// train.csv, test.csv and meta.json.
void write_dataset_dir(const std::filesystem::path& dir, const Dataset& ds, const SplitSpec& spec);

struct SplitData {
  DatasetLayout layout;
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> test;
  ScalerKind scaler = ScalerKind::Standard;
  nlohmann::json meta;
};

SplitData load_dataset_dir(const std::filesystem::path& dir);

struct TrainRun {
  Model model;
  TrainReport report;
};

/// Fits feature and target scalers on `train`, trains, and validates on `test`
/// when it is non-empty. Reported MSE values are in scaled target units.
TrainRun run_training(const std::vector<SampleRecord>& train, const std::vector<SampleRecord>& test,
                      const Hyperparams& hyper, ScalerKind scaler);

struct Evaluation {
  std::size_t n_samples = 0;
  double mse = 0.0;           // scaled target units, comparable to the epoch log
  double mse_physical = 0.0;  // pu and rad
  std::vector<double> mape;   // percent, per target

  nlohmann::json to_json(const DatasetLayout& layout) const;
};

Evaluation evaluate(const Model& model, const std::vector<SampleRecord>& samples);

nlohmann::json hyperparams_to_json(const Hyperparams& h);

}  // namespace qpf
