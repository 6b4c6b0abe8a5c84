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

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace qpf {

/// Identity keeps per-unit data as is.
enum class ScalerKind { MinMax, Standard, Identity };

const char* to_string(ScalerKind kind) noexcept;
ScalerKind parse_scaler_kind(const std::string& text);

/// Per-feature affine scaling, fitted on the training split only. Data
/// matrices hold one sample per column. Constant features are passed through
/// unchanged and flagged.
struct Scaler {
  ScalerKind kind = ScalerKind::Standard;
  std::vector<double> offset;
  std::vector<double> scale;
  std::vector<bool> constant;

  static Scaler fit(const Eigen::MatrixXd& data, ScalerKind kind);

  std::size_t size() const noexcept { return offset.size(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& scaled) const;

  nlohmann::json to_json() const;
  static Scaler from_json(const nlohmann::json& doc);

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

}  // namespace qpf
