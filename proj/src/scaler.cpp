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

#include "qpf/scaler.hpp"

#include <cmath>

#include "qpf/error.hpp"

namespace qpf {

using nlohmann::json;

const char* to_string(ScalerKind kind) noexcept {
  switch (kind) {
    case ScalerKind::MinMax: return "minmax";
    case ScalerKind::Standard: return "standard";
    case ScalerKind::Identity: return "none";
  }
  return "standard";
}

ScalerKind parse_scaler_kind(const std::string& text) {
  if (text == "minmax" || text == "MinMax") return ScalerKind::MinMax;
  if (text == "standard" || text == "Standard") return ScalerKind::Standard;
  if (text == "none" || text == "identity") return ScalerKind::Identity;
  fail(ErrorCode::InvalidArgument, "unknown scaler '" + text + "'");
}

Scaler Scaler::fit(const Eigen::MatrixXd& data, ScalerKind kind) {
  if (data.cols() == 0) fail(ErrorCode::ShapeMismatch, "cannot fit a scaler on no samples");
  Scaler s;
  s.kind = kind;
  const auto n = static_cast<double>(data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const auto row = data.row(r);
    const double lo = row.minCoeff();
    const double hi = row.maxCoeff();
    double offset;
    double scale;
    if (kind == ScalerKind::Identity) {
      s.offset.push_back(0.0);
      s.scale.push_back(1.0);
      s.constant.push_back(hi == lo);
      continue;
    }
    if (kind == ScalerKind::MinMax) {
      offset = lo;
      scale = hi - lo;
    } else {
      offset = row.sum() / n;
      scale = std::sqrt((row.array() - offset).square().sum() / n);
    }
    const bool constant = hi == lo || !(scale > 0.0);
    s.offset.push_back(constant ? 0.0 : offset);
    s.scale.push_back(constant ? 1.0 : scale);
    s.constant.push_back(constant);
  }
  return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& data) const {
  if (static_cast<std::size_t>(data.rows()) != size())
    fail(ErrorCode::ShapeMismatch, "scaler was fitted on a different feature count");
  Eigen::MatrixXd out = data;
  for (std::size_t r = 0; r < size(); ++r) {
    if (constant[r]) continue;
    const auto i = static_cast<Eigen::Index>(r);
    out.row(i) = (data.row(i).array() - offset[r]) / scale[r];
  }
  return out;
}

Eigen::MatrixXd Scaler::invert(const Eigen::MatrixXd& scaled) const {
  if (static_cast<std::size_t>(scaled.rows()) != size())
    fail(ErrorCode::ShapeMismatch, "scaler was fitted on a different feature count");
  Eigen::MatrixXd out = scaled;
  for (std::size_t r = 0; r < size(); ++r) {
    if (constant[r]) continue;
    const auto i = static_cast<Eigen::Index>(r);
    out.row(i) = scaled.row(i).array() * scale[r] + offset[r];
  }
  return out;
}

json Scaler::to_json() const {
  return {{"kind", to_string(kind)},
          {"offset", offset},
          {"scale", scale},
          {"constant", constant}};
}

Scaler Scaler::from_json(const json& doc) {
  try {
    Scaler s;
    s.kind = parse_scaler_kind(doc.at("kind").get<std::string>());
    s.offset = doc.at("offset").get<std::vector<double>>();
    s.scale = doc.at("scale").get<std::vector<double>>();
    s.constant = doc.at("constant").get<std::vector<bool>>();
    if (s.scale.size() != s.offset.size() || s.constant.size() != s.offset.size())
      fail(ErrorCode::Parse, "scaler arrays differ in length");
    for (std::size_t r = 0; r < s.size(); ++r)
      if (!s.constant[r] && !(s.scale[r] > 0.0))
        fail(ErrorCode::Parse, "scaler has a non-positive scale");
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("scaler: ") + e.what());
  }
}

}  // namespace qpf
