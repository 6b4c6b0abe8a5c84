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

#include "qpf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qpf/error.hpp"
#include "qpf/util.hpp"

namespace qpf {

using nlohmann::json;

const char* to_string(BusKind kind) noexcept {
  switch (kind) {
    case BusKind::Slack: return "Slack";
    case BusKind::PV: return "PV";
    case BusKind::PQ: return "PQ";
  }
  return "?";
}

namespace {

BusKind parse_kind(const std::string& text) {
  if (text == "Slack") return BusKind::Slack;
  if (text == "PV") return BusKind::PV;
  if (text == "PQ") return BusKind::PQ;
  fail(ErrorCode::Parse, "unknown bus kind '" + text + "'");
}

double require_number(const json& obj, const char* key, int bus_id) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number())
    fail(ErrorCode::Parse, "bus " + std::to_string(bus_id) + ": '" + key + "' must be a number");
  return it->get<double>();
}

std::optional<double> optional_number(const json& obj, const char* key, int bus_id) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number())
    fail(ErrorCode::Parse, "bus " + std::to_string(bus_id) + ": '" + key + "' must be a number or null");
  return it->get<double>();
}

json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

double BusRecord::v_angle_rad() const noexcept {
  return v_angle * std::numbers::pi / 180.0;
}

AdmittanceMatrix::AdmittanceMatrix(std::size_t n) : n_(n), entries_(n * n) {}

double AdmittanceMatrix::asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
  return worst;
}

NetworkModel::NetworkModel(std::vector<BusRecord> buses, AdmittanceMatrix ybus,
                           PerUnitBase base)
    : buses_(std::move(buses)), ybus_(std::move(ybus)), base_(base) {
  const auto n = buses_.size();
  if (n == 0) fail(ErrorCode::Validation, "network has no buses");
  if (!(base_.s_base > 0.0) || !std::isfinite(base_.s_base))
    fail(ErrorCode::Validation, "base_mva must be positive");
  if (ybus_.size() != n)
    fail(ErrorCode::Validation, "ybus is " + std::to_string(ybus_.size()) + "x" +
                                    std::to_string(ybus_.size()) + " but there are " +
                                    std::to_string(n) + " buses");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& y = ybus_(i, j);
      if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
        fail(ErrorCode::Validation, "ybus contains a non-finite entry");
    }
  if (ybus_.asymmetry() > kYbusSymmetryTol)
    fail(ErrorCode::Validation, "ybus is not symmetric");

  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& bus = buses_[i];
    const std::string tag = "bus " + std::to_string(bus.id);
    if (bus.id != static_cast<int>(i) + 1)
      fail(ErrorCode::Validation, "bus ids must be 1..n in order (found " + std::to_string(bus.id) +
                                      " at position " + std::to_string(i + 1) + ")");
    for (double v : {bus.p_load, bus.q_load, bus.v_mag, bus.v_angle})
      if (!std::isfinite(v)) fail(ErrorCode::Validation, tag + ": non-finite value");
    switch (bus.kind) {
      case BusKind::Slack:
        ++slack_count;
        slack_ = i;
        if (bus.p_gen || bus.q_gen)
          fail(ErrorCode::Validation, tag + ": slack generation must be unspecified");
        if (!(bus.v_mag > 0.0)) fail(ErrorCode::Validation, tag + ": slack v_mag must be > 0");
        break;
      case BusKind::PV:
        if (!bus.p_gen) fail(ErrorCode::Validation, tag + ": PV bus needs p_gen");
        if (bus.q_gen) fail(ErrorCode::Validation, tag + ": PV q_gen must be unspecified");
        if (!(bus.v_mag > 0.0)) fail(ErrorCode::Validation, tag + ": PV v_mag must be > 0");
        break;
      case BusKind::PQ:
        if (!bus.p_gen || !bus.q_gen)
          fail(ErrorCode::Validation, tag + ": PQ bus needs p_gen and q_gen");
        if (!(bus.v_mag > 0.0)) fail(ErrorCode::Validation, tag + ": v_mag must be > 0");
        break;
    }
  }
  if (slack_count != 1)
    fail(ErrorCode::Validation,
         "expected exactly one slack bus, found " + std::to_string(slack_count));

  for (std::size_t i = 0; i < n; ++i) {
    if (i != slack_) non_slack_.push_back(i);
    if (buses_[i].kind == BusKind::PQ) pq_.push_back(i);
  }
}

std::vector<std::size_t> NetworkModel::voltage_controlled() const {
  std::vector<std::size_t> out{slack_};
  for (std::size_t i = 0; i < buses_.size(); ++i)
    if (buses_[i].kind == BusKind::PV) out.push_back(i);
  return out;
}

NetworkModel NetworkModel::with_loads(const std::vector<double>& p_load,
                                      const std::vector<double>& q_load) const {
  if (p_load.size() != size() || q_load.size() != size())
    fail(ErrorCode::DimensionMismatch, "load vectors must have one entry per bus");
  auto buses = buses_;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    buses[i].p_load = p_load[i];
    buses[i].q_load = q_load[i];
  }
  return NetworkModel(std::move(buses), ybus_, base_);
}

json NetworkModel::to_json() const {
  json doc;
  doc["base_mva"] = base_.s_base;
  json buses = json::array();
  for (const auto& b : buses_) {
    buses.push_back({{"id", b.id},
                     {"kind", to_string(b.kind)},
                     {"p_load", b.p_load},
                     {"q_load", b.q_load},
                     {"p_gen", optional_to_json(b.p_gen)},
                     {"q_gen", optional_to_json(b.q_gen)},
                     {"v_mag", b.v_mag},
                     {"v_angle", b.v_angle}});
  }
  doc["buses"] = std::move(buses);
  json rows = json::array();
  for (std::size_t i = 0; i < ybus_.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < ybus_.size(); ++j)
      row.push_back(json::array({ybus_(i, j).real(), ybus_(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  doc["ybus"] = std::move(rows);
  return doc;
}

NetworkModel NetworkModel::from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::Parse, "network document must be an object");
  auto base_it = doc.find("base_mva");
  if (base_it == doc.end() || !base_it->is_number())
    fail(ErrorCode::Parse, "'base_mva' must be a number");
  auto buses_it = doc.find("buses");
  if (buses_it == doc.end() || !buses_it->is_array())
    fail(ErrorCode::Parse, "'buses' must be an array");
  auto ybus_it = doc.find("ybus");
  if (ybus_it == doc.end() || !ybus_it->is_array())
    fail(ErrorCode::Parse, "'ybus' must be an array");

  std::vector<BusRecord> buses;
  for (const auto& item : *buses_it) {
    if (!item.is_object()) fail(ErrorCode::Parse, "bus entries must be objects");
    auto id_it = item.find("id");
    if (id_it == item.end() || !id_it->is_number_integer())
      fail(ErrorCode::Parse, "bus 'id' must be an integer");
    BusRecord bus;
    bus.id = id_it->get<int>();
    auto kind_it = item.find("kind");
    if (kind_it == item.end() || !kind_it->is_string())
      fail(ErrorCode::Parse, "bus " + std::to_string(bus.id) + ": 'kind' must be a string");
    bus.kind = parse_kind(kind_it->get<std::string>());
    bus.p_load = require_number(item, "p_load", bus.id);
    bus.q_load = require_number(item, "q_load", bus.id);
    bus.p_gen = optional_number(item, "p_gen", bus.id);
    bus.q_gen = optional_number(item, "q_gen", bus.id);
    bus.v_mag = require_number(item, "v_mag", bus.id);
    bus.v_angle = require_number(item, "v_angle", bus.id);
    buses.push_back(bus);
  }

  const auto n = ybus_it->size();
  AdmittanceMatrix ybus(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = (*ybus_it)[i];
    if (!row.is_array() || row.size() != n)
      fail(ErrorCode::Validation, "ybus row " + std::to_string(i + 1) + " must have " +
                                      std::to_string(n) + " entries");
    for (std::size_t j = 0; j < n; ++j) {
      const auto& cell = row[j];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
        fail(ErrorCode::Parse, "ybus entries must be [re, im] pairs");
      ybus(i, j) = {cell[0].get<double>(), cell[1].get<double>()};
    }
  }
  return NetworkModel(std::move(buses), std::move(ybus), PerUnitBase{base_it->get<double>()});
}

std::string NetworkModel::fingerprint() const {
  return hex64(fnv1a64(to_json().dump()));
}

NetworkModel load_network(const std::filesystem::path& path) {
  auto resolved = path;
  if (!std::filesystem::exists(resolved) && !resolved.has_extension()) {
    auto with_ext = resolved;
    with_ext += ".json";
    if (std::filesystem::exists(with_ext)) resolved = with_ext;
  }
  const auto text = read_text_file(resolved);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, resolved.string() + ": " + e.what());
  }
  return NetworkModel::from_json(doc);
}

void save_network(const NetworkModel& net, const std::filesystem::path& path) {
  write_text_file(path, net.to_json().dump(2) + "\n");
}

std::vector<ScheduledInjection> scheduled_injections(const NetworkModel& net) {
  const double base = net.base().s_base;
  std::vector<ScheduledInjection> out(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& bus = net.buses()[i];
    if (bus.kind == BusKind::Slack) continue;
    out[i].p = (bus.p_gen.value_or(0.0) - bus.p_load) / base;
    if (bus.kind == BusKind::PQ) out[i].q = (bus.q_gen.value_or(0.0) - bus.q_load) / base;
  }
  return out;
}

}  // namespace qpf
