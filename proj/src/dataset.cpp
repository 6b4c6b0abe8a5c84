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

#include "qpf/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "qpf/error.hpp"
#include "qpf/util.hpp"

namespace qpf {

using nlohmann::json;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

std::vector<std::size_t> perturbed_buses(const NetworkModel& net, bool all) {
  if (!all) return net.pq();
  std::vector<std::size_t> out(net.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

SampleRecord make_sample(const NetworkModel& net, const DatasetOptions& opts, std::size_t index) {
  std::mt19937_64 rng(mix_seed(opts.seed, index));
  const auto buses = perturbed_buses(net, opts.perturb_all_loads);
  std::vector<double> p_load(net.size());
  std::vector<double> q_load(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    p_load[i] = net.buses()[i].p_load;
    q_load[i] = net.buses()[i].q_load;
  }

  SampleRecord rec;
  rec.id = index;
  for (auto i : buses) {
    const double mp = uniform(rng, opts.low, opts.high);
    const double mq = opts.coupled ? mp : uniform(rng, opts.low, opts.high);
    rec.multipliers.push_back(mp);
    if (!opts.coupled) rec.multipliers.push_back(mq);
    p_load[i] *= mp;
    q_load[i] *= mq;
  }

  const double base = net.base().s_base;
  for (double p : p_load) rec.inputs.push_back(p / base);
  for (double q : q_load) rec.inputs.push_back(q / base);
  for (auto i : net.voltage_controlled()) rec.inputs.push_back(net.buses()[i].v_mag);

  try {
    const auto perturbed = net.with_loads(p_load, q_load);
    const auto sol = solve(perturbed, opts.solve);
    for (auto i : net.pq()) rec.targets.push_back(sol.v_mag[i]);
    for (auto i : net.non_slack()) rec.targets.push_back(sol.delta[i]);
    rec.converged = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotConverged && e.code() != ErrorCode::SingularJacobian) throw;
    rec.converged = false;
  }
  return rec;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void DatasetOptions::validate() const {
  if (n < 1) fail(ErrorCode::InvalidArgument, "sample count must be >= 1");
  if (!(low > 0.0) || !(high >= low) || !std::isfinite(high))
    fail(ErrorCode::InvalidArgument, "multiplier range must satisfy 0 < low <= high");
  solve.validate();
}

json DatasetMeta::to_json() const {
  return {{"seed", seed},
          {"n_requested", n_requested},
          {"n_converged", n_converged},
          {"range", {low, high}},
          {"coupled", coupled},
          {"perturb_all_loads", perturb_all_loads},
          {"solver_tol", solver_tol},
          {"network_fingerprint", network_fingerprint}};
}

DatasetLayout DatasetLayout::for_network(const NetworkModel& net, bool coupled,
                                         bool perturb_all_loads) {
  DatasetLayout l;
  for (auto i : perturbed_buses(net, perturb_all_loads)) {
    const auto id = std::to_string(net.buses()[i].id);
    if (coupled) {
      l.multipliers.push_back("mult_" + id);
    } else {
      l.multipliers.push_back("mult_p_" + id);
      l.multipliers.push_back("mult_q_" + id);
    }
  }
  for (const auto& b : net.buses()) l.inputs.push_back("in_p_load_" + std::to_string(b.id));
  for (const auto& b : net.buses()) l.inputs.push_back("in_q_load_" + std::to_string(b.id));
  for (auto i : net.voltage_controlled())
    l.inputs.push_back("in_v_mag_" + std::to_string(net.buses()[i].id));
  for (auto i : net.pq()) {
    l.targets.push_back("out_v_mag_" + std::to_string(net.buses()[i].id));
    l.target_is_angle.push_back(false);
  }
  for (auto i : net.non_slack()) {
    l.targets.push_back("out_delta_" + std::to_string(net.buses()[i].id) + "_deg");
    l.target_is_angle.push_back(true);
  }
  return l;
}

Dataset generate(const NetworkModel& net, const DatasetOptions& opts) {
  opts.validate();
  std::vector<SampleRecord> all(opts.n);
  const auto workers = static_cast<std::size_t>(std::clamp<long>(opts.threads, 1, static_cast<long>(opts.n)));
  if (workers == 1) {
    for (std::size_t k = 0; k < opts.n; ++k) all[k] = make_sample(net, opts, k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (auto k = next++; k < opts.n; k = next++) {
            try {
              all[k] = make_sample(net, opts, k);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  Dataset ds;
  ds.layout = DatasetLayout::for_network(net, opts.coupled, opts.perturb_all_loads);
  for (auto& rec : all)
    if (rec.converged) ds.samples.push_back(std::move(rec));
  ds.meta.seed = opts.seed;
  ds.meta.n_requested = opts.n;
  ds.meta.n_converged = ds.samples.size();
  ds.meta.low = opts.low;
  ds.meta.high = opts.high;
  ds.meta.coupled = opts.coupled;
  ds.meta.perturb_all_loads = opts.perturb_all_loads;
  ds.meta.solver_tol = opts.solve.tol;
  ds.meta.network_fingerprint = net.fingerprint();
  if (static_cast<double>(ds.meta.n_converged) <
      kMinConvergedFraction * static_cast<double>(opts.n))
    fail(ErrorCode::TooFewConverged, std::to_string(ds.meta.n_converged) + " of " +
                                         std::to_string(opts.n) + " samples converged");
  return ds;
}

std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> split(
    const std::vector<SampleRecord>& samples, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    fail(ErrorCode::InvalidArgument, "split ratio must lie in (0, 1)");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::mt19937_64 rng(mix_seed(seed, 2));
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
  const auto n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) * ratio));
  std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> out;
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_train ? out.first : out.second).push_back(samples[order[k]]);
  return out;
}

Eigen::MatrixXd input_matrix(const std::vector<SampleRecord>& samples) {
  if (samples.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.front().inputs.size()),
                    static_cast<Eigen::Index>(samples.size()));
  for (std::size_t c = 0; c < samples.size(); ++c)
    for (std::size_t r = 0; r < samples[c].inputs.size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples[c].inputs[r];
  return m;
}

Eigen::MatrixXd target_matrix(const std::vector<SampleRecord>& samples) {
  if (samples.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.front().targets.size()),
                    static_cast<Eigen::Index>(samples.size()));
  for (std::size_t c = 0; c < samples.size(); ++c)
    for (std::size_t r = 0; r < samples[c].targets.size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples[c].targets[r];
  return m;
}

double sample_mismatch(const NetworkModel& net, const SampleRecord& sample) {
  const auto n = net.size();
  const auto vc = net.voltage_controlled();
  if (sample.inputs.size() != 2 * n + vc.size() ||
      sample.targets.size() != net.pq().size() + net.non_slack().size())
    fail(ErrorCode::DimensionMismatch, "sample does not match the network layout");
  const double base = net.base().s_base;
  std::vector<double> p_load(n);
  std::vector<double> q_load(n);
  for (std::size_t i = 0; i < n; ++i) {
    p_load[i] = sample.inputs[i] * base;
    q_load[i] = sample.inputs[n + i] * base;
  }
  auto perturbed = net.with_loads(p_load, q_load);
  auto state = StateVector::flat_start(net);
  for (std::size_t k = 0; k < vc.size(); ++k) state.v_mag[vc[k]] = sample.inputs[2 * n + k];
  std::size_t t = 0;
  for (auto i : net.pq()) state.v_mag[i] = sample.targets[t++];
  for (auto i : net.non_slack()) state.delta[i] = sample.targets[t++];
  return mismatch(state, perturbed).inf_norm();
}

std::string samples_to_csv(const DatasetLayout& layout, const std::vector<SampleRecord>& samples) {
  std::ostringstream out;
  out << "sample_id";
  for (const auto& n : layout.multipliers) out << ',' << n;
  for (const auto& n : layout.inputs) out << ',' << n;
  for (const auto& n : layout.targets) out << ',' << n;
  out << ",converged\n";
  for (const auto& s : samples) {
    out << s.id;
    for (double v : s.multipliers) out << ',' << format_double(v);
    for (double v : s.inputs) out << ',' << format_double(v);
    for (std::size_t k = 0; k < s.targets.size(); ++k) {
      const bool angle = k < layout.target_is_angle.size() && layout.target_is_angle[k];
      out << ',' << format_double(angle ? s.targets[k] * kRadToDeg : s.targets[k]);
    }
    out << ',' << (s.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

LoadedSamples samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Parse, "dataset file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  if (header.size() < 3 || header.front() != "sample_id" || header.back() != "converged")
    fail(ErrorCode::Parse, "dataset header must start with sample_id and end with converged");

  LoadedSamples out;
  enum class Col { Mult, In, Out };
  std::vector<Col> kinds;
  for (std::size_t k = 1; k + 1 < header.size(); ++k) {
    const auto& name = header[k];
    if (name.rfind("mult_", 0) == 0) {
      out.layout.multipliers.push_back(name);
      kinds.push_back(Col::Mult);
    } else if (name.rfind("in_", 0) == 0) {
      out.layout.inputs.push_back(name);
      kinds.push_back(Col::In);
    } else if (name.rfind("out_", 0) == 0) {
      out.layout.targets.push_back(name);
      out.layout.target_is_angle.push_back(name.size() > 4 &&
                                           name.compare(name.size() - 4, 4, "_deg") == 0);
      kinds.push_back(Col::Out);
    } else {
      fail(ErrorCode::Parse, "unknown dataset column '" + name + "'");
    }
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      fail(ErrorCode::Parse, "dataset line " + std::to_string(line_no) + " has " +
                                 std::to_string(cells.size()) + " columns");
    SampleRecord rec;
    try {
      rec.id = static_cast<std::size_t>(std::stoull(cells.front()));
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        const double v = std::stod(cells[k + 1]);
        switch (kinds[k]) {
          case Col::Mult: rec.multipliers.push_back(v); break;
          case Col::In: rec.inputs.push_back(v); break;
          case Col::Out: {
            const bool angle = out.layout.target_is_angle[rec.targets.size()];
            rec.targets.push_back(angle ? v * kDegToRad : v);
            break;
          }
        }
      }
      rec.converged = std::stoi(cells.back()) != 0;
    } catch (const std::logic_error&) {
      fail(ErrorCode::Parse, "dataset line " + std::to_string(line_no) + ": bad number");
    }
    out.samples.push_back(std::move(rec));
  }
  return out;
}

}  // namespace qpf
