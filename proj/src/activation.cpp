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

#include "qpf/activation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qpf/error.hpp"
#include "qpf/qsim.hpp"
#include "qpf/util.hpp"

namespace qpf {

namespace {

constexpr double kBetaLow = 1e-3;
constexpr double kBetaHigh = 100.0;
constexpr double kBetaTol = 1e-8;

double rss_at(const ActivationCurve& c, double beta) {
  double s = 0.0;
  for (const auto& p : c.points) {
    const double r = p.y - std::tanh(beta * p.u);
    s += r * r;
  }
  return s;
}

// First and second derivative of the residual sum of squares in beta.
std::pair<double, double> rss_slope(const ActivationCurve& c, double beta) {
  double d1 = 0.0;
  double d2 = 0.0;
  for (const auto& p : c.points) {
    const double t = std::tanh(beta * p.u);
    const double sech2 = 1.0 - t * t;
    const double r = p.y - t;
    d1 += -2.0 * r * p.u * sech2;
    d2 += 2.0 * (p.u * p.u * sech2 * sech2 + 2.0 * r * t * p.u * p.u * sech2);
  }
  return {d1, d2};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void ActivationCurve::validate() const {
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (!std::isfinite(p.u) || !std::isfinite(p.y))
      fail(ErrorCode::Validation, "curve point " + std::to_string(k) + " is not finite");
    if (std::abs(p.y) > 1.0 + 1e-9)
      fail(ErrorCode::Validation, "curve output outside [-1, 1] at point " + std::to_string(k));
    if (k > 0 && !(p.u > points[k - 1].u))
      fail(ErrorCode::Validation, "curve inputs must be strictly increasing");
  }
}

std::string ActivationCurve::to_csv() const {
  std::ostringstream out;
  out << "u,sigma_z,collisions_used,converged\n";
  for (const auto& p : points)
    out << format_double(p.u) << ',' << format_double(p.y) << ',' << p.collisions_used << ','
        << (p.converged ? 1 : 0) << '\n';
  return out.str();
}

ActivationCurve ActivationCurve::from_csv(const std::string& text) {
  ActivationCurve curve;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("u,", 0) == 0) continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() < 2) fail(ErrorCode::Parse, "curve line " + std::to_string(line_no));
    try {
      CurvePoint p;
      p.u = std::stod(cells[0]);
      p.y = std::stod(cells[1]);
      if (cells.size() > 2) p.collisions_used = std::stoi(cells[2]);
      if (cells.size() > 3) p.converged = std::stoi(cells[3]) != 0;
      curve.points.push_back(p);
    } catch (const std::logic_error&) {
      fail(ErrorCode::Parse, "curve line " + std::to_string(line_no) + ": bad number");
    }
  }
  curve.validate();
  return curve;
}

nlohmann::json BetaFit::to_json() const {
  return {{"beta", beta}, {"rss", rss}, {"n_points", n_points}, {"provenance", provenance}};
}

ActivationSpec::ActivationSpec(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    fail(ErrorCode::InvalidArgument, "beta must be a positive finite number");
}

BetaFit fit_beta(const ActivationCurve& curve) {
  curve.validate();
  if (curve.points.size() < 5) fail(ErrorCode::DegenerateCurve, "need at least 5 points");
  const bool has_neg = std::any_of(curve.points.begin(), curve.points.end(),
                                   [](const CurvePoint& p) { return p.u < 0.0; });
  const bool has_pos = std::any_of(curve.points.begin(), curve.points.end(),
                                   [](const CurvePoint& p) { return p.u > 0.0; });
  if (!has_neg || !has_pos) fail(ErrorCode::DegenerateCurve, "inputs must span both signs");
  const double y0 = curve.points.front().y;
  if (std::all_of(curve.points.begin(), curve.points.end(),
                  [y0](const CurvePoint& p) { return p.y == y0; }))
    fail(ErrorCode::DegenerateCurve, "all outputs are equal");

  // Bracket the minimum on a log grid, then golden-section inside the bracket.
  constexpr int kGrid = 400;
  const double log_lo = std::log(kBetaLow);
  const double step = (std::log(kBetaHigh) - log_lo) / kGrid;
  int best = 0;
  double best_rss = rss_at(curve, kBetaLow);
  for (int k = 1; k <= kGrid; ++k) {
    const double r = rss_at(curve, std::exp(log_lo + k * step));
    if (r < best_rss) {
      best_rss = r;
      best = k;
    }
  }
  double a = std::exp(log_lo + std::max(best - 1, 0) * step);
  double b = std::exp(log_lo + std::min(best + 1, kGrid) * step);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = rss_at(curve, c);
  double fd = rss_at(curve, d);
  while (b - a > 1e-3 * kBetaTol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = rss_at(curve, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = rss_at(curve, d);
    }
  }
  double beta = 0.5 * (a + b);
  double rss = rss_at(curve, beta);

  // Newton polish; keep a step only if it lowers the residual.
  for (int it = 0; it < 20; ++it) {
    const auto [d1, d2] = rss_slope(curve, beta);
    if (!(d2 > 0.0)) break;
    const double next = std::clamp(beta - d1 / d2, kBetaLow, kBetaHigh);
    const double next_rss = rss_at(curve, next);
    if (!(next_rss <= rss)) break;
    const double moved = std::abs(next - beta);
    beta = next;
    rss = next_rss;
    if (moved < 1e-14 * beta) break;
  }

  BetaFit fit;
  fit.beta = beta;
  fit.rss = rss;
  fit.n_points = static_cast<int>(curve.points.size());
  fit.provenance = curve.provenance;
  return fit;
}

const std::map<int, double>& beta_table() {
  static const std::map<int, double> table{{1, 2.22}, {2, 2.78}, {3, 3.33}, {5, 4.1}};
  return table;
}

double beta_for_spin(const Spin& spin) {
  const auto& table = beta_table();
  const auto it = table.find(spin.twice());
  if (it == table.end())
    fail(ErrorCode::UnknownSpin, "no published beta for spin " + spin.label());
  return it->second;
}

}  // namespace qpf
