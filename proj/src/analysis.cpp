// Copyright 2026 The rfuniform Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rfu/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfu/errors.hpp"

namespace rfu {

PowerLawFit powerlaw_slope(const std::vector<std::pair<double, double>>& points,
                           std::optional<std::pair<double, double>> window) {
  if (points.empty()) {
    throw Error(ErrorKind::InsufficientPoints, "no points to fit");
  }
  double x_max = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0)) throw Error(ErrorKind::InvalidParams, "abscissa must be positive", x);
    x_max = std::max(x_max, x);
  }
  const auto win = window.value_or(std::make_pair(x_max / 10.0, x_max));
  const double tol = 1e-12 * win.second;

  PowerLawFit fit;
  std::vector<double> lx, ly;
  double y_ref = 0.0;  // ordinates enter as log(y / y_ref)
  int in_window = 0;
  for (const auto& [x, y] : points) {
    if (x < win.first - tol || x > win.second + tol) continue;
    ++in_window;
    if (!(y > 0.0)) {
      ++fit.excluded;
      continue;
    }
    if (y_ref == 0.0) y_ref = y;
    lx.push_back(std::log10(x));
    ly.push_back(std::log10(y / y_ref));
  }
  if (in_window > 0 && lx.empty()) {
    throw Error(ErrorKind::NonPositiveOrdinate, "every ordinate in the window is <= 0");
  }
  if (lx.size() < 4) {
    throw Error(ErrorKind::InsufficientPoints,
                "need 4 points in the window, have " + std::to_string(lx.size()),
                static_cast<double>(lx.size()));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mx, dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw Error(ErrorKind::InsufficientPoints, "abscissae in the window coincide");
  }
  fit.slope = sxy / sxx;
  fit.intercept = std::log10(y_ref) + my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  fit.window = {std::pow(10.0, *std::min_element(lx.begin(), lx.end())),
                std::pow(10.0, *std::max_element(lx.begin(), lx.end()))};
  fit.used = static_cast<int>(lx.size());
  return fit;
}

Comparison compare_theory_sim(const std::vector<TheoryPoint>& theory,
                              const std::vector<ReplicateStats>& stats, double z_max) {
  if (theory.size() != stats.size()) {
    throw Error(ErrorKind::GridMismatch, "theory and simulation grids differ in length");
  }
  Comparison out;
  int passed = 0;
  auto zscore = [](double mean, double se, double th, bool& degenerate) {
    const double diff = mean - th;
    if (se > 0.0) return diff / se;
    if (diff != 0.0) degenerate = true;
    return 0.0;
  };
  for (std::size_t i = 0; i < theory.size(); ++i) {
    const double a = theory[i].lambda, b = stats[i].lambda;
    if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
      throw Error(ErrorKind::GridMismatch,
                  "lambda grids differ at index " + std::to_string(i), a - b);
    }
    ZScoreRow row;
    row.lambda = a;
    row.z_norm = zscore(stats[i].norm_sq.mean, stats[i].norm_sq.stderr_, theory[i].norm_sq,
                        row.degenerate);
    row.z_value =
        zscore(stats[i].value.mean, stats[i].value.stderr_, theory[i].value, row.degenerate);
    row.pass = !row.degenerate && std::abs(row.z_norm) <= z_max && std::abs(row.z_value) <= z_max;
    passed += row.pass ? 1 : 0;
    out.rows.push_back(row);
  }
  out.pass_rate = theory.empty() ? 0.0 : static_cast<double>(passed) / theory.size();
  return out;
}

double pooled_pass_rate(const std::vector<Comparison>& parts) {
  int passed = 0, total = 0;
  for (const auto& c : parts) {
    for (const auto& r : c.rows) {
      passed += r.pass ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(passed) / total;
}

std::vector<double> make_grid(double lo, double hi, int n, bool log_spaced) {
  if (n < 2) {
    throw Error(ErrorKind::ConfigInvalid, "grid count must be at least 2", n);
  }
  if (!(hi > lo) || (log_spaced && !(lo > 0.0))) {
    throw Error(ErrorKind::ConfigInvalid, "grid range is empty or not positive");
  }
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    g[i] = log_spaced ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace rfu
