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

#ifndef RFU_ANALYSIS_HPP_
#define RFU_ANALYSIS_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "rfu/simulator.hpp"

namespace rfu {

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;  // log10 y at log10 x = 0
  double r_squared = 0.0;
  std::pair<double, double> window;  // (x_min, x_max) actually fitted
  int used = 0;
  int excluded = 0;  // points in the window with y <= 0
};

/// OLS of log10 y on log10 x over `window` (default: the top decade of x).
/// Throws InsufficientPoints (< 4 usable points), NonPositiveOrdinate (all
/// y <= 0 in the window), InvalidParams (x <= 0).
PowerLawFit powerlaw_slope(const std::vector<std::pair<double, double>>& points,
                           std::optional<std::pair<double, double>> window = std::nullopt);

/// Theory value at one grid lambda.
struct TheoryPoint {
  double lambda = 0.0;
  double norm_sq = 0.0;
  double value = 0.0;
};

struct ZScoreRow {
  double lambda = 0.0;
  double z_norm = 0.0;
  double z_value = 0.0;
  bool degenerate = false;  // zero stderr with a nonzero mismatch
  bool pass = false;        // |z| <= 3 in both coordinates
};

struct Comparison {
  std::vector<ZScoreRow> rows;
  double pass_rate = 0.0;
};

/// z = (sim_mean - theory) / sim_stderr per coordinate. Throws GridMismatch
/// if the lambda grids differ.
Comparison compare_theory_sim(const std::vector<TheoryPoint>& theory,
                              const std::vector<ReplicateStats>& stats, double z_max = 3.0);

/// Pass rate over several compared curves taken together.
double pooled_pass_rate(const std::vector<Comparison>& parts);

/// n points log-spaced (or linear) over [lo, hi]. Throws ConfigInvalid for
/// n < 2 or an empty / non-positive log range.
std::vector<double> make_grid(double lo, double hi, int n, bool log_spaced);

}  // namespace rfu

#endif  // RFU_ANALYSIS_HPP_
