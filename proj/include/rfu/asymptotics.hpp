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

#ifndef RFU_ASYMPTOTICS_HPP_
#define RFU_ASYMPTOTICS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "rfu/fixedpoint.hpp"
#include "rfu/model.hpp"

namespace rfu {

enum class Family { U, T };

const char* to_string(Family f);

/// Closed-form side quantities at the xi -> 0+ fixed point, plus the printed
/// rational norm formulas evaluated for comparison with the derivative form.
struct ChiDiagnostics {
  double m1_bar = 0.0;
  double m2_bar = 0.0;
  double chi1 = 0.0;
  double chi2 = 0.0;
  double chi3 = 0.0;
  double chi4 = 0.0;
  /// (label, value) for each candidate rational norm formula.
  std::vector<std::pair<std::string, double>> rational_norms;
  std::string closest_rational;
  double rational_discrepancy = 0.0;  // relative, closest candidate
  bool discrepancy_flagged = false;   // closest candidate off by > 1e-3
  /// Richardson-combined central difference of the value in lambda and the
  /// relative gap between steps h and h/2 (NaN if a step left the range).
  double finite_difference = 0.0;
  double richardson_gap = 0.0;
};

struct LagrangianPoint {
  double lambda = 0.0;
  double lambda_bar = 0.0;
  double value = 0.0;    // U-bar or T-bar
  double norm_sq = 0.0;  // A_U or A_T
  ChiDiagnostics chi;
  Family family = Family::U;
};

/// U-bar or T-bar alone (no derivative). Throws OutsideAdmissibleRegion.
double bar_value(Family family, double lambda_bar, const ModelParams& params);

/// norm_sq = -d value / d lambda, differentiating the fixed point implicitly.
/// Throws OutsideAdmissibleRegion if the fixed point fails or norm_sq < 0.
LagrangianPoint ubar_point(double lambda_bar, const ModelParams& params);

/// Also throws RequiresOverparam when psi1 <= psi2.
LagrangianPoint tbar_point(double lambda_bar, const ModelParams& params);

LagrangianPoint lagrangian_point(Family family, double lambda_bar, const ModelParams& params);

struct MinNormResult {
  double risk = 0.0;
  double norm_sq = 0.0;
  double chi = 0.0;
};

/// Risk R and squared norm A of the min-norm interpolator.
MinNormResult risk_min_norm(const ModelParams& params,
                            RiskRatioConvention convention = RiskRatioConvention::Unsquared);

struct AdmissibleRange {
  double last_good = 0.0;  // smallest lambda_bar that passed every check
  double first_bad = 0.0;  // largest lambda_bar that failed (0 if none)
  double boundary = 0.0;   // last_good with a 1% safety margin
};

/// Scans lambda_bar down from 10 until the fixed point fails, chi1 changes
/// sign, or the norm turns negative, then refines the crossing by bisection.
/// Throws OutsideAdmissibleRegion if even lambda_bar = 10 fails.
AdmissibleRange admissible_range(Family family, const ModelParams& params);

/// admissible_range(...).boundary.
double admissible_lambda_bar(Family family, const ModelParams& params);

struct DualValue {
  double bound = 0.0;
  double lambda = 0.0;  // attaining lambda (unscaled)
};

/// inf over lambda of value(lambda) + lambda * A, with the root bracketed
/// between the refined boundary and lambda_bar = +inf. Throws
/// NormLevelOutOfRange or EnvelopeViolation.
DualValue dual_value(Family family, double norm_level, const ModelParams& params);

struct DualCurvePoint {
  double norm_level = 0.0;
  double bound = 0.0;
  double lambda = 0.0;
};

struct DualCurve {
  Family family = Family::U;
  std::vector<DualCurvePoint> points;
  ModelParams params;
};

/// Traces (A(lambda), value + lambda A(lambda), lambda) over a lambda_bar grid.
DualCurve dual_curve(Family family, const std::vector<double>& lambda_bars,
                     const ModelParams& params);

/// dual_value at level alpha * A(psi1, psi2).
double alpha_curve(Family family, double alpha, const ModelParams& params);

enum class KernelQuantity { UBarAlpha, TBarAlpha, Risk, Norm, UAtLevel };

const char* to_string(KernelQuantity q);

/// How the psi1 grid of kernel_limit grows with psi2.
enum class Psi1Scaling { Fixed, Linear, Quadratic };

struct KernelLimitOptions {
  /// psi1 grid is multipliers * max(1, psi2)^k, k = 0, 1, 2 by scaling. The
  /// 1/psi1 correction of the excess risk is O(psi2) while the limit itself
  /// decays like 1/psi2 or faster, so the grid must outgrow psi2^2.
  std::vector<double> multipliers{1e2, 1e3, 1e4, 1e5};
  Psi1Scaling scaling = Psi1Scaling::Quadratic;
  double max_relative_residual = 1e-3;
  double level = 0.0;  // norm level for UAtLevel
};

struct KernelLimit {
  double value = 0.0;         // c0
  double slope = 0.0;         // c1 in c0 + c1 / psi1
  double relative_residual = 0.0;
  std::vector<double> psi1;
  std::vector<double> samples;
};

/// Fits c0 + c1 / psi1 over the psi1 grid and returns c0. Throws
/// ExtrapolationUnstable when the fit residual exceeds the tolerance.
KernelLimit kernel_limit(KernelQuantity quantity, double psi2, double alpha,
                         const ModelParams& base, const KernelLimitOptions& options = {});

/// The quantity itself at finite (psi1, psi2).
double finite_quantity(KernelQuantity quantity, double psi1, double psi2, double alpha,
                       const ModelParams& base, double level = 0.0);

}  // namespace rfu

#endif  // RFU_ASYMPTOTICS_HPP_
