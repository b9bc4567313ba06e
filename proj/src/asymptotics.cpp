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

#include "rfu/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rfu/errors.hpp"

namespace rfu {
namespace {

constexpr double kScanGrowth = 4.0;
constexpr double kScanCeiling = 1e8;
constexpr double kScanStart = 10.0;
constexpr double kScanRatio = 1.5;
constexpr double kScanFloor = 1e-10;  // times 1/psi1
constexpr double kBoundaryMargin = 1.01;
constexpr double kRelativeStep = 1e-4;
constexpr double kRationalTol = 1e-3;
constexpr double kEnvelopeStep = 1e-3;
constexpr double kLambdaTol = 1e-10;

struct BarState {
  double m1 = 0.0;
  double m2 = 0.0;
  double chi1 = 0.0;
  double value = 0.0;
  double norm_sq = 0.0;  // -dvalue/dlambda through the implicit function theorem
};

EquationFamily family_for(Family f, double lambda_bar) {
  return f == Family::U ? EquationFamily::ubar(lambda_bar) : EquationFamily::tbar(lambda_bar);
}

void require_overparam(Family f, const ModelParams& params) {
  if (f == Family::T && !(params.psi1 > params.psi2)) {
    throw Error(ErrorKind::RequiresOverparam, "T-bar needs psi1 > psi2", params.psi1);
  }
}

BarState bar_state(Family f, double lambda_bar, const ModelParams& params) {
  const EquationFamily family = family_for(f, lambda_bar);
  ZeroLimit z;
  try {
    z = solve_at_zero(family, params);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidFamily) throw;
    throw Error(ErrorKind::OutsideAdmissibleRegion,
                "no fixed point at lambda_bar = " + std::to_string(lambda_bar) + ": " + e.what(),
                lambda_bar);
  }
  if (z.zero_in_spectrum) {
    throw Error(ErrorKind::OutsideAdmissibleRegion,
                "xi = 0 lies in the spectrum at lambda_bar = " + std::to_string(lambda_bar),
                lambda_bar);
  }
  BarState s;
  const cd m1 = z.state.m1, m2 = z.state.m2;
  s.m1 = m1.real();
  s.m2 = m2.real();
  const double zeta = params.zeta();
  const cd chi1 = 1.0 + zeta * m1 - zeta * m1 * m2;
  s.chi1 = chi1.real();
  if (std::abs(chi1) < 1e-14) {
    throw Error(ErrorKind::OutsideAdmissibleRegion,
                "chi1 vanishes at lambda_bar = " + std::to_string(lambda_bar), lambda_bar);
  }
  const double F = params.f1_sq, tau = params.tau_sq;
  s.value = ((1.0 - m2) * (tau + F / chi1)).real();

  // dm/dlambda_bar = (I - J)^{-1} dF/dlambda_bar, with dF1/dlambda_bar = m1^2.
  const FixedPointSystem sys = FixedPointSystem::from(family, params);
  const auto jac = sys.rhs_jacobian(m1, m2, z.state.xi);
  const cd a = 1.0 - jac[0], b = -jac[1], c = -jac[2], e = 1.0 - jac[3];
  const cd det = a * e - b * c;
  if (std::abs(det) < 1e-300) {
    throw Error(ErrorKind::OutsideAdmissibleRegion,
                "fixed point is critical at lambda_bar = " + std::to_string(lambda_bar), lambda_bar);
  }
  const cd rhs1 = m1 * m1;
  const cd dm1 = e * rhs1 / det;
  const cd dm2 = -c * rhs1 / det;
  const cd dval_dm1 = -(1.0 - m2) * F / (chi1 * chi1) * zeta * (1.0 - m2);
  const cd dval_dm2 = -(tau + F / chi1) + (1.0 - m2) * F / (chi1 * chi1) * zeta * m1;
  s.norm_sq = -(dval_dm1 * dm1 + dval_dm2 * dm2).real() / params.mustar_sq();
  return s;
}

double central_difference(Family f, double lambda_bar, double h, const ModelParams& params) {
  const double up = bar_state(f, lambda_bar + h, params).value;
  const double down = bar_state(f, lambda_bar - h, params).value;
  return -(up - down) / (2.0 * h * params.mustar_sq());
}

// Richardson-combined central differences with steps h and h/2; returns
// (estimate, |D(h) - D(h/2)| / |estimate|) or NaNs if a step leaves the
// admissible range.
std::pair<double, double> difference_check(Family f, double lambda_bar, const ModelParams& params) {
  const double h = kRelativeStep * lambda_bar;
  try {
    const double coarse = central_difference(f, lambda_bar, h, params);
    const double fine = central_difference(f, lambda_bar, h / 2.0, params);
    const double est = (4.0 * fine - coarse) / 3.0;
    return {est, std::abs(fine - coarse) / std::max(std::abs(est), 1e-300)};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::OutsideAdmissibleRegion) throw;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
}

void fill_rational(Family f, double lambda_bar, const ModelParams& params, double norm_sq,
                   ChiDiagnostics& d) {
  const double z = params.zeta();
  const double p1 = params.psi1, p2 = params.psi2, lb = lambda_bar;
  const double F = params.f1_sq, tau = params.tau_sq;
  const double m1 = d.m1_bar, m2 = d.m2_bar;
  const double c1 = d.chi1, c2 = d.chi2, c3 = d.chi3, c4 = d.chi4;
  (void)lb;
  auto sq = [](double x) { return x * x; };
  if (f == Family::U) {
    const double e1 = sq(p1) * (p2 * std::pow(c1, 4) + p2 * sq(c1) * z);
    const double e2 =
        sq(p1) * (sq(c1) * sq(c2) * sq(m2) * z - 2 * sq(c1) * sq(c2) * m2 * z + sq(c1) * sq(c2) * z +
                  p2 * sq(c1) - p2 * sq(m1) * sq(m2) * std::pow(z, 3) +
                  2 * p2 * sq(m1) * m2 * std::pow(z, 3) - p2 * sq(m1) * std::pow(z, 3) + p2 * z);
    const double e3 =
        -std::pow(c1, 4) * sq(c2) * sq(c3) + p1 * p2 * std::pow(c1, 4) +
        p1 * sq(c1) * sq(c2) * sq(m2) * sq(z) - 2 * p1 * sq(c1) * sq(c2) * m2 * sq(z) +
        p1 * sq(c1) * sq(c2) * sq(z) + p2 * sq(c1) * sq(c3) * sq(m1) * sq(z) +
        2 * p1 * p2 * sq(c1) * z - p1 * p2 * sq(m1) * sq(m2) * std::pow(z, 4) +
        2 * p1 * p2 * sq(m1) * m2 * std::pow(z, 4) - p1 * p2 * sq(m1) * std::pow(z, 4) +
        p1 * p2 * sq(z);
    d.rational_norms = {
        {"(tau2+F2)E1/E2", (tau + F) * e1 / e2},
        {"(tau2+F2)E3/E2", (tau + F) * e3 / e2},
        {"(tau2 E1+F2 E3)/E2", (tau * e1 + F * e3) / e2},
        {"(tau2 E3+F2 E1)/E2", (tau * e3 + F * e1) / e2},
        {"(tau2+F2)E1/E3", (tau + F) * e1 / e3},
    };
  } else {
    const double e4 =
        p1 * (p2 * std::pow(c1, 4) * std::pow(c4, 3) +
              std::pow(c1, 4) * sq(c4) * std::pow(m1, 3) * sq(m2) * std::pow(z, 3) -
              2 * std::pow(c1, 4) * sq(c4) * std::pow(m1, 3) * m2 * std::pow(z, 3) +
              std::pow(c1, 4) * sq(c4) * std::pow(m1, 3) * std::pow(z, 3) +
              2 * std::pow(c1, 3) * sq(c4) * std::pow(m1, 3) * sq(m2) * sq(z) -
              4 * std::pow(c1, 3) * sq(c4) * std::pow(m1, 3) * m2 * sq(z) +
              2 * std::pow(c1, 3) * sq(c4) * std::pow(m1, 3) * sq(z) -
              p2 * std::pow(c1, 3) * sq(c4) * m1 * z +
              sq(c1) * sq(c4) * std::pow(m1, 3) * sq(m2) * z -
              2 * sq(c1) * sq(c4) * std::pow(m1, 3) * m2 * z + sq(c1) * sq(c4) * std::pow(m1, 3) * z +
              p2 * sq(c1) * sq(c4) * m1 * z -
              p2 * sq(c1) * std::pow(m1, 5) * sq(m2) * std::pow(z, 5) +
              2 * p2 * sq(c1) * std::pow(m1, 5) * m2 * std::pow(z, 5) -
              p2 * sq(c1) * std::pow(m1, 5) * std::pow(z, 5) -
              2 * p2 * c1 * std::pow(m1, 5) * sq(m2) * std::pow(z, 4) +
              4 * p2 * c1 * std::pow(m1, 5) * m2 * std::pow(z, 4) -
              2 * p2 * c1 * std::pow(m1, 5) * std::pow(z, 4) -
              p2 * std::pow(m1, 5) * sq(m2) * std::pow(z, 3) +
              2 * p2 * std::pow(m1, 5) * m2 * std::pow(z, 3) - p2 * std::pow(m1, 5) * std::pow(z, 3));
    const double e5 =
        m1 * sq(z + 1 + m1 * z - m1 * m2 * z) *
        (-std::pow(c1, 4) * sq(c3) * sq(c4) * sq(m1) + p1 * p2 * std::pow(c1, 4) * sq(c4) -
         2 * p1 * p2 * std::pow(c1, 3) * c4 * m1 * z + p2 * sq(c1) * sq(c3) * std::pow(m1, 4) * sq(z) +
         p1 * sq(c1) * sq(c4) * sq(m1) * sq(m2) * sq(z) -
         2 * p1 * sq(c1) * sq(c4) * sq(m1) * m2 * sq(z) + p1 * sq(c1) * sq(c4) * sq(m1) * sq(z) +
         2 * p1 * p2 * sq(c1) * c4 * m1 * z + p1 * p2 * sq(c1) * sq(m1) * sq(z) -
         2 * p1 * p2 * c1 * sq(m1) * sq(z) - p1 * p2 * std::pow(m1, 4) * sq(m2) * std::pow(z, 4) +
         2 * p1 * p2 * std::pow(m1, 4) * m2 * std::pow(z, 4) -
         p1 * p2 * std::pow(m1, 4) * std::pow(z, 4) + p1 * p2 * sq(m1) * sq(z));
    const double e6 = sq(c1) * sq(c4) * p1 * p2 * (c4 * sq(c1) - m1 * c1 * z + m1 * z) *
                      sq(m1 * z - m1 * m2 * z + 1);
    d.rational_norms = {
        {"-psi1(F2 E4+tau2 E6)/E5", -p1 * (F * e4 + tau * e6) / e5},
        {"psi1(F2 E4+tau2 E6)/E5", p1 * (F * e4 + tau * e6) / e5},
    };
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [label, value] : d.rational_norms) {
    if (!std::isfinite(value)) continue;
    const double rel = std::abs(value - norm_sq) / std::max(std::abs(norm_sq), 1e-300);
    if (rel < best) {
      best = rel;
      d.closest_rational = label;
    }
  }
  d.rational_discrepancy = best;
  d.discrepancy_flagged = !(best <= kRationalTol);
}

double norm_only(Family f, double lambda_bar, const ModelParams& params) {
  return bar_state(f, lambda_bar, params).norm_sq;
}

}  // namespace

const char* to_string(Family f) { return f == Family::U ? "U" : "T"; }

const char* to_string(KernelQuantity q) {
  switch (q) {
    case KernelQuantity::UBarAlpha:
      return "U_alpha";
    case KernelQuantity::TBarAlpha:
      return "T_alpha";
    case KernelQuantity::Risk:
      return "R";
    case KernelQuantity::Norm:
      return "A";
    case KernelQuantity::UAtLevel:
      return "U_level";
  }
  return "unknown";
}

double bar_value(Family family, double lambda_bar, const ModelParams& params) {
  require_overparam(family, params);
  return bar_state(family, lambda_bar, params).value;
}

LagrangianPoint lagrangian_point(Family family, double lambda_bar, const ModelParams& params) {
  require_overparam(family, params);
  const BarState s = bar_state(family, lambda_bar, params);
  if (!(s.norm_sq >= 0.0)) {
    throw Error(ErrorKind::OutsideAdmissibleRegion,
                "negative norm at lambda_bar = " + std::to_string(lambda_bar), s.norm_sq);
  }
  LagrangianPoint pt;
  pt.family = family;
  pt.lambda_bar = lambda_bar;
  pt.lambda = lambda_bar * params.mustar_sq();
  pt.value = s.value;
  pt.norm_sq = s.norm_sq;

  const double z = params.zeta();
  ChiDiagnostics& d = pt.chi;
  d.m1_bar = s.m1;
  d.m2_bar = s.m2;
  d.chi1 = s.chi1;
  d.chi2 = s.m1 - params.psi2 + s.m1 * z / s.chi1;
  d.chi3 = lambda_bar * params.psi1 + s.m2 - 1.0 + z * (s.m2 - 1.0) / s.chi1;
  d.chi4 = s.m1 + s.m1 * z / s.chi1;
  const auto [fd, fd_gap] = difference_check(family, lambda_bar, params);
  d.finite_difference = fd;
  d.richardson_gap = fd_gap;
  fill_rational(family, lambda_bar, params, s.norm_sq, d);
  return pt;
}

LagrangianPoint ubar_point(double lambda_bar, const ModelParams& params) {
  return lagrangian_point(Family::U, lambda_bar, params);
}

LagrangianPoint tbar_point(double lambda_bar, const ModelParams& params) {
  return lagrangian_point(Family::T, lambda_bar, params);
}

MinNormResult risk_min_norm(const ModelParams& params, RiskRatioConvention convention) {
  ZeroLimit zl;
  FixedPointSystem sys;
  try {
    const EquationFamily fam = EquationFamily::risk_nu(convention);
    sys = FixedPointSystem::from(fam, params);
    zl = solve_at_zero(fam, params);
  } catch (const Error& e) {
    throw Error(ErrorKind::OutsideAdmissibleRegion, std::string("risk fixed point failed: ") + e.what());
  }
  const double c = (zl.state.m1 * zl.state.m2).real();
  const double z2 = sys.coef.mu1_sq;  // square of the ratio entering the nu-equations
  const double z4 = z2 * z2, z6 = z4 * z2;
  const double p1 = params.psi1, p2 = params.psi2;
  const double c2 = c * c, c3 = c2 * c, c4 = c3 * c, c5 = c4 * c;
  const double e0 = -c5 * z6 + 3 * c4 * z4 + (p1 * p2 - p2 - p1 + 1) * c3 * z6 - 2 * c3 * z4 -
                    3 * c3 * z2 + (p1 + p2 - 3 * p1 * p2 + 1) * c2 * z4 + 2 * c2 * z2 + c2 +
                    3 * p1 * p2 * c * z2 - p1 * p2;
  const double e1 = p2 * c3 * z4 - p2 * c2 * z2 + p1 * p2 * c * z2 - p1 * p2;
  const double e2 = c5 * z6 - 3 * c4 * z4 + (p1 - 1) * c3 * z6 + 2 * c3 * z4 + 3 * c3 * z2 +
                    (-p1 - 1) * c2 * z4 - 2 * c2 * z2 - c2;
  if (std::abs(e0) < 1e-300) {
    throw Error(ErrorKind::OutsideAdmissibleRegion, "E0 vanishes");
  }
  MinNormResult out;
  out.chi = c;
  const double F = params.f1_sq, tau = params.tau_sq, total = F + tau;
  out.risk = F * e1 / e0 + tau * e2 / e0 + tau;
  if (total > 0.0) {
    const double wa = F / total, wb = tau / total;
    const double a1 =
        wa * (-c2 * (c * z4 - c * z2 + p2 * z2 + z2 - c * p2 * z4 + 1)) +
        wb * (c2 * (c * z2 - 1) * (c2 * z4 - 2 * c * z2 + z2 + 1));
    out.norm_sq = p1 * total * a1 / (params.mustar_sq() * e0);
  }
  return out;
}

AdmissibleRange admissible_range(Family family, const ModelParams& params) {
  require_overparam(family, params);
  // chi1 -> 1 as lambda_bar -> infinity, and the admissible region is the
  // interval connected to infinity.
  auto good = [&](double lb) {
    try {
      const BarState s = bar_state(family, lb, params);
      return s.chi1 > 0.0 && s.norm_sq >= 0.0;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::OutsideAdmissibleRegion) return false;
      throw;
    }
  };
  double hi = kScanStart;
  while (!good(hi)) {
    hi *= kScanGrowth;
    if (hi > kScanCeiling) {
      throw Error(ErrorKind::OutsideAdmissibleRegion,
                  "no admissible lambda_bar below " + std::to_string(kScanCeiling), hi);
    }
  }
  const double floor = kScanFloor / std::max(1.0, params.psi1);
  AdmissibleRange out;
  double lo = hi / kScanRatio;
  while (lo > floor && good(lo)) {
    hi = lo;
    lo /= kScanRatio;
  }
  if (lo <= floor) {
    out.last_good = hi;
    out.boundary = hi;
    return out;
  }
  for (int k = 0; k < 80 && hi / lo > 1.0 + 1e-13; ++k) {
    const double mid = std::sqrt(lo * hi);
    if (good(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.last_good = hi;
  out.first_bad = lo;
  out.boundary = hi * kBoundaryMargin;
  return out;
}

double admissible_lambda_bar(Family family, const ModelParams& params) {
  return admissible_range(family, params).boundary;
}

DualValue dual_value(Family family, double norm_level, const ModelParams& params) {
  require_overparam(family, params);
  if (!(norm_level > 0.0) || !std::isfinite(norm_level)) {
    throw Error(ErrorKind::NormLevelOutOfRange, "norm level must be positive", norm_level);
  }
  const double boundary = admissible_range(family, params).last_good;
  const double top = norm_only(family, boundary, params);
  if (norm_level > top) {
    throw Error(ErrorKind::NormLevelOutOfRange,
                std::string("norm level above the admissible range of ") + to_string(family),
                norm_level);
  }
  double lo = boundary, hi = boundary;
  bool bracketed = false;
  for (int k = 0; k < 60; ++k) {
    hi = lo * 4.0;
    if (norm_only(family, hi, params) < norm_level) {
      bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!bracketed) {
    throw Error(ErrorKind::NormLevelOutOfRange,
                std::string("norm level below the attainable range of ") + to_string(family),
                norm_level);
  }
  while (hi / lo - 1.0 > kLambdaTol) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    if (norm_only(family, mid, params) > norm_level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double lb = std::sqrt(lo * hi);
  const double ms = params.mustar_sq();
  DualValue out;
  out.lambda = lb * ms;
  out.bound = bar_state(family, lb, params).value + out.lambda * norm_level;

  const double slack = 1e-9 * std::max(1.0, std::abs(out.bound));
  for (double f : {1.0 - kEnvelopeStep, 1.0 + kEnvelopeStep}) {
    double other;
    try {
      other = bar_state(family, lb * f, params).value + out.lambda * f * norm_level;
    } catch (const Error&) {
      continue;
    }
    if (other < out.bound - slack) {
      throw Error(ErrorKind::EnvelopeViolation,
                  "dual objective decreases away from the root at lambda = " +
                      std::to_string(out.lambda),
                  out.bound - other);
    }
  }
  return out;
}

DualCurve dual_curve(Family family, const std::vector<double>& lambda_bars,
                     const ModelParams& params) {
  DualCurve curve;
  curve.family = family;
  curve.params = params;
  for (double lb : lambda_bars) {
    const LagrangianPoint pt = lagrangian_point(family, lb, params);
    curve.points.push_back({pt.norm_sq, pt.value + pt.lambda * pt.norm_sq, pt.lambda});
  }
  return curve;
}

double alpha_curve(Family family, double alpha, const ModelParams& params) {
  if (!(alpha > 1.0)) {
    throw Error(ErrorKind::InvalidParams, "alpha must exceed 1", alpha);
  }
  const MinNormResult mn = risk_min_norm(params);
  return dual_value(family, alpha * mn.norm_sq, params).bound;
}

double finite_quantity(KernelQuantity quantity, double psi1, double psi2, double alpha,
                       const ModelParams& base, double level) {
  const ModelParams p = base.with_psi(psi1, psi2);
  switch (quantity) {
    case KernelQuantity::UBarAlpha:
      return alpha_curve(Family::U, alpha, p);
    case KernelQuantity::TBarAlpha:
      return alpha_curve(Family::T, alpha, p);
    case KernelQuantity::Risk:
      return risk_min_norm(p).risk;
    case KernelQuantity::Norm:
      return risk_min_norm(p).norm_sq;
    case KernelQuantity::UAtLevel:
      return dual_value(Family::U, level, p).bound;
  }
  throw Error(ErrorKind::InvalidParams, "unknown kernel quantity");
}

KernelLimit kernel_limit(KernelQuantity quantity, double psi2, double alpha,
                         const ModelParams& base, const KernelLimitOptions& options) {
  const std::size_t n = options.multipliers.size();
  if (n < 2) {
    throw Error(ErrorKind::InvalidParams, "kernel limit needs at least two psi1 values");
  }
  const double power = options.scaling == Psi1Scaling::Fixed    ? 0.0
                      : options.scaling == Psi1Scaling::Linear ? 1.0
                                                               : 2.0;
  KernelLimit out;
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double psi1 = options.multipliers[i] * std::pow(std::max(1.0, psi2), power);
    const double v = finite_quantity(quantity, psi1, psi2, alpha, base, options.level);
    out.psi1.push_back(psi1);
    out.samples.push_back(v);
    design(i, 0) = 1.0;
    design(i, 1) = 1.0 / psi1;
    rhs(i) = v;
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  out.value = coef(0);
  out.slope = coef(1);
  const Eigen::VectorXd resid = design * coef - rhs;
  out.relative_residual = resid.cwiseAbs().maxCoeff() / std::max(std::abs(out.value), 1e-300);
  if (n > 2 && out.relative_residual > options.max_relative_residual) {
    throw Error(ErrorKind::ExtrapolationUnstable,
                std::string("1/psi1 fit residual too large for ") + to_string(quantity) +
                    " at psi2 = " + std::to_string(psi2),
                out.relative_residual);
  }
  return out;
}

}  // namespace rfu
