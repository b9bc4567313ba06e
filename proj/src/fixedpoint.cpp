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

#include "rfu/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "rfu/errors.hpp"

namespace rfu {
namespace {

constexpr double kDenominatorFloor = 1e-14;
constexpr double kNewtonWindow = 1e-6;
constexpr double kHerglotzSlack = 1e-10;
constexpr double kCauchyTol = 1e-6;
constexpr double kSpectrumImag = 1e-4;
constexpr double kRealTol = 1e-9;
constexpr std::size_t kTailLength = 4;
constexpr int kMaxHalvings = 24;

double scale_of(cd m) { return std::max(1.0, std::abs(m)); }

cd principal_log(cd z) {
  if (std::abs(z) < kDenominatorFloor) {
    throw Error(ErrorKind::BranchCutHit, "logarithm argument vanishes", std::abs(z));
  }
  // approach the negative real axis from the upper half plane
  if (z.imag() == 0.0) z = cd(z.real(), 0.0);
  return std::log(z);
}

struct NodeResult {
  cd m1;
  cd m2;
  double residual;
};

// Newton iterations on m - F(m) = 0; returns false if the defect does not
// drop below tol.
bool newton_refine(const FixedPointSystem& sys, cd xi, cd& m1, cd& m2, double tol,
                   int max_steps = 40) {
  double res = sys.defect(m1, m2, xi);
  for (int step = 0; step < max_steps && res >= tol; ++step) {
    const auto [f1, f2] = sys.rhs(m1, m2, xi);
    const auto jac = sys.rhs_jacobian(m1, m2, xi);
    const cd a = 1.0 - jac[0], b = -jac[1], c = -jac[2], e = 1.0 - jac[3];
    const cd det = a * e - b * c;
    if (std::abs(det) < kDenominatorFloor) return false;
    const cd r1 = f1 - m1, r2 = f2 - m2;
    const cd n1 = m1 + (e * r1 - b * r2) / det;
    const cd n2 = m2 + (a * r2 - c * r1) / det;
    double next;
    try {
      next = sys.defect(n1, n2, xi);
    } catch (const Error&) {
      return false;
    }
    if (!std::isfinite(next)) return false;
    m1 = n1;
    m2 = n2;
    if (next >= res && next >= tol) {
      res = next;
      break;
    }
    res = next;
  }
  return res < tol;
}

NodeResult converge_node(const FixedPointSystem& sys, cd xi, cd m1, cd m2,
                         const SolverOptions& opt) {
  const double d = opt.damping;
  double res = sys.defect(m1, m2, xi);
  for (int it = 0; it < opt.max_iters && res >= opt.tol; ++it) {
    const auto [f1, f2] = sys.rhs(m1, m2, xi);
    res = std::max(std::abs(f1 - m1) / scale_of(m1), std::abs(f2 - m2) / scale_of(m2));
    m1 = (1.0 - d) * m1 + d * f1;
    m2 = (1.0 - d) * m2 + d * f2;
    if (opt.newton_refine && res < kNewtonWindow && res >= opt.tol) {
      cd t1 = m1, t2 = m2;
      if (newton_refine(sys, xi, t1, t2, opt.tol)) {
        m1 = t1;
        m2 = t2;
        break;
      }
    }
  }
  res = sys.defect(m1, m2, xi);
  if (res >= opt.tol && opt.newton_refine && res <= kNewtonWindow) {
    cd t1 = m1, t2 = m2;
    if (newton_refine(sys, xi, t1, t2, opt.tol)) {
      m1 = t1;
      m2 = t2;
      res = sys.defect(m1, m2, xi);
    }
  }
  if (!(res < opt.tol)) {
    throw Error(ErrorKind::NoConvergence,
                "fixed point did not converge at Im(xi) = " + std::to_string(xi.imag()) +
                    " (max_iters " + std::to_string(opt.max_iters) + ", residual " +
                    std::to_string(res) + ")",
                res);
  }
  if (xi.imag() > 0.0 && (m1.imag() < -kHerglotzSlack * scale_of(m1) ||
                          m2.imag() < -kHerglotzSlack * scale_of(m2))) {
    throw Error(ErrorKind::BranchInstability,
                "solution left the upper half plane at Im(xi) = " + std::to_string(xi.imag()));
  }
  return {m1, m2, res};
}

std::vector<double> geometric_path(double from, double to, int nodes) {
  if (from <= to) return {to};
  nodes = std::max(nodes, 2);
  std::vector<double> us(nodes);
  const double ratio = std::log(to / from) / (nodes - 1);
  for (int k = 0; k < nodes; ++k) us[k] = from * std::exp(ratio * k);
  us.back() = to;
  return us;
}

FixedPointState make_state(cd xi, const NodeResult& r, const EquationFamily& family) {
  FixedPointState s;
  s.xi = xi;
  s.m1 = r.m1;
  s.m2 = r.m2;
  s.residual = r.residual;
  s.family = family;
  return s;
}

}  // namespace

QVector q_ubar(double lambda, const ModelParams& params) {
  QVector q;
  q.s1 = params.mustar_sq() - lambda * params.psi1;
  q.s2 = params.mu1_sq();
  q.t1 = params.psi2;
  return q;
}

QVector q_tbar(double lambda, const ModelParams& params) {
  QVector q = q_ubar(lambda, params);
  q.t1 = 0.0;
  return q;
}

EquationFamily EquationFamily::general(const QVector& q) {
  EquationFamily f;
  f.tag = FamilyTag::GeneralQ;
  f.q = q;
  return f;
}

EquationFamily EquationFamily::ubar(double lambda_bar) {
  EquationFamily f;
  f.tag = FamilyTag::UBar;
  f.lambda_bar = lambda_bar;
  return f;
}

EquationFamily EquationFamily::tbar(double lambda_bar) {
  EquationFamily f;
  f.tag = FamilyTag::TBar;
  f.lambda_bar = lambda_bar;
  return f;
}

EquationFamily EquationFamily::risk_nu(RiskRatioConvention c) {
  EquationFamily f;
  f.tag = FamilyTag::RiskNu;
  f.risk_ratio = c;
  return f;
}

void EquationFamily::validate(const ModelParams& params) const {
  switch (tag) {
    case FamilyTag::GeneralQ: {
      const double bound = params.mu1_sq() * (1.0 + q.p) * (1.0 + q.p) / 2.0;
      if (std::abs(q.s2 * q.t2) > bound) {
        throw Error(ErrorKind::InvalidFamily, "q outside the admissible set: |s2 t2| > mu1^2 (1+p)^2 / 2");
      }
      break;
    }
    case FamilyTag::UBar:
    case FamilyTag::TBar:
      if (!(lambda_bar > 0.0) || !std::isfinite(lambda_bar)) {
        throw Error(ErrorKind::InvalidFamily, "lambda_bar must be positive", lambda_bar);
      }
      break;
    case FamilyTag::RiskNu:
      break;
  }
}

FixedPointSystem FixedPointSystem::from(const EquationFamily& family, const ModelParams& params) {
  family.validate(params);
  FixedPointSystem sys;
  sys.coef.psi1 = params.psi1;
  sys.coef.psi2 = params.psi2;
  const double zeta = params.zeta();
  switch (family.tag) {
    case FamilyTag::GeneralQ:
      sys.q = family.q;
      sys.coef.mu1_sq = params.mu1_sq();
      sys.coef.mustar_sq = params.mustar_sq();
      break;
    case FamilyTag::UBar:
    case FamilyTag::TBar:
      sys.q.s1 = 1.0 - family.lambda_bar * params.psi1;
      sys.q.s2 = zeta;
      sys.q.t1 = family.tag == FamilyTag::UBar ? params.psi2 : 0.0;
      sys.coef.mu1_sq = zeta;
      sys.coef.mustar_sq = 1.0;
      break;
    case FamilyTag::RiskNu:
      sys.coef.mu1_sq =
          family.risk_ratio == RiskRatioConvention::Unsquared ? zeta : zeta * zeta;
      sys.coef.mustar_sq = 1.0;
      break;
  }
  return sys;
}

std::pair<cd, cd> FixedPointSystem::rhs(cd m1, cd m2, cd xi) const {
  const double c = coef.mu1_sq * (1.0 + q.p) * (1.0 + q.p);
  const cd den = (1.0 + q.s2 * m1) * (1.0 + q.t2 * m2) - c * m1 * m2;
  if (std::abs(den) < kDenominatorFloor) {
    throw Error(ErrorKind::SingularDenominator, "coupling denominator vanishes", std::abs(den));
  }
  const cd d1 = -xi + q.s1 - coef.mustar_sq * m2 + ((1.0 + q.t2 * m2) * q.s2 - c * m2) / den;
  const cd d2 = -xi + q.t1 - coef.mustar_sq * m1 + ((1.0 + q.s2 * m1) * q.t2 - c * m1) / den;
  if (std::abs(d1) < kDenominatorFloor || std::abs(d2) < kDenominatorFloor) {
    throw Error(ErrorKind::SingularDenominator, "resolvent denominator vanishes",
                std::min(std::abs(d1), std::abs(d2)));
  }
  return {coef.psi1 / d1, coef.psi2 / d2};
}

std::array<cd, 4> FixedPointSystem::rhs_jacobian(cd m1, cd m2, cd xi) const {
  const double c = coef.mu1_sq * (1.0 + q.p) * (1.0 + q.p);
  const cd den = (1.0 + q.s2 * m1) * (1.0 + q.t2 * m2) - c * m1 * m2;
  const cd n1 = (1.0 + q.t2 * m2) * q.s2 - c * m2;
  const cd n2 = (1.0 + q.s2 * m1) * q.t2 - c * m1;
  const cd d1 = -xi + q.s1 - coef.mustar_sq * m2 + n1 / den;
  const cd d2 = -xi + q.t1 - coef.mustar_sq * m1 + n2 / den;
  // dden/dm1 = n1, dden/dm2 = n2
  const cd den2 = den * den;
  const double cross = q.s2 * q.t2 - c;  // dn1/dm2 = dn2/dm1
  const cd dd1_dm1 = -n1 * n1 / den2;
  const cd dd1_dm2 = -coef.mustar_sq + (cross * den - n1 * n2) / den2;
  const cd dd2_dm1 = -coef.mustar_sq + (cross * den - n2 * n1) / den2;
  const cd dd2_dm2 = -n2 * n2 / den2;
  const cd g1 = -coef.psi1 / (d1 * d1);
  const cd g2 = -coef.psi2 / (d2 * d2);
  return {g1 * dd1_dm1, g1 * dd1_dm2, g2 * dd2_dm1, g2 * dd2_dm2};
}

double FixedPointSystem::defect(cd m1, cd m2, cd xi) const {
  const auto [f1, f2] = rhs(m1, m2, xi);
  return std::max(std::abs(f1 - m1) / scale_of(m1), std::abs(f2 - m2) / scale_of(m2));
}

FixedPointState iterate_once(const FixedPointState& state, const ModelParams& params,
                             double damping) {
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "damping must lie in (0, 1]", damping);
  }
  const FixedPointSystem sys = FixedPointSystem::from(state.family, params);
  const auto [f1, f2] = sys.rhs(state.m1, state.m2, state.xi);
  FixedPointState next = state;
  next.m1 = (1.0 - damping) * state.m1 + damping * f1;
  next.m2 = (1.0 - damping) * state.m2 + damping * f2;
  next.residual = sys.defect(next.m1, next.m2, next.xi);
  return next;
}

FixedPointState solve_at(cd xi, const EquationFamily& family, const ModelParams& params,
                         const SolverOptions& options) {
  if (!(xi.imag() > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "solve_at needs Im(xi) > 0", xi.imag());
  }
  const FixedPointSystem sys = FixedPointSystem::from(family, params);
  cd m1 = 0.0, m2 = 0.0;
  NodeResult r{m1, m2, 0.0};
  for (double u : geometric_path(options.u_start, xi.imag(), options.homotopy_nodes)) {
    r = converge_node(sys, cd(xi.real(), u), r.m1, r.m2, options);
  }
  return make_state(xi, r, family);
}

ZeroLimit solve_at_zero(const EquationFamily& family, const ModelParams& params,
                        const SolverOptions& options) {
  const FixedPointSystem sys = FixedPointSystem::from(family, params);
  const bool risk = family.tag == FamilyTag::RiskNu;
  ZeroLimit out;
  std::deque<FixedPointState> tail;
  NodeResult r{0.0, 0.0, 0.0};
  for (double u : geometric_path(options.u_start, options.u_end, options.homotopy_nodes)) {
    r = converge_node(sys, cd(0.0, u), r.m1, r.m2, options);
    tail.push_back(make_state(cd(0.0, u), r, family));
    if (tail.size() > kTailLength) tail.pop_front();
  }
  // keep halving u until consecutive states agree
  auto jump_between = [&](const FixedPointState& a, const FixedPointState& b) {
    if (risk) {
      const cd ca = a.m1 * a.m2, cb = b.m1 * b.m2;
      return std::abs(cb - ca) / scale_of(cb);
    }
    return std::max(std::abs(b.m1 - a.m1) / scale_of(b.m1), std::abs(b.m2 - a.m2) / scale_of(b.m2));
  };
  double u = options.u_end;
  double jump = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kMaxHalvings; ++k) {
    u /= 2.0;
    r = converge_node(sys, cd(0.0, u), r.m1, r.m2, options);
    tail.push_back(make_state(cd(0.0, u), r, family));
    if (tail.size() > kTailLength) tail.pop_front();
    jump = jump_between(tail[tail.size() - 2], tail.back());
    if (jump <= kCauchyTol) break;
  }
  if (jump > kCauchyTol) {
    throw Error(ErrorKind::BranchInstability, "homotopy tail is not Cauchy", jump);
  }
  out.tail.assign(tail.begin(), tail.end());
  out.state = out.tail.back();

  if (risk) return out;
  const FixedPointState& last = out.state;
  out.zero_in_spectrum = std::abs(last.m1.imag()) > kSpectrumImag * scale_of(last.m1) ||
                         std::abs(last.m2.imag()) > kSpectrumImag * scale_of(last.m2);
  if (options.polish_at_zero && !out.zero_in_spectrum) {
    cd m1 = last.m1, m2 = last.m2;
    bool ok = false;
    try {
      ok = newton_refine(sys, cd(0.0, 0.0), m1, m2, options.tol);
    } catch (const Error&) {
      ok = false;
    }
    const bool close = std::abs(m1 - last.m1) < 1e-3 * scale_of(last.m1) &&
                       std::abs(m2 - last.m2) < 1e-3 * scale_of(last.m2);
    const bool real = std::abs(m1.imag()) <= kRealTol * scale_of(m1) &&
                      std::abs(m2.imag()) <= kRealTol * scale_of(m2);
    if (ok && close && real) {
      out.state.xi = cd(0.0, 0.0);
      out.state.m1 = cd(m1.real(), 0.0);
      out.state.m2 = cd(m2.real(), 0.0);
      out.state.residual = sys.defect(out.state.m1, out.state.m2, cd(0.0, 0.0));
      out.polished = true;
    } else {
      // no real solution at xi = 0 next to the path limit
      out.zero_in_spectrum = true;
    }
  }
  return out;
}

cd evaluate_Xi(cd xi, cd z1, cd z2, const QVector& q, const SpectralCoefficients& coef) {
  const double c = coef.mu1_sq * (1.0 + q.p) * (1.0 + q.p);
  const cd den = (q.s2 * z1 + 1.0) * (q.t2 * z2 + 1.0) - c * z1 * z2;
  return principal_log(den) - coef.mustar_sq * z1 * z2 + q.s1 * z1 + q.t1 * z2 -
         coef.psi1 * principal_log(z1 / coef.psi1) - coef.psi2 * principal_log(z2 / coef.psi2) -
         xi * (z1 + z2) - coef.psi1 - coef.psi2;
}

std::pair<cd, cd> grad_Xi(cd xi, cd z1, cd z2, const QVector& q,
                          const SpectralCoefficients& coef) {
  const double c = coef.mu1_sq * (1.0 + q.p) * (1.0 + q.p);
  const cd den = (q.s2 * z1 + 1.0) * (q.t2 * z2 + 1.0) - c * z1 * z2;
  const cd n1 = (1.0 + q.t2 * z2) * q.s2 - c * z2;
  const cd n2 = (1.0 + q.s2 * z1) * q.t2 - c * z1;
  const cd g1 = n1 / den - coef.mustar_sq * z2 + q.s1 - coef.psi1 / z1 - xi;
  const cd g2 = n2 / den - coef.mustar_sq * z1 + q.t1 - coef.psi2 / z2 - xi;
  return {g1, g2};
}

cd g_value(const FixedPointState& state, const ModelParams& params) {
  const FixedPointSystem sys = FixedPointSystem::from(state.family, params);
  return evaluate_Xi(state.xi, state.m1, state.m2, sys.q, sys.coef);
}

}  // namespace rfu
