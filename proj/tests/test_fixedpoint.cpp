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

#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "rfu/errors.hpp"
#include "rfu/fixedpoint.hpp"

namespace rfu {
namespace {

ModelParams shifted(double psi1, double psi2, double f1_sq = 1.0, double tau_sq = 0.0) {
  return ModelParams::create(psi1, psi2, f1_sq, tau_sq, activation_preset("shifted_relu"));
}

// Profile with mustar^2 = 1 and a cross coefficient small enough to vanish
// at double precision in every comparison below.
ModelParams decoupled(double psi1, double psi2) {
  return ModelParams::create(psi1, psi2, 1.0, 0.0, coefficient_profile(std::sqrt(1e-11), 1.0));
}

// Root of a z^2 + b z + c = 0 with the larger imaginary part.
cd upper_root(cd a, cd b, cd c) {
  const cd disc = std::sqrt(b * b - 4.0 * a * c);
  const cd r1 = (-b + disc) / (2.0 * a), r2 = (-b - disc) / (2.0 * a);
  return r1.imag() > r2.imag() ? r1 : r2;
}

TEST(FixedPoint, OneStepAtLargeXiFollowsResolventAsymptote) {
  const ModelParams p = shifted(2.5, 1.5);
  const cd xi(0.0, 1e3);
  FixedPointState s0;
  s0.xi = xi;
  s0.family = EquationFamily::ubar(0.7);
  const FixedPointState s1 = iterate_once(s0, p, 1.0);
  EXPECT_LT(std::abs(s1.m1 - p.psi1 / -xi), 1e-5);
  EXPECT_LT(std::abs(s1.m2 - p.psi2 / -xi), 1e-5);
  EXPECT_NEAR(s1.m1.imag(), p.psi1 / 1e3, 1e-5);

  // One step of the map from the asymptote lands on the solution.
  const FixedPointState s2 = iterate_once(s1, p, 1.0);
  const FixedPointState full = solve_at(xi, s0.family, p);
  EXPECT_LT(std::abs(full.m1 - s2.m1), 1e-9);
  EXPECT_LT(std::abs(full.m2 - s2.m2), 1e-9);
}

TEST(FixedPoint, GeneralQWithoutCouplingMatchesQuadratic) {
  const ModelParams p = decoupled(2.0, 0.8);
  const QVector q{0.6, 0.0, 1.3, 0.0, 0.0};
  for (cd xi : {cd(0.0, 0.3), cd(0.5, 1.0), cd(-1.2, 0.05)}) {
    const FixedPointState s = solve_at(xi, EquationFamily::general(q), p);
    const cd a = q.s1 - xi, b = q.t1 - xi;
    // m1 = psi1 / (a - m2), m2 = psi2 / (b - m1)
    const cd m1 = upper_root(-a, a * b + p.psi1 - p.psi2, -p.psi1 * b);
    const cd m2 = p.psi2 / (b - m1);
    EXPECT_LT(std::abs(s.m1 - m1), 1e-8) << xi;
    EXPECT_LT(std::abs(s.m2 - m2), 1e-8) << xi;
  }
}

TEST(FixedPoint, RiskNuWithoutCouplingMatchesQuadratic) {
  const ModelParams p = decoupled(3.0, 1.2);
  for (cd xi : {cd(0.0, 0.5), cd(0.3, 0.2), cd(0.0, 2.0)}) {
    const FixedPointState s = solve_at(xi, EquationFamily::risk_nu(), p);
    // m2^2 + (xi + (psi2 - psi1) / xi) m2 + psi2 = 0, m1 = psi1 / (-xi - m2)
    const cd m2 = upper_root(1.0, xi + (p.psi2 - p.psi1) / xi, p.psi2);
    const cd m1 = p.psi1 / (-xi - m2);
    EXPECT_LT(std::abs(s.m1 - m1), 1e-8) << xi;
    EXPECT_LT(std::abs(s.m2 - m2), 1e-8) << xi;
  }
}

TEST(FixedPoint, RiskNuProductAtZeroMatchesQuadraticLimit) {
  // The upper roots give m1 m2 -> -min(psi1, psi2) as xi -> 0.
  for (auto [psi1, psi2] : {std::pair{3.0, 1.2}, std::pair{0.7, 1.9}}) {
    const ZeroLimit z = solve_at_zero(EquationFamily::risk_nu(), decoupled(psi1, psi2));
    EXPECT_NEAR((z.state.m1 * z.state.m2).real(), -std::min(psi1, psi2), 1e-5);
  }
}

TEST(FixedPoint, ConvergedStateIsCertifiedByResidual) {
  const ModelParams p = shifted(2.5, 1.5);
  for (double lb : {6.0, 10.0, 40.0}) {
    const auto fam = EquationFamily::ubar(lb);
    const ZeroLimit z = solve_at_zero(fam, p);
    ASSERT_FALSE(z.zero_in_spectrum) << lb;
    const auto sys = FixedPointSystem::from(fam, p);
    EXPECT_LT(sys.defect(z.state.m1, z.state.m2, z.state.xi), 1e-12) << lb;
    EXPECT_LT(z.state.residual, 1e-12) << lb;
  }
}

TEST(FixedPoint, StationarityOfXiAtSolution) {
  const ModelParams p = shifted(1.7, 2.4, 1.0, 0.2);
  const EquationFamily fams[] = {EquationFamily::ubar(0.8), EquationFamily::tbar(2.0),
                                 EquationFamily::risk_nu(),
                                 EquationFamily::general(q_ubar(0.4, p))};
  for (const auto& fam : fams) {
    const cd xi(0.2, 0.4);
    const FixedPointState s = solve_at(xi, fam, p);
    const auto sys = FixedPointSystem::from(fam, p);
    const auto [g1, g2] = grad_Xi(xi, s.m1, s.m2, sys.q, sys.coef);
    EXPECT_LT(std::abs(g1), 1e-8);
    EXPECT_LT(std::abs(g2), 1e-8);

    // Central differences of Xi itself vanish too.
    const double h = 1e-5;
    const cd d1 = (evaluate_Xi(xi, s.m1 + h, s.m2, sys.q, sys.coef) -
                   evaluate_Xi(xi, s.m1 - h, s.m2, sys.q, sys.coef)) / (2.0 * h);
    const cd d2 = (evaluate_Xi(xi, s.m1, s.m2 + h, sys.q, sys.coef) -
                   evaluate_Xi(xi, s.m1, s.m2 - h, sys.q, sys.coef)) / (2.0 * h);
    EXPECT_LT(std::abs(d1), 1e-6);
    EXPECT_LT(std::abs(d2), 1e-6);
  }
}

TEST(FixedPoint, StepHalvingLeavesSolutionUnchanged) {
  const ModelParams p = shifted(2.5, 1.5);
  SolverOptions coarse, fine;
  fine.homotopy_nodes = 2 * coarse.homotopy_nodes;
  for (const auto& fam : {EquationFamily::ubar(0.5), EquationFamily::tbar(0.5)}) {
    const cd xi(0.0, 1e-3);
    const auto a = solve_at(xi, fam, p, coarse), b = solve_at(xi, fam, p, fine);
    EXPECT_LT(std::abs(a.m1 - b.m1), 1e-8);
    EXPECT_LT(std::abs(a.m2 - b.m2), 1e-8);
  }
}

TEST(FixedPoint, SolutionIgnoresSignalAndNoise) {
  const auto fam = EquationFamily::ubar(10.0);
  const ZeroLimit a = solve_at_zero(fam, shifted(2.5, 1.5, 1.0, 0.0));
  const ZeroLimit b = solve_at_zero(fam, shifted(2.5, 1.5, 0.0, 0.7));
  EXPECT_EQ(a.state.m1, b.state.m1);
  EXPECT_EQ(a.state.m2, b.state.m2);
}

TEST(FixedPoint, HerglotzPropertyInUpperHalfPlane) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const ModelParams p = shifted(0.5 + 4.0 * u(rng), 0.5 + 4.0 * u(rng));
    const cd xi(3.0 * u(rng) - 1.5, 0.01 + u(rng));
    const FixedPointState s = solve_at(xi, EquationFamily::general(q_ubar(u(rng), p)), p);
    EXPECT_GT(s.m1.imag(), 0.0);
    EXPECT_GT(s.m2.imag(), 0.0);
  }
}

TEST(Xi, HandValueAtZeroQ) {
  const ModelParams p = shifted(2.5, 1.5);
  const auto sys = FixedPointSystem::from(EquationFamily::general(QVector{}), p);
  // Every log(z_i / psi_i) vanishes; only the coupling log survives.
  const double mu1_sq = 0.25, mustar_sq = 0.25 - 1.0 / (2.0 * std::acos(-1.0));
  const double want = std::log(1.0 - mu1_sq * 2.5 * 1.5) - mustar_sq * 2.5 * 1.5 - 2.5 - 1.5;
  const cd got = evaluate_Xi(0.0, 2.5, 1.5, sys.q, sys.coef);
  EXPECT_NEAR(got.real(), want, 1e-9);
  EXPECT_NEAR(got.imag(), 0.0, 1e-15);
}

TEST(Xi, ZeroLogArgumentIsBranchCutHit) {
  const ModelParams p = shifted(2.5, 1.5);
  const auto sys = FixedPointSystem::from(EquationFamily::general(QVector{}), p);
  try {
    evaluate_Xi(0.0, 0.0, 1.0, sys.q, sys.coef);
    FAIL() << "expected BranchCutHit";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BranchCutHit);
  }
}

TEST(Xi, GValueIsXiAtTheFixedPoint) {
  const ModelParams p = shifted(2.5, 1.5);
  const auto fam = EquationFamily::general(q_ubar(0.6, p));
  const FixedPointState s = solve_at(cd(0.0, 0.5), fam, p);
  const auto sys = FixedPointSystem::from(fam, p);
  EXPECT_EQ(g_value(s, p), evaluate_Xi(s.xi, s.m1, s.m2, sys.q, sys.coef));
}

TEST(Xi, ZeroLimitIsTheStationaryPointOfXiAtZero) {
  const ModelParams p = shifted(2.5, 1.5);
  const auto fam = EquationFamily::ubar(10.0);
  const ZeroLimit z = solve_at_zero(fam, p);
  ASSERT_TRUE(z.polished);
  const auto sys = FixedPointSystem::from(fam, p);
  // Independent Newton search for a stationary point of Xi(0, ., .), started
  // 5% away, with a finite-difference Hessian.
  cd z1 = 1.05 * z.state.m1, z2 = 0.95 * z.state.m2;
  for (int it = 0; it < 50; ++it) {
    const auto [g1, g2] = grad_Xi(0.0, z1, z2, sys.q, sys.coef);
    const double h = 1e-7;
    const auto [a1, a2] = grad_Xi(0.0, z1 + h, z2, sys.q, sys.coef);
    const auto [b1, b2] = grad_Xi(0.0, z1, z2 + h, sys.q, sys.coef);
    const cd h11 = (a1 - g1) / h, h21 = (a2 - g2) / h, h12 = (b1 - g1) / h, h22 = (b2 - g2) / h;
    const cd det = h11 * h22 - h12 * h21;
    z1 -= (h22 * g1 - h12 * g2) / det;
    z2 -= (-h21 * g1 + h11 * g2) / det;
  }
  EXPECT_LT(std::abs(z1 - z.state.m1), 1e-8);
  EXPECT_LT(std::abs(z2 - z.state.m2), 1e-8);
  EXPECT_NEAR(std::abs(evaluate_Xi(0.0, z1, z2, sys.q, sys.coef) -
                       evaluate_Xi(0.0, z.state.m1, z.state.m2, sys.q, sys.coef)),
              0.0, 1e-10);
}

TEST(Family, InvalidParametersAreRejected) {
  const ModelParams p = shifted(2.5, 1.5);
  auto kind = [&](const EquationFamily& f) {
    try {
      f.validate(p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::ConfigInvalid;
  };
  EXPECT_EQ(kind(EquationFamily::ubar(0.0)), ErrorKind::InvalidFamily);
  EXPECT_EQ(kind(EquationFamily::tbar(-1.0)), ErrorKind::InvalidFamily);
  EXPECT_EQ(kind(EquationFamily::general(QVector{0.0, 1.0, 0.0, 1.0, 0.0})),
            ErrorKind::InvalidFamily);
}

TEST(Family, QVectorsForTheLagrangians) {
  const ModelParams p = shifted(2.5, 1.5);
  const QVector u = q_ubar(0.3, p), t = q_tbar(0.3, p);
  EXPECT_DOUBLE_EQ(u.s1, p.mustar_sq() - 0.3 * 2.5);
  EXPECT_DOUBLE_EQ(u.s2, p.mu1_sq());
  EXPECT_DOUBLE_EQ(u.t1, 1.5);
  EXPECT_EQ(t.t1, 0.0);
  EXPECT_EQ(u.t2, 0.0);
  EXPECT_EQ(u.p, 0.0);
}

}  // namespace
}  // namespace rfu
