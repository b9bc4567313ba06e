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
#include <vector>

#include <gtest/gtest.h>

#include "rfu/asymptotics.hpp"
#include "rfu/errors.hpp"
#include "rfu/simulator.hpp"

namespace rfu {
namespace {

ModelParams relu_fig(double f1_sq = 1.0, double tau_sq = 0.0) {
  return ModelParams::create(2.5, 1.5, f1_sq, tau_sq, activation_preset("relu"));
}

ModelParams shifted(double psi1, double psi2, double tau_sq) {
  return ModelParams::create(psi1, psi2, 1.0, tau_sq, activation_preset("shifted_relu"));
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no rfu::Error thrown";
  return ErrorKind::ConfigInvalid;
}

TEST(BarValues, ZeroSignalAndNoiseGiveZero) {
  const ModelParams p = relu_fig(0.0, 0.0);
  for (double lb : {6.0, 10.0, 40.0}) {
    EXPECT_EQ(bar_value(Family::U, lb, p), 0.0);
    EXPECT_EQ(bar_value(Family::T, lb, p), 0.0);
  }
}

TEST(BarValues, LargePenaltyClosesTheGap) {
  // lambda -> infinity forces a -> 0, where R = Rhat; the Lagrangian value
  // of a quadratic objective then decays like 1 / lambda.
  const ModelParams p = shifted(2.5, 1.5, 0.3);
  const double a = bar_value(Family::U, 1e6, p), b = bar_value(Family::U, 1e7, p);
  EXPECT_GT(b, 0.0);
  EXPECT_LT(b, 1e-5);
  EXPECT_NEAR(a / b, 10.0, 0.05);
}

TEST(BarValues, ImplicitNormMatchesRichardsonDifference) {
  const ModelParams p = relu_fig();
  for (Family f : {Family::U, Family::T}) {
    for (double lambda : {0.5, 1.0, 2.0}) {
      const LagrangianPoint pt = lagrangian_point(f, lambda / p.mustar_sq(), p);
      EXPECT_NEAR(pt.chi.finite_difference / pt.norm_sq, 1.0, 1e-6) << to_string(f) << lambda;
      EXPECT_LT(pt.chi.richardson_gap, 1e-6);
    }
  }
}

TEST(BarValues, TbarNormNeverBelowMinNorm) {
  const ModelParams p = relu_fig();
  const double a_min = risk_min_norm(p).norm_sq;
  for (double lambda = 0.21; lambda <= 2.0; lambda += 0.1) {
    EXPECT_GE(lagrangian_point(Family::T, lambda / p.mustar_sq(), p).norm_sq, a_min) << lambda;
  }
}

TEST(BarValues, TbarNeedsOverparameterization) {
  const ModelParams p = ModelParams::create(1.0, 1.5, 1.0, 0.0, activation_preset("relu"));
  EXPECT_EQ(kind_of([&] { tbar_point(1.0, p); }), ErrorKind::RequiresOverparam);
}

TEST(MinNorm, ZeroTargetGivesZeroRiskAndNorm) {
  const MinNormResult r = risk_min_norm(relu_fig(0.0, 0.0));
  EXPECT_EQ(r.risk, 0.0);
  EXPECT_EQ(r.norm_sq, 0.0);
}

TEST(MinNorm, AgreesWithSimulatedInterpolator) {
  const ModelParams p = relu_fig();
  SimSetup setup;
  setup.replicates = 20;
  const ReplicateRun run = replicate_run(setup, p, {}, {});
  const auto& s = run.stats.front();
  ASSERT_EQ(s.family, SimFamily::MinNorm);
  const MinNormResult th = risk_min_norm(p);
  EXPECT_LE(std::abs(s.norm_sq.mean - th.norm_sq), 3.0 * s.norm_sq.stderr_);
  EXPECT_LE(std::abs(s.value.mean - th.risk), 3.0 * s.value.stderr_);
}

TEST(Admissible, RangeEndsWhereTheFixedPointLeavesTheRealAxis) {
  const ModelParams p = relu_fig();
  for (Family f : {Family::U, Family::T}) {
    const AdmissibleRange r = admissible_range(f, p);
    ASSERT_GT(r.first_bad, 0.0);
    EXPECT_LT(r.first_bad, r.last_good);
    EXPECT_NO_THROW(lagrangian_point(f, r.last_good * 1.001, p));
    EXPECT_EQ(kind_of([&] { lagrangian_point(f, r.first_bad / 1.01, p); }),
              ErrorKind::OutsideAdmissibleRegion);
  }
}

TEST(Dual, EnvelopeAndFirstOrderCondition) {
  const ModelParams p = relu_fig();
  for (Family f : {Family::U, Family::T}) {
    const double lambda0 = 0.8;
    const LagrangianPoint pt0 = lagrangian_point(f, lambda0 / p.mustar_sq(), p);
    const DualValue dv = dual_value(f, pt0.norm_sq, p);
    EXPECT_NEAR(dv.bound, pt0.value + pt0.lambda * pt0.norm_sq, 1e-8);
    EXPECT_NEAR(dv.lambda, lambda0, 1e-6);
    for (double l = 0.43; l <= 3.0; l += 0.07) {
      const LagrangianPoint q = lagrangian_point(f, l / p.mustar_sq(), p);
      EXPECT_LE(dv.bound, q.value + q.lambda * pt0.norm_sq + 1e-9) << l;
    }
  }
}

TEST(Dual, OrderingAtOneAndAHalfTimesMinNorm) {
  for (double tau : {0.0, 0.1}) {
    const ModelParams p = shifted(2.5, 1.5, tau);
    const MinNormResult mn = risk_min_norm(p);
    const double u = dual_value(Family::U, 1.5 * mn.norm_sq, p).bound;
    const double t = dual_value(Family::T, 1.5 * mn.norm_sq, p).bound;
    EXPECT_GE(u, t);
    EXPECT_GE(t, mn.risk);
  }
}

TEST(Dual, NoisyUBoundExceedsNoiseAndGrowsWithSamples) {
  const ModelParams base = shifted(4.0, 1.0, 0.1);
  const double u1 = alpha_curve(Family::U, 1.5, base.with_psi(8.0, 1.0));
  const double u2 = alpha_curve(Family::U, 1.5, base.with_psi(8.0, 3.0));
  EXPECT_GT(u1, 0.1);
  EXPECT_GT(u2, u1);
}

TEST(Dual, TShrinksTowardRiskAsAlphaDecreases) {
  const ModelParams p = shifted(2.5, 1.5, 0.1);
  const double risk = risk_min_norm(p).risk;
  double prev = INFINITY;
  for (double alpha : {3.0, 2.0, 1.5, 1.2, 1.05, 1.01}) {
    const double t = alpha_curve(Family::T, alpha, p);
    EXPECT_LT(t, prev) << alpha;
    EXPECT_GE(t, risk) << alpha;
    prev = t;
  }
}

TEST(Dual, InvalidLevelsAreRejected) {
  const ModelParams p = relu_fig();
  EXPECT_EQ(kind_of([&] { dual_value(Family::U, -1.0, p); }), ErrorKind::NormLevelOutOfRange);
  EXPECT_EQ(kind_of([&] { dual_value(Family::T, 1e6, p); }), ErrorKind::NormLevelOutOfRange);
  EXPECT_EQ(kind_of([&] { alpha_curve(Family::U, 1.0, p); }), ErrorKind::InvalidParams);
}

TEST(Dual, CurveTracesLagrangianPoints) {
  const ModelParams p = relu_fig();
  const std::vector<double> lbs{8.0, 12.0, 20.0};
  const DualCurve c = dual_curve(Family::U, lbs, p);
  ASSERT_EQ(c.points.size(), 3u);
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    EXPECT_GT(c.points[i].norm_level, c.points[i + 1].norm_level);  // norm falls with lambda
  }
}

TEST(KernelLimit, TwoGridsAgree) {
  const ModelParams base = shifted(2.5, 1.5, 0.1);
  KernelLimitOptions lo, hi;
  lo.multipliers = {1e2, 1e3, 1e4};
  hi.multipliers = {1e3, 1e4, 1e5};
  for (KernelQuantity q : {KernelQuantity::Risk, KernelQuantity::Norm, KernelQuantity::TBarAlpha}) {
    const double a = kernel_limit(q, 100.0, 1.5, base, lo).value;
    const double b = kernel_limit(q, 100.0, 1.5, base, hi).value;
    EXPECT_NEAR(a / b, 1.0, 1e-3) << to_string(q);
  }
}

TEST(KernelLimit, ExtrapolationBeatsLargestSample) {
  const ModelParams base = shifted(2.5, 1.5, 0.0);
  const KernelLimit k = kernel_limit(KernelQuantity::Risk, 10.0, 1.5, base);
  const double far = finite_quantity(KernelQuantity::Risk, 1e9, 10.0, 1.5, base);
  EXPECT_LT(std::abs(k.value - far), std::abs(k.samples.back() - far));
  EXPECT_LT(k.relative_residual, 1e-3);
}

TEST(KernelLimit, NeedsTwoPsi1Values) {
  KernelLimitOptions o;
  o.multipliers = {1e3};
  EXPECT_EQ(kind_of([&] { kernel_limit(KernelQuantity::Norm, 10.0, 1.5, shifted(2, 1, 0), o); }),
            ErrorKind::InvalidParams);
}

}  // namespace
}  // namespace rfu
