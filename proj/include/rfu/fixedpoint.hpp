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

#ifndef RFU_FIXEDPOINT_HPP_
#define RFU_FIXEDPOINT_HPP_

#include <array>
#include <complex>
#include <utility>
#include <vector>

#include "rfu/model.hpp"

namespace rfu {

using cd = std::complex<double>;

/// q = (s1, s2, t1, t2, p): coefficients of the block matrix
/// [s1 I + s2 Q, (Z + p Z1)^T; Z + p Z1, t1 I + t2 H].
struct QVector {
  double s1 = 0.0;
  double s2 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double p = 0.0;
};

/// q for the Lagrangian of U at unscaled lambda: (mustar^2 - lambda psi1,
/// mu1^2, psi2, 0, 0); q_tbar sets t1 = 0.
QVector q_ubar(double lambda, const ModelParams& params);
QVector q_tbar(double lambda, const ModelParams& params);

/// Everything besides q that enters the self-consistent equations.
struct SpectralCoefficients {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double mu1_sq = 0.0;
  double mustar_sq = 0.0;
};

enum class FamilyTag { GeneralQ, UBar, TBar, RiskNu };

/// How the ratio enters the nu-equations of the min-norm risk. `Unsquared`
/// uses mu1/mustar (its square is mu1^2/mustar^2); `Printed` uses
/// mu1^2/mustar^2 and squares it again. Unsquared reproduces simulation.
enum class RiskRatioConvention { Unsquared, Printed };

struct EquationFamily {
  FamilyTag tag = FamilyTag::GeneralQ;
  QVector q;                  // GeneralQ
  double lambda_bar = 0.0;    // UBar, TBar
  RiskRatioConvention risk_ratio = RiskRatioConvention::Unsquared;  // RiskNu

  static EquationFamily general(const QVector& q);
  static EquationFamily ubar(double lambda_bar);
  static EquationFamily tbar(double lambda_bar);
  static EquationFamily risk_nu(RiskRatioConvention c = RiskRatioConvention::Unsquared);

  /// Throws InvalidFamily: GeneralQ needs |s2 t2| <= mu1^2 (1+p)^2 / 2,
  /// UBar/TBar need lambda_bar > 0.
  void validate(const ModelParams& params) const;
};

/// The concrete pair of equations a family reduces to. UBar and TBar are
/// expressed in units where mustar^2 = 1 (mu1^2 -> zeta, lambda -> lambda_bar,
/// xi -> xi / mustar^2); RiskNu is q = 0 in the same units.
struct FixedPointSystem {
  QVector q;
  SpectralCoefficients coef;

  static FixedPointSystem from(const EquationFamily& family, const ModelParams& params);

  /// Right-hand sides (F1, F2). Throws SingularDenominator.
  std::pair<cd, cd> rhs(cd m1, cd m2, cd xi) const;

  /// Jacobian dF_i/dm_j, row-major {dF1/dm1, dF1/dm2, dF2/dm1, dF2/dm2}.
  std::array<cd, 4> rhs_jacobian(cd m1, cd m2, cd xi) const;

  /// max_i |F_i - m_i| / max(1, |m_i|).
  double defect(cd m1, cd m2, cd xi) const;
};

struct FixedPointState {
  cd xi;
  cd m1;
  cd m2;
  double residual = 0.0;
  EquationFamily family;
};

struct SolverOptions {
  double damping = 0.5;
  int max_iters = 10000;
  int homotopy_nodes = 40;
  double u_start = 1e3;
  double u_end = 1e-7;
  double tol = 1e-12;
  bool newton_refine = true;
  /// Finish solve_at_zero with a Newton solve at xi = 0 when xi = 0 is off
  /// the spectrum (not applied to RiskNu, whose nu1 diverges there).
  bool polish_at_zero = true;
};

/// One damped step (m1, m2) <- (1-damping)(m1, m2) + damping (F1, F2).
FixedPointState iterate_once(const FixedPointState& state, const ModelParams& params,
                             double damping);

/// Solve at Im(xi) > 0, continuing from Im(xi) = u_start along a geometric
/// path. Throws NoConvergence with the final residual attached.
FixedPointState solve_at(cd xi, const EquationFamily& family, const ModelParams& params,
                         const SolverOptions& options = {});

struct ZeroLimit {
  FixedPointState state;               // reported xi -> 0+ limit
  std::vector<FixedPointState> tail;   // last homotopy nodes, smallest u last
  bool polished = false;               // state solved exactly at xi = 0
  bool zero_in_spectrum = false;       // Im(m) did not vanish as u -> 0, or
                                       // the polish found no real solution
};

/// Continue along xi = iu, u from u_start down to u_end, then keep halving u
/// until |m(u) - m(u/2)| <= 1e-6 (relative). Throws NoConvergence, or
/// BranchInstability if that never happens.
ZeroLimit solve_at_zero(const EquationFamily& family, const ModelParams& params,
                        const SolverOptions& options = {});

/// Xi(xi, z1, z2; q; psi) with principal logarithms. Throws BranchCutHit if a
/// logarithm argument has magnitude below 1e-14.
cd evaluate_Xi(cd xi, cd z1, cd z2, const QVector& q, const SpectralCoefficients& coef);

/// (dXi/dz1, dXi/dz2); zero exactly at a fixed point of the same system.
std::pair<cd, cd> grad_Xi(cd xi, cd z1, cd z2, const QVector& q,
                          const SpectralCoefficients& coef);

/// g = Xi at the state's fixed point, in the state's system units.
cd g_value(const FixedPointState& state, const ModelParams& params);

}  // namespace rfu

#endif  // RFU_FIXEDPOINT_HPP_
