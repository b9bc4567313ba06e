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

#ifndef RFU_SIMULATOR_HPP_
#define RFU_SIMULATOR_HPP_

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "rfu/fixedpoint.hpp"
#include "rfu/model.hpp"

namespace rfu {

/// One finite-size draw with its derived matrices. The activation is the
/// centered one from ModelParams.
struct SimInstance {
  int d = 0;
  int N = 0;
  int n = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd X;      // n x d, rows on the sphere of radius sqrt(d)
  Eigen::MatrixXd Theta;  // N x d, rows on the sphere of radius sqrt(d)
  Eigen::VectorXd beta;   // norm F1
  Eigen::VectorXd eps;    // variance tau^2
  Eigen::MatrixXd Z;      // n x N, s(X Theta^T / sqrt(d)) / sqrt(d)
  Eigen::MatrixXd Q;      // N x N, Theta Theta^T / d
  Eigen::MatrixXd H;      // n x n, X X^T / d
  Eigen::MatrixXd Uc;     // mu1^2 Q + mustar^2 I
  Eigen::VectorXd v;      // (mu1 / sqrt(d)) Theta beta
  Eigen::VectorXd y;      // X beta + eps
  double Ey2 = 0.0;       // F1^2 + tau^2
  double mu1 = 0.0;
  double mustar_sq = 0.0;

  double psi1() const { return static_cast<double>(N) / d; }
  double psi2() const { return static_cast<double>(n) / d; }
};

/// Engine for one instance; the stream depends only on `seed`.
std::mt19937_64 make_engine(std::uint64_t seed);

/// Throws InvalidParams for non-positive sizes or a profile without evaluator.
SimInstance sample_instance(int d, int N, int n, const ModelParams& params, std::uint64_t seed);

/// a = Z^T (Z Z^T)^{-1} y / sqrt(d). Throws RankDeficient.
Eigen::VectorXd min_norm_interpolator(const SimInstance& inst);

struct UMaximizer {
  Eigen::VectorXd a;
  double objective = 0.0;     // R - Rhat - psi1 lambda ||a||^2
  double gap = 0.0;           // R - Rhat
  double norm_sq = 0.0;       // psi1 ||a||^2
  double stationarity = 0.0;  // ||M a - v_bar|| / ||v_bar||
};

/// Maximizer of R - Rhat - psi1 lambda ||a||^2. Throws NotNegativeDefinite
/// if the Hessian is not below -1e-8 I.
UMaximizer maximizer_U(const SimInstance& inst, double lambda);

struct TMaximizer {
  Eigen::VectorXd a;
  Eigen::VectorXd mu;
  double objective = 0.0;    // R - psi1 lambda ||a||^2
  double risk = 0.0;         // R
  double norm_sq = 0.0;      // psi1 ||a||^2
  double feasibility = 0.0;  // ||Z a - y/sqrt(d)|| / ||y/sqrt(d)||
};

/// Maximizer of R - psi1 lambda ||a||^2 over interpolators, via the null
/// space of Z. Throws RequiresOverparam (N <= n), NotNegativeDefinite (the
/// Hessian restricted to null(Z) is not below -1e-8), SingularKKT.
TMaximizer maximizer_T(const SimInstance& inst, double lambda);

struct RiskPair {
  double pop = 0.0;  // R(a)
  double emp = 0.0;  // Rhat_n(a)
};

RiskPair risks(const SimInstance& inst, const Eigen::VectorXd& a);

/// (1/d) sum log(lambda_i(A(q)) - xi) over the block matrix
/// [s1 I + s2 Q, (Z + p Z1)^T; Z + p Z1, t1 I + t2 H], Z1 = mu1 X Theta^T / d.
/// Throws SpectrumHit if xi is within 1e-12 of an eigenvalue.
std::complex<double> empirical_log_det(const SimInstance& inst, const QVector& q,
                                       std::complex<double> xi);

enum class SimFamily { MinNorm, U, T };

const char* to_string(SimFamily f);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample std / sqrt(count)
};

MeanStderr mean_stderr(const std::vector<double>& xs);

/// One replicate's outcome for one (family, lambda) cell.
struct ReplicateRow {
  SimFamily family = SimFamily::MinNorm;
  double lambda = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  bool feasible = true;
  double norm_sq = 0.0;  // psi1 ||a||^2
  double value = 0.0;    // R - Rhat (U), R (T and min-norm)
  /// Largest relative defect of the cell's optimality condition:
  /// stationarity (U), primal feasibility (T), null-space component and
  /// Rhat (min-norm).
  double defect = 0.0;
  /// T only: ||a_T||^2 - ||a_min||^2 (must be >= 0).
  double norm_excess = 0.0;
};

struct ReplicateStats {
  SimFamily family = SimFamily::MinNorm;
  double lambda = 0.0;
  MeanStderr norm_sq;
  MeanStderr value;
  int count = 0;
  std::vector<std::uint64_t> skipped;  // seeds outside the admissible region
};

struct SimSetup {
  int d = 200;
  int N = 500;
  int n = 300;
  int replicates = 20;
  std::uint64_t base_seed = 1;
  int threads = 1;
};

struct ReplicateRun {
  std::vector<ReplicateRow> rows;      // ordered by replicate, then cell
  std::vector<ReplicateStats> stats;   // min-norm, U cells, T cells
};

/// Runs every cell on replicates with seeds base_seed + k. Instances where a
/// maximizer is not admissible are skipped and recorded. Throws
/// InvalidParams (replicates < 2), AllReplicatesInfeasible.
ReplicateRun replicate_run(const SimSetup& setup, const ModelParams& params,
                           const std::vector<double>& u_lambdas,
                           const std::vector<double>& t_lambdas);

}  // namespace rfu

#endif  // RFU_SIMULATOR_HPP_
