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

#include "rfu/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "rfu/errors.hpp"

namespace rfu {
namespace {

constexpr double kDefiniteMargin = 1e-8;
constexpr double kRankTol = 1e-10;
constexpr double kSpectrumTol = 1e-12;

void fill_sphere_rows(Eigen::MatrixXd& m, double radius, std::mt19937_64& eng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gauss(eng);
      norm = m.row(i).norm();
    }
    m.row(i) *= radius / norm;
  }
}

// Solves G x = b for the symmetric positive definite Gram matrix via its
// eigendecomposition.
Eigen::VectorXd gram_solve(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                           const Eigen::VectorXd& b) {
  const Eigen::MatrixXd& vecs = es.eigenvectors();
  return vecs * (vecs.transpose() * b).cwiseQuotient(es.eigenvalues());
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_of(const SimInstance& inst) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inst.Z * inst.Z.transpose());
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || std::sqrt(lo / hi) < kRankTol) {
    throw Error(ErrorKind::RankDeficient,
                "Z is numerically rank deficient (seed " + std::to_string(inst.seed) + ")",
                lo > 0.0 ? std::sqrt(lo / hi) : 0.0);
  }
  return es;
}

}  // namespace

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), 0x72667531u};
  return std::mt19937_64(seq);
}

SimInstance sample_instance(int d, int N, int n, const ModelParams& params, std::uint64_t seed) {
  if (d <= 0 || N <= 0 || n <= 0) {
    throw Error(ErrorKind::InvalidParams, "instance sizes must be positive");
  }
  if (!params.profile.evaluator) {
    throw Error(ErrorKind::InvalidParams, "activation '" + params.profile.name +
                                              "' has no evaluator to simulate with");
  }
  SimInstance inst;
  inst.d = d;
  inst.N = N;
  inst.n = n;
  inst.seed = seed;
  auto eng = make_engine(seed);
  const double root_d = std::sqrt(static_cast<double>(d));

  inst.X.resize(n, d);
  inst.Theta.resize(N, d);
  fill_sphere_rows(inst.X, root_d, eng);
  fill_sphere_rows(inst.Theta, root_d, eng);
  Eigen::MatrixXd b(1, d);
  fill_sphere_rows(b, std::sqrt(params.f1_sq), eng);
  inst.beta = b.row(0).transpose();
  std::normal_distribution<double> gauss(0.0, 1.0);
  inst.eps.resize(n);
  const double tau = std::sqrt(params.tau_sq);
  for (int i = 0; i < n; ++i) inst.eps(i) = tau * gauss(eng);

  const auto& sigma = params.profile.evaluator;
  inst.Z = (inst.X * inst.Theta.transpose() / root_d).unaryExpr([&](double x) { return sigma(x); }) /
           root_d;
  inst.Q = inst.Theta * inst.Theta.transpose() / d;
  inst.H = inst.X * inst.X.transpose() / d;
  inst.mu1 = params.profile.mu1;
  inst.mustar_sq = params.mustar_sq();
  inst.Uc = inst.mu1 * inst.mu1 * inst.Q;
  inst.Uc.diagonal().array() += inst.mustar_sq;
  inst.v = (inst.mu1 / root_d) * (inst.Theta * inst.beta);
  inst.y = inst.X * inst.beta + inst.eps;
  inst.Ey2 = params.f1_sq + params.tau_sq;
  return inst;
}

Eigen::VectorXd min_norm_interpolator(const SimInstance& inst) {
  const auto es = gram_of(inst);
  const Eigen::VectorXd b = inst.y / std::sqrt(static_cast<double>(inst.d));
  Eigen::VectorXd a = inst.Z.transpose() * gram_solve(es, b);
  const Eigen::VectorXd r = b - inst.Z * a;
  a += inst.Z.transpose() * gram_solve(es, r);
  return a;
}

RiskPair risks(const SimInstance& inst, const Eigen::VectorXd& a) {
  RiskPair out;
  out.pop = a.dot(inst.Uc * a) - 2.0 * a.dot(inst.v) + inst.Ey2;
  const Eigen::VectorXd resid = inst.y - std::sqrt(static_cast<double>(inst.d)) * (inst.Z * a);
  out.emp = resid.squaredNorm() / inst.n;
  return out;
}

UMaximizer maximizer_U(const SimInstance& inst, double lambda) {
  const double psi1 = inst.psi1(), psi2 = inst.psi2();
  const double root_d = std::sqrt(static_cast<double>(inst.d));
  Eigen::MatrixXd m = inst.Uc - inst.Z.transpose() * inst.Z / psi2;
  m.diagonal().array() -= psi1 * lambda;
  const Eigen::VectorXd vbar = inst.v - inst.Z.transpose() * inst.y / (root_d * psi2);

  Eigen::MatrixXd neg = -m;
  neg.diagonal().array() -= kDefiniteMargin;
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotNegativeDefinite,
                "U Hessian not negative definite at lambda = " + std::to_string(lambda) +
                    " (seed " + std::to_string(inst.seed) + ")",
                lambda);
  }
  // m = -(neg + margin I); solve with the factor of -m
  Eigen::MatrixXd negm = -m;
  Eigen::LLT<Eigen::MatrixXd> fact(negm);
  Eigen::VectorXd a = -fact.solve(vbar);
  a += -fact.solve(vbar - m * a);

  UMaximizer out;
  out.a = a;
  const RiskPair r = risks(inst, a);
  out.gap = r.pop - r.emp;
  out.objective = out.gap - psi1 * lambda * a.squaredNorm();
  out.norm_sq = psi1 * a.squaredNorm();
  out.stationarity = (m * a - vbar).norm() / std::max(vbar.norm(), 1e-300);
  return out;
}

TMaximizer maximizer_T(const SimInstance& inst, double lambda) {
  if (inst.N <= inst.n) {
    throw Error(ErrorKind::RequiresOverparam, "T maximizer needs N > n", inst.N);
  }
  const int N = inst.N, n = inst.n;
  const double psi1 = inst.psi1();
  const double root_d = std::sqrt(static_cast<double>(inst.d));
  const Eigen::VectorXd b = inst.y / root_d;

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(inst.Z.transpose());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
  const Eigen::VectorXd rdiag = r.diagonal().cwiseAbs();
  if (rdiag.minCoeff() < kRankTol * rdiag.maxCoeff()) {
    throw Error(ErrorKind::SingularKKT,
                "constraint block is rank deficient (seed " + std::to_string(inst.seed) + ")");
  }
  const auto q1 = q.leftCols(n);
  const auto q2 = q.rightCols(N - n);

  Eigen::MatrixXd m = inst.Uc;
  m.diagonal().array() -= psi1 * lambda;
  // Z = R^T Q1^T, so Z a = b fixes Q1^T a = R^{-T} b
  const Eigen::VectorXd c = r.transpose().triangularView<Eigen::Lower>().solve(b);
  const Eigen::VectorXd a_part = q1 * c;
  Eigen::MatrixXd k = -(q2.transpose() * m * q2);
  Eigen::MatrixXd shifted = k;
  shifted.diagonal().array() -= kDefiniteMargin;
  if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() != Eigen::Success) {
    throw Error(ErrorKind::NotNegativeDefinite,
                "T Hessian not negative definite on null(Z) at lambda = " +
                    std::to_string(lambda) + " (seed " + std::to_string(inst.seed) + ")",
                lambda);
  }
  Eigen::LLT<Eigen::MatrixXd> fact(k);
  const Eigen::VectorXd rhs = q2.transpose() * (inst.v - m * a_part);
  Eigen::VectorXd w = -fact.solve(rhs);
  w += -fact.solve(rhs - (-k) * w);

  TMaximizer out;
  out.a = a_part + q2 * w;
  const Eigen::VectorXd top = q1.transpose() * (inst.v - m * out.a);
  out.mu = r.triangularView<Eigen::Upper>().solve(top);
  const Eigen::VectorXd kkt_res = m * out.a + inst.Z.transpose() * out.mu - inst.v;
  if (!(kkt_res.norm() <= 1e-6 * std::max(1.0, inst.v.norm()))) {
    throw Error(ErrorKind::SingularKKT,
                "KKT solve inaccurate at lambda = " + std::to_string(lambda), kkt_res.norm());
  }
  out.risk = risks(inst, out.a).pop;
  out.objective = out.risk - psi1 * lambda * out.a.squaredNorm();
  out.norm_sq = psi1 * out.a.squaredNorm();
  out.feasibility = (inst.Z * out.a - b).norm() / std::max(b.norm(), 1e-300);
  return out;
}

std::complex<double> empirical_log_det(const SimInstance& inst, const QVector& q,
                                       std::complex<double> xi) {
  const int N = inst.N, n = inst.n;
  const Eigen::MatrixXd z1 = inst.mu1 * inst.X * inst.Theta.transpose() / inst.d;
  Eigen::MatrixXd a(N + n, N + n);
  a.topLeftCorner(N, N) = q.s2 * inst.Q;
  a.topLeftCorner(N, N).diagonal().array() += q.s1;
  const Eigen::MatrixXd off = inst.Z + q.p * z1;
  a.bottomLeftCorner(n, N) = off;
  a.topRightCorner(N, n) = off.transpose();
  a.bottomRightCorner(n, n) = q.t2 * inst.H;
  a.bottomRightCorner(n, n).diagonal().array() += q.t1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::complex<double> total = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const std::complex<double> shifted = ev(i) - xi;
    if (std::abs(shifted) < kSpectrumTol * scale) {
      throw Error(ErrorKind::SpectrumHit, "xi coincides with an eigenvalue", ev(i));
    }
    total += std::log(shifted);
  }
  return total / static_cast<double>(inst.d);
}

const char* to_string(SimFamily f) {
  switch (f) {
    case SimFamily::MinNorm:
      return "minnorm";
    case SimFamily::U:
      return "U";
    case SimFamily::T:
      return "T";
  }
  return "unknown";
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / xs.size();
  if (xs.size() < 2) {
    out.stderr_ = 0.0;
    return out;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stderr_ = std::sqrt(ss / (xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

namespace {

Error with_lambda(const Error& e, double lambda) {
  return Error(e.kind(), "lambda = " + std::to_string(lambda) + ": " + e.what(), e.value());
}

std::vector<ReplicateRow> run_replicate(const SimSetup& setup, const ModelParams& params,
                                        const std::vector<double>& u_lambdas,
                                        const std::vector<double>& t_lambdas, int k) {
  const std::uint64_t seed = setup.base_seed + static_cast<std::uint64_t>(k);
  const SimInstance inst = sample_instance(setup.d, setup.N, setup.n, params, seed);
  std::vector<ReplicateRow> rows;
  const double psi1 = inst.psi1();

  const auto es = gram_of(inst);
  const Eigen::VectorXd a_min = min_norm_interpolator(inst);
  {
    ReplicateRow row;
    row.family = SimFamily::MinNorm;
    row.replicate = k;
    row.seed = seed;
    row.norm_sq = psi1 * a_min.squaredNorm();
    const RiskPair r = risks(inst, a_min);
    row.value = r.pop;
    const Eigen::VectorXd row_part = inst.Z.transpose() * gram_solve(es, inst.Z * a_min);
    const double null_part = (a_min - row_part).norm() / std::max(a_min.norm(), 1e-300);
    row.defect = std::max(null_part, r.emp);
    rows.push_back(row);
  }
  for (double lambda : u_lambdas) {
    ReplicateRow row;
    row.family = SimFamily::U;
    row.lambda = lambda;
    row.replicate = k;
    row.seed = seed;
    try {
      const UMaximizer u = maximizer_U(inst, lambda);
      row.norm_sq = u.norm_sq;
      row.value = u.gap;
      row.defect = u.stationarity;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotNegativeDefinite) throw with_lambda(e, lambda);
      row.feasible = false;
    }
    rows.push_back(row);
  }
  if (inst.N > inst.n) {
    for (double lambda : t_lambdas) {
      ReplicateRow row;
      row.family = SimFamily::T;
      row.lambda = lambda;
      row.replicate = k;
      row.seed = seed;
      try {
        const TMaximizer t = maximizer_T(inst, lambda);
        row.norm_sq = t.norm_sq;
        row.value = t.risk;
        row.defect = t.feasibility;
        row.norm_excess = t.a.squaredNorm() - a_min.squaredNorm();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotNegativeDefinite && e.kind() != ErrorKind::SingularKKT) {
          throw with_lambda(e, lambda);
        }
        row.feasible = false;
      }
      rows.push_back(row);
    }
  } else if (!t_lambdas.empty()) {
    throw Error(ErrorKind::RequiresOverparam, "T cells need N > n", inst.N);
  }
  return rows;
}

}  // namespace

ReplicateRun replicate_run(const SimSetup& setup, const ModelParams& params,
                           const std::vector<double>& u_lambdas,
                           const std::vector<double>& t_lambdas) {
  if (setup.replicates < 2) {
    throw Error(ErrorKind::InvalidParams, "replicate_run needs at least two replicates",
                setup.replicates);
  }
  const int reps = setup.replicates;
  std::vector<std::vector<ReplicateRow>> per(reps);
  std::vector<std::exception_ptr> failures(reps);
  const int threads = std::clamp(setup.threads, 1, reps);
  auto worker = [&](int t) {
    for (int k = t; k < reps; k += threads) {
      try {
        per[k] = run_replicate(setup, params, u_lambdas, t_lambdas, k);
      } catch (const Error& e) {
        failures[k] = std::make_exception_ptr(
            Error(e.kind(), "seed " + std::to_string(setup.base_seed + k) + ": " + e.what(),
                  e.value()));
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  ReplicateRun run;
  for (auto& rows : per) run.rows.insert(run.rows.end(), rows.begin(), rows.end());

  auto aggregate = [&](SimFamily family, double lambda) {
    ReplicateStats st;
    st.family = family;
    st.lambda = lambda;
    std::vector<double> norms, values;
    for (const auto& row : run.rows) {
      if (row.family != family || row.lambda != lambda) continue;
      if (!row.feasible) {
        st.skipped.push_back(row.seed);
        continue;
      }
      norms.push_back(row.norm_sq);
      values.push_back(row.value);
    }
    if (norms.empty()) {
      throw Error(ErrorKind::AllReplicatesInfeasible,
                  std::string("no admissible replicate for ") + to_string(family) +
                      " at lambda = " + std::to_string(lambda),
                  lambda);
    }
    st.count = static_cast<int>(norms.size());
    st.norm_sq = mean_stderr(norms);
    st.value = mean_stderr(values);
    return st;
  };
  run.stats.push_back(aggregate(SimFamily::MinNorm, 0.0));
  for (double l : u_lambdas) run.stats.push_back(aggregate(SimFamily::U, l));
  if (setup.N > setup.n) {
    for (double l : t_lambdas) run.stats.push_back(aggregate(SimFamily::T, l));
  }
  return run;
}

}  // namespace rfu
