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

#include "rfu/activation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "rfu/errors.hpp"

namespace rfu {
namespace {

constexpr double kTruncation = 14.0;

// Nodes/weights of the Jacobi matrix with zero diagonal and the given
// off-diagonal; weights are normalized to sum to one.
void golub_welsch(const Eigen::VectorXd& offdiag, std::vector<double>& nodes,
                  std::vector<double>& weights) {
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  nodes.resize(n);
  weights.resize(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    weights[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    total += weights[i];
  }
  for (double& w : weights) w /= total;
}

}  // namespace

double QuadratureRule::expect(const ScalarFn& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
  return acc;
}

QuadratureRule gauss_hermite_rule(int order) {
  if (order < 2) throw Error(ErrorKind::InvalidParams, "quadrature order < 2");
  Eigen::VectorXd off(order - 1);
  for (int k = 1; k < order; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  QuadratureRule rule;
  golub_welsch(off, rule.nodes, rule.weights);
  return rule;
}

QuadratureRule split_gaussian_rule(int order, std::span<const double> breakpoints) {
  if (order < 2) throw Error(ErrorKind::InvalidParams, "quadrature order < 2");
  Eigen::VectorXd off(order - 1);
  for (int k = 1; k < order; ++k) {
    const double kk = static_cast<double>(k);
    off(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  std::vector<double> ref_nodes, ref_weights;
  golub_welsch(off, ref_nodes, ref_weights);  // Legendre on [-1,1], sum 1

  std::vector<double> cuts{-kTruncation};
  for (double b : breakpoints) {
    if (b > -kTruncation && b < kTruncation) cuts.push_back(b);
  }
  cuts.push_back(kTruncation);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  QuadratureRule rule;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < ref_nodes.size(); ++i) {
      const double x = mid + half * ref_nodes[i];
      // ref weights sum to 1 over [-1,1], i.e. they are w_i / 2
      const double w = 2.0 * half * ref_weights[i] * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      rule.nodes.push_back(x);
      rule.weights.push_back(w);
    }
  }
  return rule;
}

HermiteMoments hermite_moments(const ScalarFn& sigma, int quad_order,
                               std::span<const double> breakpoints) {
  const QuadratureRule rule = breakpoints.empty()
                                  ? gauss_hermite_rule(quad_order)
                                  : split_gaussian_rule(quad_order, breakpoints);
  std::vector<double> values(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    values[i] = sigma(rule.nodes[i]);
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::NonFiniteActivation,
                  "activation is not finite at node " + std::to_string(rule.nodes[i]),
                  rule.nodes[i]);
    }
  }
  HermiteMoments m;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = rule.weights[i];
    m.mu0 += w * values[i];
    m.mu1 += w * rule.nodes[i] * values[i];
    m.second += w * values[i] * values[i];
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r = values[i] - m.mu0 - m.mu1 * rule.nodes[i];
    m.mustar_sq_proj += rule.weights[i] * r * r;
  }
  m.mustar_sq = std::max(0.0, m.second - m.mu0 * m.mu0 - m.mu1 * m.mu1);
  return m;
}

ActivationProfile ActivationProfile::centered() const {
  ActivationProfile out = *this;
  if (evaluator && mu0 != 0.0) {
    const double shift = mu0;
    ScalarFn inner = evaluator;
    out.evaluator = [inner, shift](double x) { return inner(x) - shift; };
  }
  out.mu0 = 0.0;
  return out;
}

ActivationProfile hermite_coeffs(std::string name, ScalarFn sigma, int quad_order,
                                 std::span<const double> breakpoints) {
  const HermiteMoments m = hermite_moments(sigma, quad_order, breakpoints);
  if (m.mu1 * m.mu1 <= 1e-12) {
    throw Error(ErrorKind::DegenerateActivation, name + ": mu1^2 vanishes", m.mu1);
  }
  if (m.mustar_sq <= 1e-12) {
    throw Error(ErrorKind::DegenerateActivation, name + ": mustar^2 vanishes", m.mustar_sq);
  }
  ActivationProfile p;
  p.name = std::move(name);
  p.evaluator = std::move(sigma);
  p.mu0 = m.mu0;
  p.mu1 = m.mu1;
  p.mustar_sq = m.mustar_sq;
  p.quad_order = quad_order;
  p.breakpoints.assign(breakpoints.begin(), breakpoints.end());
  return p;
}

ActivationProfile coefficient_profile(double mu1, double mustar_sq) {
  if (!(mu1 * mu1 > 1e-12) || !(mustar_sq > 1e-12)) {
    throw Error(ErrorKind::DegenerateActivation, "coefficient profile needs mu1^2, mustar^2 > 0");
  }
  ActivationProfile p;
  p.name = "coefficients";
  p.mu1 = mu1;
  p.mustar_sq = mustar_sq;
  return p;
}

ActivationProfile activation_preset(std::string_view name, int quad_order) {
  static const double kKink[] = {0.0};
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  if (name == "relu") {
    return hermite_coeffs("relu", [](double x) { return std::max(0.0, x); }, quad_order, kKink);
  }
  if (name == "shifted_relu") {
    return hermite_coeffs(
        "shifted_relu", [inv_sqrt_2pi](double x) { return std::max(0.0, x) - inv_sqrt_2pi; },
        quad_order, kKink);
  }
  if (name == "tanh") {
    return hermite_coeffs("tanh", [](double x) { return std::tanh(x); }, quad_order);
  }
  if (name == "softplus_centered") {
    // log(1+e^x) minus its Gaussian mean, computed once
    auto softplus = [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); };
    const double mean = hermite_moments(softplus, quad_order).mu0;
    return hermite_coeffs(
        "softplus_centered", [softplus, mean](double x) { return softplus(x) - mean; },
        quad_order);
  }
  throw Error(ErrorKind::UnknownActivation, "unknown activation '" + std::string(name) + "'");
}

std::vector<std::string> activation_preset_names() {
  return {"relu", "shifted_relu", "tanh", "softplus_centered"};
}

}  // namespace rfu
