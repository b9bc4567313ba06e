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

#ifndef RFU_ACTIVATION_HPP_
#define RFU_ACTIVATION_HPP_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rfu {

using ScalarFn = std::function<double(double)>;

/// Quadrature rule integrating against the standard normal density; the
/// weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  double expect(const ScalarFn& f) const;
};

/// Gauss-Hermite rule for E[f(G)], G ~ N(0,1) (probabilists' Hermite,
/// Golub-Welsch).
QuadratureRule gauss_hermite_rule(int order);

/// Gaussian-weighted rule with the real line split at `breakpoints`: each
/// piece gets a Gauss-Legendre rule of `order` nodes on a truncated range
/// of +-14 standard deviations. Used for activations with kinks, where a
/// global Gauss-Hermite rule only converges algebraically.
QuadratureRule split_gaussian_rule(int order, std::span<const double> breakpoints);

/// Gaussian moments of an activation, before any validation.
struct HermiteMoments {
  double mu0 = 0.0;          // E[s(G)]
  double mu1 = 0.0;          // E[G s(G)]
  double second = 0.0;       // E[s(G)^2]
  double mustar_sq = 0.0;    // second - mu0^2 - mu1^2, clamped at 0
  double mustar_sq_proj = 0.0;  // E[(s(G) - mu0 - mu1 G)^2]
};

HermiteMoments hermite_moments(const ScalarFn& sigma, int quad_order,
                               std::span<const double> breakpoints = {});

struct ActivationProfile {
  std::string name;
  ScalarFn evaluator;  // may be empty for coefficient-only profiles
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mustar_sq = 0.0;
  int quad_order = 0;
  std::vector<double> breakpoints;

  double mu1_sq() const { return mu1 * mu1; }
  /// mu1^2 / mustar^2.
  double zeta() const { return mu1 * mu1 / mustar_sq; }

  /// Same profile with mu0 subtracted from the evaluator (mu0 becomes 0).
  ActivationProfile centered() const;
};

inline constexpr int kDefaultQuadOrder = 200;

/// Hermite coefficients of `sigma`. Throws NonFiniteActivation if any node
/// evaluation is non-finite, DegenerateActivation if mu1^2 or mustar^2 is
/// at most 1e-12.
ActivationProfile hermite_coeffs(std::string name, ScalarFn sigma,
                                 int quad_order = kDefaultQuadOrder,
                                 std::span<const double> breakpoints = {});

/// Profile carrying only coefficients (no evaluator). Used for synthetic
/// model instances that never touch the simulator.
ActivationProfile coefficient_profile(double mu1, double mustar_sq);

/// Built-in presets: "relu", "shifted_relu", "tanh", "softplus_centered".
ActivationProfile activation_preset(std::string_view name,
                                    int quad_order = kDefaultQuadOrder);
std::vector<std::string> activation_preset_names();

}  // namespace rfu

#endif  // RFU_ACTIVATION_HPP_
