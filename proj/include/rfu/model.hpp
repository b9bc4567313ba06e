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

#ifndef RFU_MODEL_HPP_
#define RFU_MODEL_HPP_

#include "rfu/activation.hpp"

namespace rfu {

/// The asymptotic problem instance: N/d -> psi1, n/d -> psi2, ||beta||^2 ->
/// F1^2, noise variance tau^2, and a centered activation profile.
struct ModelParams {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double f1_sq = 0.0;
  double tau_sq = 0.0;
  ActivationProfile profile;

  /// Validates and stores `profile.centered()`. Throws InvalidParams.
  static ModelParams create(double psi1, double psi2, double f1_sq, double tau_sq,
                            const ActivationProfile& profile);

  double mu1_sq() const { return profile.mu1_sq(); }
  double mustar_sq() const { return profile.mustar_sq; }
  double zeta() const { return profile.zeta(); }

  ModelParams with_psi(double new_psi1, double new_psi2) const;
};

}  // namespace rfu

#endif  // RFU_MODEL_HPP_
