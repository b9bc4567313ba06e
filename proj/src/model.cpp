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

#include "rfu/model.hpp"

#include <cmath>

#include "rfu/errors.hpp"

namespace rfu {

ModelParams ModelParams::create(double psi1, double psi2, double f1_sq, double tau_sq,
                                const ActivationProfile& profile) {
  if (!(psi1 > 0.0) || !(psi2 > 0.0) || !std::isfinite(psi1) || !std::isfinite(psi2)) {
    throw Error(ErrorKind::InvalidParams, "psi1 and psi2 must be positive and finite");
  }
  if (!(f1_sq >= 0.0) || !(tau_sq >= 0.0)) {
    throw Error(ErrorKind::InvalidParams, "f1_sq and tau_sq must be non-negative");
  }
  if (!(profile.mustar_sq > 0.0) || !(profile.mu1_sq() > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "activation needs mu1^2 > 0 and mustar^2 > 0");
  }
  const double z = profile.zeta();
  if (!std::isfinite(z) || !(z > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "zeta = mu1^2/mustar^2 must be finite and positive");
  }
  ModelParams p;
  p.psi1 = psi1;
  p.psi2 = psi2;
  p.f1_sq = f1_sq;
  p.tau_sq = tau_sq;
  p.profile = profile.centered();
  return p;
}

ModelParams ModelParams::with_psi(double new_psi1, double new_psi2) const {
  ModelParams p = *this;
  if (!(new_psi1 > 0.0) || !(new_psi2 > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "psi1 and psi2 must be positive");
  }
  p.psi1 = new_psi1;
  p.psi2 = new_psi2;
  return p;
}

}  // namespace rfu
