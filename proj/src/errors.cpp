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

#include "rfu/errors.hpp"

namespace rfu {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::DegenerateActivation: return "DegenerateActivation";
    case ErrorKind::UnknownActivation: return "UnknownActivation";
    case ErrorKind::InvalidFamily: return "InvalidFamily";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::BranchInstability: return "BranchInstability";
    case ErrorKind::BranchCutHit: return "BranchCutHit";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::OutsideAdmissibleRegion: return "OutsideAdmissibleRegion";
    case ErrorKind::RequiresOverparam: return "RequiresOverparam";
    case ErrorKind::NormLevelOutOfRange: return "NormLevelOutOfRange";
    case ErrorKind::EnvelopeViolation: return "EnvelopeViolation";
    case ErrorKind::ExtrapolationUnstable: return "ExtrapolationUnstable";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotNegativeDefinite: return "NotNegativeDefinite";
    case ErrorKind::SingularKKT: return "SingularKKT";
    case ErrorKind::SpectrumHit: return "SpectrumHit";
    case ErrorKind::AllReplicatesInfeasible: return "AllReplicatesInfeasible";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::NonPositiveOrdinate: return "NonPositiveOrdinate";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigInvalid:
    case ErrorKind::UnknownActivation:
    case ErrorKind::InvalidParams:
    case ErrorKind::InvalidFamily:
    case ErrorKind::RequiresOverparam:
    case ErrorKind::GridMismatch:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& what,
             std::optional<double> value)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what),
      kind_(kind),
      value_(value) {}

}  // namespace rfu
