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

#ifndef RFU_ERRORS_HPP_
#define RFU_ERRORS_HPP_

#include <optional>
#include <stdexcept>
#include <string>

namespace rfu {

enum class ErrorKind {
  // activation
  NonFiniteActivation,
  DegenerateActivation,
  UnknownActivation,
  // fixed point
  InvalidFamily,
  SingularDenominator,
  NoConvergence,
  BranchInstability,
  BranchCutHit,
  // asymptotics
  InvalidParams,
  OutsideAdmissibleRegion,
  RequiresOverparam,
  NormLevelOutOfRange,
  EnvelopeViolation,
  ExtrapolationUnstable,
  // simulator
  RankDeficient,
  NotNegativeDefinite,
  SingularKKT,
  SpectrumHit,
  AllReplicatesInfeasible,
  // analysis
  InsufficientPoints,
  NonPositiveOrdinate,
  GridMismatch,
  // cli
  ConfigInvalid,
};

const char* to_string(ErrorKind kind);

/// Validation errors map to exit code 2, everything else is numerical (3).
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<double> value = std::nullopt);

  ErrorKind kind() const { return kind_; }

  /// Numeric context attached by the thrower (final residual, failing
  /// lambda, ...), if any.
  std::optional<double> value() const { return value_; }

 private:
  ErrorKind kind_;
  std::optional<double> value_;
};

}  // namespace rfu

#endif  // RFU_ERRORS_HPP_
