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

#ifndef RFU_TOOLS_COMMANDS_HPP_
#define RFU_TOOLS_COMMANDS_HPP_

#include <string>
#include <vector>

#include "config.hpp"

namespace rfu::cli {

/// Runs the configured command and returns the CSV files written, in order.
/// Throws rfu::Error; numerical failures carry the failing lambda or seed.
std::vector<std::string> run(const RunConfig& config);

/// Worker cap: RF_UNIFORM_THREADS if set and positive, else the core count.
int thread_cap();

}  // namespace rfu::cli

#endif  // RFU_TOOLS_COMMANDS_HPP_
