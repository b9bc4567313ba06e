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

#ifndef RFU_TOOLS_CONFIG_HPP_
#define RFU_TOOLS_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace rfu::cli {

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  int count = 0;  // 0 = grid not used
  bool log = false;

  bool used() const { return count != 0; }
  std::vector<double> values() const;
};

struct ParamSpec {
  double psi1 = 2.5;
  double psi2 = 1.5;
  double f1_sq = 1.0;
  double tau_sq = 0.0;
  std::string activation = "relu";
};

struct SimSpec {
  int d = 200;
  int N = 500;
  int n = 300;
  int replicates = 20;
  std::uint64_t base_seed = 1;
};

struct PowerlawSpec {
  std::string input;        // long-format CSV written by kernel-limit
  std::string x = "x";      // abscissa column
  std::string y = "excess"; // ordinate column
  double window_min = 0.0;  // 0 = top decade
  double window_max = 0.0;
};

struct LogdetSpec {
  std::vector<int> d{400};
  std::vector<double> u{0.5};
  std::vector<double> lambda{0.5, 1.0, 2.0};
  int replicates = 10;
};

struct RunConfig {
  std::string command = "theory";
  std::string figure_id = "run";
  ParamSpec params;
  GridSpec lambda;    // theory grid (U grid for simulate / compare)
  GridSpec lambda_t;  // T grid for simulate / compare; theory uses it if set
  GridSpec psi1;      // finite-width sweep for kernel-limit
  GridSpec psi2;      // kernel-limit sweep
  SimSpec sim;
  double alpha = 1.5;
  std::vector<double> tau_sq_sweep;  // kernel-limit: one CSV per value
  std::vector<double> level_powers;  // kernel-limit: U at level psi2^p
  std::vector<std::string> quantities{"ubar_alpha", "tbar_alpha", "risk", "norm"};
  PowerlawSpec powerlaw;
  LogdetSpec logdet;
  bool diagnostics = false;
  std::string output_path = ".";
};

/// Throws Error(ConfigInvalid) on unknown keys, wrong types or bad values.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);

RunConfig load_config(const std::string& path);

/// Published parameter sets for fig1..fig4.
RunConfig paper_defaults(const std::string& figure);

/// Checks everything the commands rely on. Throws Error(ConfigInvalid).
void validate(const RunConfig& c);

}  // namespace rfu::cli

#endif  // RFU_TOOLS_CONFIG_HPP_
