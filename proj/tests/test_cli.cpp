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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "config.hpp"
#include "rfu/asymptotics.hpp"
#include "rfu/errors.hpp"

namespace rfu::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rfuniform_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + RFU_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

ErrorKind validate_kind(const RunConfig& c) {
  try {
    validate(c);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidParams;  // anything but ConfigInvalid
}

TEST(Config, RoundTripIsIdempotent) {
  for (const char* fig : {"fig1", "fig2", "fig3", "fig4"}) {
    const nlohmann::json once = config_to_json(config_from_json(config_to_json(paper_defaults(fig))));
    const nlohmann::json twice = config_to_json(config_from_json(once));
    EXPECT_EQ(once, twice) << fig;
  }
  const auto partial = nlohmann::json::parse(R"({"command": "theory", "params": {"psi1": 3.0},
      "lambda": {"min": 0.5, "max": 2, "count": 4}})");
  const nlohmann::json once = config_to_json(config_from_json(partial));
  EXPECT_EQ(once, config_to_json(config_from_json(once)));
  EXPECT_EQ(once["params"]["psi1"], 3.0);
}

TEST(Config, UnknownKeysAndBadTypesAreRejected) {
  for (const char* text : {R"({"comand": "theory"})", R"({"params": {"psi3": 1}})",
                           R"({"alpha": "big"})", R"({"sim": []})"}) {
    try {
      config_from_json(nlohmann::json::parse(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid) << text;
    }
  }
}

TEST(Config, PresetsValidate) {
  for (const char* fig : {"fig1", "fig2", "fig3", "fig4"}) EXPECT_NO_THROW(validate(paper_defaults(fig)));
  EXPECT_EQ(paper_defaults("fig2").sim.N, 500);
  EXPECT_EQ(paper_defaults("fig2").lambda_t.min, 0.21);
}

TEST(Config, ValidationFailures) {
  RunConfig c = paper_defaults("fig2");
  c.lambda.count = 1;
  EXPECT_EQ(validate_kind(c), ErrorKind::ConfigInvalid);
  c = paper_defaults("fig2");
  c.sim.N = 200;
  EXPECT_EQ(validate_kind(c), ErrorKind::ConfigInvalid);
  c = paper_defaults("fig1");
  c.alpha = 1.0;
  EXPECT_EQ(validate_kind(c), ErrorKind::ConfigInvalid);
  c.alpha = 1.5;
  c.params.activation = "sigmoid-ish";
  EXPECT_EQ(validate_kind(c), ErrorKind::ConfigInvalid);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("exit");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("theory --lambda 0.5:2:1 -o " + out.string()), 2);
  EXPECT_EQ(run_cli("theory --lambda 0.5:2 -o " + out.string()), 2);
  EXPECT_EQ(run_cli("frobnicate --lambda 0.5:2:3 -o " + out.string()), 2);
  EXPECT_EQ(run_cli("--no-such-flag"), 2);
  EXPECT_EQ(run_cli("theory --config " + (out / "missing.json").string()), 2);
  // No instance is admissible for U at such a small penalty.
  EXPECT_EQ(run_cli("simulate --lambda 1e-6:2e-6:2 --d 20 --N 50 --n 30 --replicates 2 -o " +
                    out.string()),
            3);
}

TEST(Cli, TheoryCsvRoundTripsLibraryValues) {
  const fs::path out = scratch("theory");
  ASSERT_EQ(run_cli("theory --psi1 2.5 --psi2 1.5 --f1-sq 1 --tau-sq 0 --activation relu "
                    "--lambda 0.426:2:5 --lambda-t 0.21:2:3 --figure-id figB -o " + out.string()),
            0);
  const auto rows = read_csv(out / "figB_theory.csv");
  ASSERT_EQ(rows.size(), 1u + 7u);  // lambda = 2 is shared by both grids
  EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda", "lambda_bar", "ubar", "a_u", "tbar",
                                               "a_t", "risk", "norm"}));
  const ModelParams p = ModelParams::create(2.5, 1.5, 1.0, 0.0, activation_preset("relu"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double lambda = std::stod(rows[i][0]);
    const LagrangianPoint t = tbar_point(lambda / p.mustar_sq(), p);
    EXPECT_EQ(std::stod(rows[i][5]), t.norm_sq);
    if (lambda < 0.426) {
      EXPECT_EQ(rows[i][3], "nan");  // below the U range
    } else {
      EXPECT_EQ(std::stod(rows[i][3]), ubar_point(lambda / p.mustar_sq(), p).norm_sq);
    }
  }
}

TEST(Cli, DiagnosticsDumpBothLimits) {
  const fs::path out = scratch("diag");
  ASSERT_EQ(run_cli("theory --lambda 0.5:1:2 --diagnostics --figure-id d -o " + out.string()), 0);
  const auto rows = read_csv(out / "d_diagnostics.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][2], "m1_u0");
  EXPECT_EQ(rows[0][4], "m1_uinf_re");
  EXPECT_LT(std::abs(std::stod(rows[1][4])), 1e-6);  // m -> 0 as u -> infinity
}

TEST(Cli, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::string args =
      "simulate --lambda 1:2:2 --lambda-t 0.5:2:2 --d 30 --N 75 --n 45 --replicates 4 --seed 3 "
      "--figure-id s -o ";
  ASSERT_EQ(run_cli(args + a.string(), "RF_UNIFORM_THREADS=1"), 0);
  ASSERT_EQ(run_cli(args + b.string(), "RF_UNIFORM_THREADS=3"), 0);
  for (const char* f : {"s_replicates.csv", "s_stats.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty());
  }
}

TEST(Cli, DumpedConfigReloadsToTheSameConfig) {
  const fs::path out = scratch("dump");
  const std::string first = (out / "a.json").string(), second = (out / "b.json").string();
  ASSERT_EQ(run_cli("--paper-defaults fig2 --replicates 7 --dump-config " + first), 0);
  ASSERT_EQ(run_cli("--config " + first + " --dump-config " + second), 0);
  EXPECT_EQ(slurp(first), slurp(second));
  EXPECT_EQ(load_config(first).sim.replicates, 7);
}

TEST(Cli, PowerlawOverKernelLimitCsv) {
  const fs::path out = scratch("pl");
  const std::string cfg = (out / "k.json").string();
  std::ofstream(cfg) << R"({"command": "kernel-limit", "figure_id": "k",
      "params": {"activation": "shifted_relu", "tau_sq": 0.1},
      "psi2": {"min": 1000, "max": 10000, "count": 4, "log": true},
      "quantities": ["norm"], "output_path": ")" << out.string() << "\"}";
  ASSERT_EQ(run_cli("--config " + cfg), 0);
  ASSERT_EQ(run_cli("powerlaw --input " + (out / "k_kernel.csv").string() + " --y value "
                    "--figure-id k -o " + out.string()),
            0);
  const auto rows = read_csv(out / "k_powerlaw.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "norm");
  EXPECT_NEAR(std::stod(rows[1][1]), 1.0, 0.1);
}

TEST(Cli, NumbersUseSeventeenSignificantDigits) {
  const fs::path out = scratch("digits");
  ASSERT_EQ(run_cli("theory --lambda 0.7:0.9:2 --figure-id g -o " + out.string()), 0);
  const auto rows = read_csv(out / "g_theory.csv");
  const std::string cell = rows[1][2];
  std::size_t digits = 0;
  for (char ch : cell.substr(0, cell.find('e'))) digits += std::isdigit(static_cast<unsigned char>(ch)) ? 1 : 0;
  EXPECT_GE(digits, 16u);  // a leading "0." contributes one non-significant digit
}

TEST(Cli, ThreadCapReadsEnvironment) {
  ::setenv("RF_UNIFORM_THREADS", "2", 1);
  EXPECT_EQ(thread_cap(), 2);
  ::setenv("RF_UNIFORM_THREADS", "junk", 1);
  EXPECT_GE(thread_cap(), 1);
  ::unsetenv("RF_UNIFORM_THREADS");
}

}  // namespace
}  // namespace rfu::cli
