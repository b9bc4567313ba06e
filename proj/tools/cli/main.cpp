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

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "rfu/errors.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// "min:max:count[:log]"
rfu::cli::GridSpec parse_grid(const std::string& spec, const std::string& flag) {
  std::stringstream ss(spec);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "log" &&
                                               parts[3] != "lin")) {
    throw rfu::Error(rfu::ErrorKind::ConfigInvalid,
                     flag + " expects min:max:count[:log|lin], got '" + spec + "'");
  }
  rfu::cli::GridSpec g;
  try {
    g.min = std::stod(parts[0]);
    g.max = std::stod(parts[1]);
    g.count = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw rfu::Error(rfu::ErrorKind::ConfigInvalid, flag + ": cannot parse '" + spec + "'");
  }
  g.log = parts.size() == 4 && parts[3] == "log";
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uniform convergence bounds for random features regression"};
  app.set_version_flag("--version", "rfuniform 1.0.0");

  std::optional<std::string> command, config_path, preset, dump_path;
  app.add_option("command", command,
                 "theory | simulate | compare | kernel-limit | powerlaw | logdet-check");
  auto* cfg_opt = app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--paper-defaults", preset, "published parameter set: fig1 | fig2 | fig3 | fig4")
      ->excludes(cfg_opt);
  app.add_option("--dump-config", dump_path,
                 "write the resolved configuration to this file ('-' for stdout) and exit");

  std::optional<double> psi1, psi2, f1_sq, tau_sq, alpha;
  std::optional<std::string> activation, figure_id, output, lambda, lambda_t, psi1_grid,
      psi2_grid, input, xcol, ycol;
  std::optional<int> d, N, n, replicates;
  std::optional<std::uint64_t> seed;
  bool diagnostics = false;
  app.add_option("--psi1", psi1, "features per dimension N/d");
  app.add_option("--psi2", psi2, "samples per dimension n/d");
  app.add_option("--f1-sq", f1_sq, "signal strength F1^2");
  app.add_option("--tau-sq", tau_sq, "noise variance tau^2");
  app.add_option("--activation", activation, "relu | shifted_relu | tanh | softplus_centered");
  app.add_option("--alpha", alpha, "norm level multiple (> 1)");
  app.add_option("--lambda", lambda, "lambda grid (U cells) min:max:count[:log]");
  app.add_option("--lambda-t", lambda_t, "lambda grid for T cells min:max:count[:log]");
  app.add_option("--psi1-grid", psi1_grid, "finite-width sweep min:max:count[:log]");
  app.add_option("--psi2-grid", psi2_grid, "kernel-limit sweep min:max:count[:log]");
  app.add_option("--d", d, "covariate dimension");
  app.add_option("--N", N, "number of features");
  app.add_option("--n", n, "number of samples");
  app.add_option("--replicates", replicates, "Monte Carlo replicates");
  app.add_option("--seed", seed, "base seed (replicate k uses seed + k)");
  app.add_option("--input", input, "powerlaw: input CSV");
  app.add_option("--x", xcol, "powerlaw: abscissa column");
  app.add_option("--y", ycol, "powerlaw: ordinate column");
  app.add_option("--figure-id", figure_id, "CSV name stem");
  app.add_option("-o,--output", output, "output directory");
  app.add_flag("--diagnostics", diagnostics, "theory: also write fixed-point diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    rfu::cli::RunConfig c;
    if (preset) c = rfu::cli::paper_defaults(*preset);
    if (config_path) c = rfu::cli::load_config(*config_path);
    if (command) c.command = *command;
    if (psi1) c.params.psi1 = *psi1;
    if (psi2) c.params.psi2 = *psi2;
    if (f1_sq) c.params.f1_sq = *f1_sq;
    if (tau_sq) c.params.tau_sq = *tau_sq;
    if (activation) c.params.activation = *activation;
    if (alpha) c.alpha = *alpha;
    if (lambda) c.lambda = parse_grid(*lambda, "--lambda");
    if (lambda_t) c.lambda_t = parse_grid(*lambda_t, "--lambda-t");
    if (psi1_grid) c.psi1 = parse_grid(*psi1_grid, "--psi1-grid");
    if (psi2_grid) c.psi2 = parse_grid(*psi2_grid, "--psi2-grid");
    if (d) c.sim.d = *d;
    if (N) c.sim.N = *N;
    if (n) c.sim.n = *n;
    if (replicates) c.sim.replicates = *replicates;
    if (seed) c.sim.base_seed = *seed;
    if (input) c.powerlaw.input = *input;
    if (xcol) c.powerlaw.x = *xcol;
    if (ycol) c.powerlaw.y = *ycol;
    if (figure_id) c.figure_id = *figure_id;
    if (output) c.output_path = *output;
    if (diagnostics) c.diagnostics = true;

    if (dump_path) {
      const std::string text = rfu::cli::config_to_json(c).dump(2) + "\n";
      if (*dump_path == "-") {
        std::cout << text;
      } else {
        std::ofstream(*dump_path) << text;
      }
      return 0;
    }
    for (const auto& f : rfu::cli::run(c)) std::cout << "wrote " << f << "\n";
    return 0;
  } catch (const rfu::Error& e) {
    std::cerr << "error [" << rfu::to_string(e.kind()) << "]: " << e.what() << "\n";
    return rfu::is_validation_error(e.kind()) ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
