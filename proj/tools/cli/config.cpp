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

#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "rfu/activation.hpp"
#include "rfu/analysis.hpp"
#include "rfu/errors.hpp"

namespace rfu::cli {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::ConfigInvalid, msg); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) invalid(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) invalid("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid("bad value for '" + std::string(key) + "' in " + where);
  }
}

GridSpec grid_from(const json& j, const std::string& where) {
  check_keys(j, where, {"min", "max", "count", "log"});
  GridSpec g;
  read(j, "min", g.min, where);
  read(j, "max", g.max, where);
  read(j, "count", g.count, where);
  read(j, "log", g.log, where);
  return g;
}

json grid_to(const GridSpec& g) {
  return json{{"min", g.min}, {"max", g.max}, {"count", g.count}, {"log", g.log}};
}

const std::set<std::string> kCommands{"theory",       "simulate",     "powerlaw",
                                      "kernel-limit", "logdet-check", "compare"};
const std::set<std::string> kQuantities{"ubar_alpha", "tbar_alpha", "risk", "norm"};

}  // namespace

std::vector<double> GridSpec::values() const { return make_grid(min, max, count, log); }

RunConfig config_from_json(const json& j) {
  check_keys(j, "config",
             {"command", "figure_id", "params", "lambda", "lambda_t", "psi1", "psi2", "sim",
              "alpha", "tau_sq_sweep", "level_powers", "quantities", "powerlaw", "logdet",
              "diagnostics", "output_path"});
  RunConfig c;
  read(j, "command", c.command, "config");
  read(j, "figure_id", c.figure_id, "config");
  if (j.contains("params")) {
    const auto& p = j.at("params");
    check_keys(p, "params", {"psi1", "psi2", "f1_sq", "tau_sq", "activation"});
    read(p, "psi1", c.params.psi1, "params");
    read(p, "psi2", c.params.psi2, "params");
    read(p, "f1_sq", c.params.f1_sq, "params");
    read(p, "tau_sq", c.params.tau_sq, "params");
    read(p, "activation", c.params.activation, "params");
  }
  if (j.contains("lambda")) c.lambda = grid_from(j.at("lambda"), "lambda");
  if (j.contains("lambda_t")) c.lambda_t = grid_from(j.at("lambda_t"), "lambda_t");
  if (j.contains("psi1")) c.psi1 = grid_from(j.at("psi1"), "psi1");
  if (j.contains("psi2")) c.psi2 = grid_from(j.at("psi2"), "psi2");
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    check_keys(s, "sim", {"d", "N", "n", "replicates", "base_seed"});
    read(s, "d", c.sim.d, "sim");
    read(s, "N", c.sim.N, "sim");
    read(s, "n", c.sim.n, "sim");
    read(s, "replicates", c.sim.replicates, "sim");
    read(s, "base_seed", c.sim.base_seed, "sim");
  }
  read(j, "alpha", c.alpha, "config");
  read(j, "tau_sq_sweep", c.tau_sq_sweep, "config");
  read(j, "level_powers", c.level_powers, "config");
  read(j, "quantities", c.quantities, "config");
  if (j.contains("powerlaw")) {
    const auto& p = j.at("powerlaw");
    check_keys(p, "powerlaw", {"input", "x", "y", "window_min", "window_max"});
    read(p, "input", c.powerlaw.input, "powerlaw");
    read(p, "x", c.powerlaw.x, "powerlaw");
    read(p, "y", c.powerlaw.y, "powerlaw");
    read(p, "window_min", c.powerlaw.window_min, "powerlaw");
    read(p, "window_max", c.powerlaw.window_max, "powerlaw");
  }
  if (j.contains("logdet")) {
    const auto& l = j.at("logdet");
    check_keys(l, "logdet", {"d", "u", "lambda", "replicates"});
    read(l, "d", c.logdet.d, "logdet");
    read(l, "u", c.logdet.u, "logdet");
    read(l, "lambda", c.logdet.lambda, "logdet");
    read(l, "replicates", c.logdet.replicates, "logdet");
  }
  read(j, "diagnostics", c.diagnostics, "config");
  read(j, "output_path", c.output_path, "config");
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["figure_id"] = c.figure_id;
  j["params"] = {{"psi1", c.params.psi1},
                 {"psi2", c.params.psi2},
                 {"f1_sq", c.params.f1_sq},
                 {"tau_sq", c.params.tau_sq},
                 {"activation", c.params.activation}};
  j["lambda"] = grid_to(c.lambda);
  j["lambda_t"] = grid_to(c.lambda_t);
  j["psi1"] = grid_to(c.psi1);
  j["psi2"] = grid_to(c.psi2);
  j["sim"] = {{"d", c.sim.d},
              {"N", c.sim.N},
              {"n", c.sim.n},
              {"replicates", c.sim.replicates},
              {"base_seed", c.sim.base_seed}};
  j["alpha"] = c.alpha;
  j["tau_sq_sweep"] = c.tau_sq_sweep;
  j["level_powers"] = c.level_powers;
  j["quantities"] = c.quantities;
  j["powerlaw"] = {{"input", c.powerlaw.input},
                   {"x", c.powerlaw.x},
                   {"y", c.powerlaw.y},
                   {"window_min", c.powerlaw.window_min},
                   {"window_max", c.powerlaw.window_max}};
  j["logdet"] = {{"d", c.logdet.d},
                 {"u", c.logdet.u},
                 {"lambda", c.logdet.lambda},
                 {"replicates", c.logdet.replicates}};
  j["diagnostics"] = c.diagnostics;
  j["output_path"] = c.output_path;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    invalid("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

RunConfig paper_defaults(const std::string& figure) {
  RunConfig c;
  c.figure_id = figure;
  c.alpha = 1.5;
  if (figure == "fig1") {
    c.command = "kernel-limit";
    c.params = {2.5, 1.5, 1.0, 0.1, "shifted_relu"};
    c.psi2 = {1e2, 1e4, 16, true};
    c.tau_sq_sweep = {0.0, 0.1};
  } else if (figure == "fig2") {
    c.command = "compare";
    c.params = {2.5, 1.5, 1.0, 0.0, "relu"};
    c.lambda = {0.426, 2.0, 8, false};
    c.lambda_t = {0.21, 2.0, 8, false};
    c.sim = {200, 500, 300, 20, 1};
  } else if (figure == "fig3") {
    c.command = "kernel-limit";
    c.params = {2.5, 1.5, 1.0, 0.1, "shifted_relu"};
    c.psi2 = {1e2, 1e4, 16, true};
    c.level_powers = {0.0, 0.25, 0.5, 0.75, 1.0};
    c.quantities = {};
  } else if (figure == "fig4") {
    c.command = "kernel-limit";
    c.params = {2.5, 1.5, 1.0, 0.1, "shifted_relu"};
    c.psi1 = {10.0, 1e4, 12, true};
  } else {
    invalid("unknown paper-defaults preset '" + figure + "' (fig1..fig4)");
  }
  return c;
}

void validate(const RunConfig& c) {
  if (!kCommands.count(c.command)) invalid("unknown command '" + c.command + "'");
  if (c.figure_id.empty() || c.figure_id.find('/') != std::string::npos) {
    invalid("figure_id must be a plain file-name stem");
  }
  const auto names = activation_preset_names();
  if (std::find(names.begin(), names.end(), c.params.activation) == names.end()) {
    invalid("unknown activation '" + c.params.activation + "'");
  }
  for (const auto* g : {&c.lambda, &c.lambda_t, &c.psi1, &c.psi2}) {
    if (g->used()) (void)g->values();  // throws ConfigInvalid on count < 2 or bad range
  }
  for (const auto& q : c.quantities) {
    if (!kQuantities.count(q)) invalid("unknown quantity '" + q + "'");
  }
  if (!(c.alpha > 1.0)) invalid("alpha must exceed 1");
  const auto& cmd = c.command;
  if (cmd == "theory" && !c.lambda.used()) invalid("theory needs a lambda grid");
  if (cmd == "kernel-limit" && !c.psi1.used() && !c.psi2.used()) {
    invalid("kernel-limit needs a psi2 grid or a psi1 sweep");
  }
  if (cmd == "simulate" || cmd == "compare") {
    if (!c.lambda.used() && !c.lambda_t.used()) invalid(cmd + " needs lambda grids");
    if (c.sim.d < 1 || c.sim.n < 1 || c.sim.N < 1) invalid("sim sizes must be positive");
    if (c.sim.N <= c.sim.n) invalid("simulation requires N > n");
    if (c.sim.replicates < 2) invalid("sim.replicates must be at least 2");
  }
  if (cmd == "powerlaw" && c.powerlaw.input.empty()) invalid("powerlaw needs an input CSV");
  if (cmd == "logdet-check") {
    if (c.logdet.d.empty() || c.logdet.u.empty() || c.logdet.lambda.empty()) {
      invalid("logdet-check needs d, u and lambda lists");
    }
    if (c.logdet.replicates < 1) invalid("logdet.replicates must be positive");
  }
}

}  // namespace rfu::cli
