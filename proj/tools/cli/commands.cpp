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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "rfu/analysis.hpp"
#include "rfu/asymptotics.hpp"
#include "rfu/errors.hpp"
#include "rfu/simulator.hpp"

namespace rfu::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLimitProbeU = 1e8;

std::string num(double x) { return fmt::format("{:.17g}", x); }

class CsvWriter {
 public:
  CsvWriter(const RunConfig& c, const std::string& family, const std::vector<std::string>& header)
      : path_((std::filesystem::path(c.output_path) / (c.figure_id + "_" + family + ".csv"))
                  .string()) {
    std::filesystem::create_directories(c.output_path);
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorKind::ConfigInvalid, "cannot write " + path_);
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

Error with_context(const Error& e, const std::string& what) {
  return Error(e.kind(), what + ": " + e.what(), e.value());
}

/// Evaluates f(i) for i in [0, n) on up to thread_cap() workers. The first
/// failure (by index) is rethrown after all workers finish.
template <typename T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> fail(n);
  const std::size_t workers = std::clamp<std::size_t>(thread_cap(), 1, std::max<std::size_t>(n, 1));
  auto work = [&](std::size_t t) {
    for (std::size_t i = t; i < n; i += workers) {
      try {
        out[i] = f(i);
      } catch (...) {
        fail[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t);
  }
  for (const auto& e : fail) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ModelParams model(const ParamSpec& p) {
  return ModelParams::create(p.psi1, p.psi2, p.f1_sq, p.tau_sq, activation_preset(p.activation));
}

std::vector<double> merged(const GridSpec& a, const GridSpec& b) {
  std::vector<double> v;
  if (a.used()) v = a.values();
  if (b.used()) {
    const auto w = b.values();
    v.insert(v.end(), w.begin(), w.end());
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Lagrangian point at unscaled lambda, or nullopt outside the admissible
/// region.
std::optional<LagrangianPoint> point_or_empty(Family f, double lambda, const ModelParams& p) {
  try {
    return lagrangian_point(f, lambda / p.mustar_sq(), p);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::OutsideAdmissibleRegion) return std::nullopt;
    throw with_context(e, fmt::format("{} at lambda = {}", to_string(f), num(lambda)));
  }
}

std::vector<std::string> cmd_theory(const RunConfig& c) {
  const ModelParams p = model(c.params);
  const MinNormResult mn = risk_min_norm(p);
  const auto lambdas = merged(c.lambda, c.lambda_t);
  using Pair = std::pair<std::optional<LagrangianPoint>, std::optional<LagrangianPoint>>;
  const auto pts = parallel_map<Pair>(lambdas.size(), [&](std::size_t i) {
    return Pair{point_or_empty(Family::U, lambdas[i], p),
                point_or_empty(Family::T, lambdas[i], p)};
  });

  std::vector<std::string> files;
  CsvWriter w(c, "theory", {"lambda", "lambda_bar", "ubar", "a_u", "tbar", "a_t", "risk", "norm"});
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto& [u, t] = pts[i];
    w.row({num(lambdas[i]), num(lambdas[i] / p.mustar_sq()), num(u ? u->value : kNaN),
           num(u ? u->norm_sq : kNaN), num(t ? t->value : kNaN), num(t ? t->norm_sq : kNaN),
           num(mn.risk), num(mn.norm_sq)});
  }
  files.push_back(w.path());

  if (c.diagnostics) {
    CsvWriter dw(c, "diagnostics",
                 {"family", "lambda", "m1_u0", "m2_u0", "m1_uinf_re", "m1_uinf_im", "m2_uinf_re",
                  "m2_uinf_im", "chi1", "chi2", "chi3", "chi4", "closest_rational",
                  "rational_discrepancy", "flagged", "finite_difference", "richardson_gap"});
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      for (Family f : {Family::U, Family::T}) {
        const auto& pt = f == Family::U ? pts[i].first : pts[i].second;
        if (!pt) continue;
        const double lb = lambdas[i] / p.mustar_sq();
        const auto fam = f == Family::U ? EquationFamily::ubar(lb) : EquationFamily::tbar(lb);
        const auto far = solve_at(cd(0.0, kLimitProbeU), fam, p);
        const auto& x = pt->chi;
        dw.row({to_string(f), num(lambdas[i]), num(x.m1_bar), num(x.m2_bar), num(far.m1.real()),
                num(far.m1.imag()), num(far.m2.real()), num(far.m2.imag()), num(x.chi1),
                num(x.chi2), num(x.chi3), num(x.chi4), x.closest_rational,
                num(x.rational_discrepancy), x.discrepancy_flagged ? "1" : "0",
                num(x.finite_difference), num(x.richardson_gap)});
      }
    }
    files.push_back(dw.path());
  }
  return files;
}

SimSetup setup_of(const RunConfig& c) {
  SimSetup s;
  s.d = c.sim.d;
  s.N = c.sim.N;
  s.n = c.sim.n;
  s.replicates = c.sim.replicates;
  s.base_seed = c.sim.base_seed;
  s.threads = thread_cap();
  return s;
}

ModelParams sim_model(const RunConfig& c) {
  ParamSpec ps = c.params;
  ps.psi1 = static_cast<double>(c.sim.N) / c.sim.d;
  ps.psi2 = static_cast<double>(c.sim.n) / c.sim.d;
  return model(ps);
}

std::vector<double> values_or_empty(const GridSpec& g) {
  return g.used() ? g.values() : std::vector<double>{};
}

ReplicateRun simulate(const RunConfig& c, std::vector<std::string>& files) {
  const ModelParams p = sim_model(c);
  const ReplicateRun run =
      replicate_run(setup_of(c), p, values_or_empty(c.lambda), values_or_empty(c.lambda_t));

  CsvWriter rw(c, "replicates",
               {"family", "lambda", "replicate", "seed", "feasible", "norm_sq", "value", "defect",
                "norm_excess"});
  for (const auto& r : run.rows) {
    rw.row({to_string(r.family), num(r.lambda), std::to_string(r.replicate),
            std::to_string(r.seed), r.feasible ? "1" : "0", num(r.feasible ? r.norm_sq : kNaN),
            num(r.feasible ? r.value : kNaN), num(r.feasible ? r.defect : kNaN),
            num(r.feasible ? r.norm_excess : kNaN)});
  }
  files.push_back(rw.path());

  CsvWriter sw(c, "stats",
               {"family", "lambda", "count", "skipped", "norm_mean", "norm_stderr", "value_mean",
                "value_stderr"});
  for (const auto& s : run.stats) {
    sw.row({to_string(s.family), num(s.lambda), std::to_string(s.count),
            std::to_string(s.skipped.size()), num(s.norm_sq.mean), num(s.norm_sq.stderr_),
            num(s.value.mean), num(s.value.stderr_)});
  }
  files.push_back(sw.path());
  return run;
}

std::vector<std::string> cmd_simulate(const RunConfig& c) {
  std::vector<std::string> files;
  simulate(c, files);
  return files;
}

std::vector<std::string> cmd_compare(const RunConfig& c) {
  std::vector<std::string> files;
  const ReplicateRun run = simulate(c, files);
  const ModelParams p = sim_model(c);

  std::map<SimFamily, std::vector<ReplicateStats>> by_family;
  for (const auto& s : run.stats) by_family[s.family].push_back(s);

  CsvWriter w(c, "compare",
              {"family", "lambda", "theory_norm", "sim_norm", "norm_stderr", "z_norm",
               "theory_value", "sim_value", "value_stderr", "z_value", "degenerate", "pass"});
  std::vector<Comparison> parts;
  for (SimFamily sf : {SimFamily::MinNorm, SimFamily::U, SimFamily::T}) {
    const auto& stats = by_family[sf];
    if (stats.empty()) continue;
    std::vector<TheoryPoint> theory;
    for (const auto& s : stats) {
      TheoryPoint tp;
      tp.lambda = s.lambda;
      if (sf == SimFamily::MinNorm) {
        const MinNormResult mn = risk_min_norm(p);
        tp.norm_sq = mn.norm_sq;
        tp.value = mn.risk;
      } else {
        const Family f = sf == SimFamily::U ? Family::U : Family::T;
        const auto pt = point_or_empty(f, s.lambda, p);
        if (!pt) {
          throw Error(ErrorKind::OutsideAdmissibleRegion,
                      fmt::format("{} at lambda = {}: outside the admissible region",
                                  to_string(f), num(s.lambda)),
                      s.lambda);
        }
        tp.norm_sq = pt->norm_sq;
        tp.value = pt->value + pt->lambda * pt->norm_sq;
      }
      theory.push_back(tp);
    }
    const Comparison cmp = compare_theory_sim(theory, stats);
    for (std::size_t i = 0; i < stats.size(); ++i) {
      const auto& r = cmp.rows[i];
      w.row({to_string(sf), num(r.lambda), num(theory[i].norm_sq), num(stats[i].norm_sq.mean),
             num(stats[i].norm_sq.stderr_), num(r.z_norm), num(theory[i].value),
             num(stats[i].value.mean), num(stats[i].value.stderr_), num(r.z_value),
             r.degenerate ? "1" : "0", r.pass ? "1" : "0"});
    }
    if (sf != SimFamily::MinNorm) parts.push_back(cmp);
  }
  files.push_back(w.path());
  std::cout << fmt::format("pass rate (U and T cells): {:.4f}\n", pooled_pass_rate(parts));
  return files;
}

KernelQuantity quantity_of(const std::string& s) {
  if (s == "ubar_alpha") return KernelQuantity::UBarAlpha;
  if (s == "tbar_alpha") return KernelQuantity::TBarAlpha;
  if (s == "risk") return KernelQuantity::Risk;
  return KernelQuantity::Norm;
}

struct Series {
  std::string name;
  KernelQuantity quantity;
  double power = 0.0;  // UAtLevel: level = psi2^power
  bool excess = false;
};

std::vector<std::string> cmd_kernel_limit(const RunConfig& c) {
  std::vector<Series> series;
  for (const auto& q : c.quantities) series.push_back({q, quantity_of(q), 0.0, q != "norm"});
  for (double pw : c.level_powers) {
    series.push_back({fmt::format("u_level_p{}", pw), KernelQuantity::UAtLevel, pw, false});
  }
  std::vector<double> taus = c.tau_sq_sweep;
  const bool sweep = !taus.empty();
  if (!sweep) taus.push_back(c.params.tau_sq);

  std::vector<std::string> files;
  for (double tau : taus) {
    ParamSpec ps = c.params;
    ps.tau_sq = tau;
    const ModelParams base = model(ps);
    const std::string suffix = sweep ? fmt::format("_tau{}", tau) : "";

    if (c.psi2.used()) {
      const auto psi2s = c.psi2.values();
      const std::size_t cells = series.size() * psi2s.size();
      const auto lim = parallel_map<KernelLimit>(cells, [&](std::size_t k) {
        const Series& s = series[k / psi2s.size()];
        const double psi2 = psi2s[k % psi2s.size()];
        KernelLimitOptions o;
        o.level = std::pow(psi2, s.power);
        try {
          return kernel_limit(s.quantity, psi2, c.alpha, base, o);
        } catch (const Error& e) {
          throw with_context(e, fmt::format("{} at psi2 = {}", s.name, num(psi2)));
        }
      });
      CsvWriter w(c, "kernel" + suffix,
                  {"series", "x", "value", "excess", "inv_psi1_coef", "relative_residual"});
      for (std::size_t k = 0; k < cells; ++k) {
        const Series& s = series[k / psi2s.size()];
        const auto& l = lim[k];
        w.row({s.name, num(psi2s[k % psi2s.size()]), num(l.value),
               num(s.excess ? l.value - tau : l.value), num(l.slope),
               num(l.relative_residual)});
      }
      files.push_back(w.path());
    }

    if (c.psi1.used()) {
      const auto psi1s = c.psi1.values();
      const double psi2 = c.params.psi2;
      const auto limits = parallel_map<double>(series.size(), [&](std::size_t k) {
        KernelLimitOptions o;
        o.level = std::pow(psi2, series[k].power);
        return kernel_limit(series[k].quantity, psi2, c.alpha, base, o).value;
      });
      const std::size_t cells = series.size() * psi1s.size();
      const auto vals = parallel_map<double>(cells, [&](std::size_t k) {
        const Series& s = series[k / psi1s.size()];
        const double psi1 = psi1s[k % psi1s.size()];
        try {
          return finite_quantity(s.quantity, psi1, psi2, c.alpha, base, std::pow(psi2, s.power));
        } catch (const Error& e) {
          throw with_context(e, fmt::format("{} at psi1 = {}", s.name, num(psi1)));
        }
      });
      CsvWriter w(c, "finite" + suffix, {"series", "x", "value", "limit", "delta"});
      for (std::size_t k = 0; k < cells; ++k) {
        const double lim = limits[k / psi1s.size()];
        w.row({series[k / psi1s.size()].name, num(psi1s[k % psi1s.size()]), num(vals[k]),
               num(lim), num(vals[k] - lim)});
      }
      files.push_back(w.path());
    }
  }
  return files;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::string> cmd_powerlaw(const RunConfig& c) {
  std::ifstream in(c.powerlaw.input);
  if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open " + c.powerlaw.input);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ConfigInvalid, "empty CSV " + c.powerlaw.input);
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto xi = column(c.powerlaw.x), yi = column(c.powerlaw.y), si = column("series");
  if (xi < 0 || yi < 0) {
    throw Error(ErrorKind::ConfigInvalid,
                "columns '" + c.powerlaw.x + "'/'" + c.powerlaw.y + "' not in " + c.powerlaw.input);
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<std::ptrdiff_t>(cells.size()) <= std::max({xi, yi, si})) {
      throw Error(ErrorKind::ConfigInvalid, "short row in " + c.powerlaw.input);
    }
    const std::string key = si >= 0 ? cells[si] : "all";
    if (!groups.count(key)) order.push_back(key);
    groups[key].emplace_back(std::stod(cells[xi]), std::stod(cells[yi]));
  }
  std::optional<std::pair<double, double>> window;
  if (c.powerlaw.window_max > 0.0) window = std::make_pair(c.powerlaw.window_min, c.powerlaw.window_max);

  CsvWriter w(c, "powerlaw",
              {"series", "slope", "intercept", "r_squared", "x_min", "x_max", "used", "excluded"});
  for (const auto& key : order) {
    // Fits the magnitude when a whole series is negative (deltas below the limit).
    auto pts = groups[key];
    if (std::all_of(pts.begin(), pts.end(), [](const auto& q) { return q.second < 0.0; })) {
      for (auto& q : pts) q.second = -q.second;
    }
    try {
      const PowerLawFit f = powerlaw_slope(pts, window);
      w.row({key, num(f.slope), num(f.intercept), num(f.r_squared), num(f.window.first),
             num(f.window.second), std::to_string(f.used), std::to_string(f.excluded)});
    } catch (const Error& e) {
      throw with_context(e, "series " + key);
    }
  }
  return {w.path()};
}

std::vector<std::string> cmd_logdet(const RunConfig& c) {
  const ModelParams p = model(c.params);
  struct Cell {
    int d;
    double u, lambda;
  };
  std::vector<Cell> cells;
  for (int d : c.logdet.d) {
    for (double u : c.logdet.u) {
      for (double l : c.logdet.lambda) cells.push_back({d, u, l});
    }
  }
  const int reps = c.logdet.replicates;
  using Row = std::vector<double>;
  const auto diffs = parallel_map<Row>(cells.size(), [&](std::size_t k) {
    const Cell& cell = cells[k];
    const QVector q = q_ubar(cell.lambda, p);
    const cd xi(0.0, cell.u);
    const cd g = g_value(solve_at(xi, EquationFamily::general(q), p), p);
    Row r{g.real(), g.imag()};
    for (int rep = 0; rep < reps; ++rep) {
      const std::uint64_t seed = c.sim.base_seed + rep;
      const int N = static_cast<int>(std::lround(p.psi1 * cell.d));
      const int n = static_cast<int>(std::lround(p.psi2 * cell.d));
      try {
        const cd G = empirical_log_det(sample_instance(cell.d, N, n, p, seed), q, xi);
        r.push_back(G.real());
        r.push_back(G.imag());
      } catch (const Error& e) {
        throw with_context(e, fmt::format("lambda = {}, seed {}", num(cell.lambda), seed));
      }
    }
    return r;
  });
  CsvWriter w(c, "logdet",
              {"d", "u", "lambda", "replicate", "seed", "G_d_re", "G_d_im", "g_re", "g_im", "abs_diff"});
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Row& r = diffs[k];
    const cd g(r[0], r[1]);
    for (int rep = 0; rep < reps; ++rep) {
      const cd G(r[2 + 2 * rep], r[3 + 2 * rep]);
      w.row({std::to_string(cells[k].d), num(cells[k].u), num(cells[k].lambda),
             std::to_string(rep), std::to_string(c.sim.base_seed + rep), num(G.real()),
             num(G.imag()), num(g.real()), num(g.imag()), num(std::abs(G - g))});
    }
  }
  return {w.path()};
}

}  // namespace

int thread_cap() {
  if (const char* env = std::getenv("RF_UNIFORM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<std::string> run(const RunConfig& config) {
  validate(config);
  const auto& cmd = config.command;
  if (cmd == "theory") return cmd_theory(config);
  if (cmd == "simulate") return cmd_simulate(config);
  if (cmd == "compare") return cmd_compare(config);
  if (cmd == "kernel-limit") return cmd_kernel_limit(config);
  if (cmd == "powerlaw") return cmd_powerlaw(config);
  return cmd_logdet(config);
}

}  // namespace rfu::cli
