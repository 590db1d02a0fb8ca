#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fragchoice/cell_pdmp.hpp"
#include "fragchoice/csv_io.hpp"
#include "fragchoice/fixed_point.hpp"
#include "fragchoice/frag_sim.hpp"
#include "fragchoice/gamma.hpp"
#include "fragchoice/linear_evolution.hpp"
#include "fragchoice/measures.hpp"
#include "fragchoice/rules.hpp"
#include "fragchoice/util.hpp"
#include "fragchoice/verification.hpp"

namespace fragchoice::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Flat key=value experiment configuration. Every option is registered once;
// values given in a --config file fill in anything not passed on the command
// line, and the effective configuration is echoed next to the outputs so a
// run can be reproduced byte-for-byte from its own echo.
// ---------------------------------------------------------------------------
class ParamSet {
 public:
  explicit ParamSet(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void add(CLI::App& app, const std::string& flag, std::string& var,
           const std::string& desc) {
    reg(app.add_option(flag, var, desc), key_of(flag),
        [&var](const std::string& s) { var = s; },
        [&var] { return var; });
  }

  void add(CLI::App& app, const std::string& flag, double& var,
           const std::string& desc) {
    reg(app.add_option(flag, var, desc), key_of(flag),
        [&var](const std::string& s) { var = std::stod(s); },
        [&var] { return fmt_double(var); });
  }

  void add(CLI::App& app, const std::string& flag, std::int64_t& var,
           const std::string& desc) {
    reg(app.add_option(flag, var, desc), key_of(flag),
        [&var](const std::string& s) { var = std::stoll(s); },
        [&var] { return std::to_string(var); });
  }

  void add(CLI::App& app, const std::string& flag, std::uint64_t& var,
           const std::string& desc) {
    reg(app.add_option(flag, var, desc), key_of(flag),
        [&var](const std::string& s) { var = std::stoull(s); },
        [&var] { return std::to_string(var); });
  }

  void add(CLI::App& app, const std::string& flag, int& var,
           const std::string& desc) {
    reg(app.add_option(flag, var, desc), key_of(flag),
        [&var](const std::string& s) { var = std::stoi(s); },
        [&var] { return std::to_string(var); });
  }

  void add_flag(CLI::App& app, const std::string& flag, bool& var,
                const std::string& desc) {
    reg(app.add_flag(flag, var, desc), key_of(flag),
        [&var](const std::string& s) { var = (s == "1" || s == "true"); },
        [&var] { return var ? std::string("1") : std::string("0"); });
  }

  // Fill unset options from a key=value file.
  void apply_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("bad config line '" + line + "'");
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto sub = kv.find("subcommand");
    if (sub != kv.end() && sub->second != subcommand_)
      throw std::invalid_argument("config is for subcommand '" + sub->second +
                                  "', not '" + subcommand_ + "'");
    for (auto& e : entries_) {
      if (e.opt->count() > 0) continue;  // explicit flags win
      auto it = kv.find(e.key);
      if (it != kv.end()) e.set(it->second);
    }
  }

  void write_echo(const fs::path& path) const {
    std::ofstream out(path);
    out << "subcommand=" << subcommand_ << "\n";
    for (const auto& e : entries_) out << e.key << "=" << e.get() << "\n";
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };

  static std::string key_of(const std::string& flag) {
    auto pos = flag.find_last_of('-');
    return flag.substr(pos + 1);
  }

  void reg(CLI::Option* opt, std::string key,
           std::function<void(const std::string&)> set,
           std::function<std::string()> get) {
    entries_.push_back({opt, std::move(key), std::move(set), std::move(get)});
  }

  std::string subcommand_;
  std::vector<Entry> entries_;
};

inline std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

// Default solve grid: min-type rules have power tails that need a much
// larger range; the truncation mass is reported, not hidden.
inline std::vector<double> default_grid_for(const ChoiceRule& rule) {
  return rule.psi(1.0) < 1e-9 ? log_grid(1e-4, 1e6, 4096)
                              : log_grid(1e-4, 50.0, 4096);
}

struct RateSetup {
  RateFunction rate;
  std::string note;
};

// `const:c`, `table:PATH` (extrapolation enabled for process use), or
// `psi:RULE` (solves the rule first).
inline RateSetup make_rate(const std::string& descriptor,
                           const std::string& grid_spec) {
  if (descriptor.rfind("psi:", 0) == 0) {
    auto rule = parse_rule(descriptor.substr(4));
    auto grid = grid_spec.empty() ? default_grid_for(rule) : parse_grid_spec(grid_spec);
    auto F = solve_psi_fixed_point(rule, grid);
    return {rate_from_solution(rule, F),
            "rate = psi(F) from solved " + descriptor.substr(4)};
  }
  return {parse_rate(descriptor, nullptr, nullptr, true), "rate = " + descriptor};
}

struct Summary {
  std::vector<std::string> lines;
  bool checks_enabled = false;
  int checks_failed = 0;

  void metric(const std::string& key, double v) {
    lines.push_back(key + ": " + fmt_double(v));
  }
  void note(const std::string& s) { lines.push_back(s); }
  void check(const std::string& name, bool pass, double metric, double bound) {
    if (!checks_enabled) return;
    lines.push_back(std::string(pass ? "PASS " : "FAIL ") + name + " (" +
                    fmt_double(metric) + " vs " + fmt_double(bound) + ")");
    if (!pass) ++checks_failed;
  }
  void write(const fs::path& path) const {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << "\n";
  }
  void print() const {
    for (const auto& l : lines) std::cout << l << "\n";
  }
};

// ---------------------------------------------------------------------------
// frag: event-driven fragmentation runs.
// ---------------------------------------------------------------------------
inline int run_frag(ParamSet& params, const std::string& config,
                    std::string& rule_desc, std::int64_t& steps,
                    std::string& alphas_csv, std::string& cuts_csv,
                    std::string& mode, std::uint64_t& seed, int& snapshots,
                    std::string& out, bool& check) {
  if (!config.empty()) params.apply_config(config);
  if (rule_desc.empty())
    throw std::invalid_argument("frag: --rule is required (see --help)");
  if (out.empty()) throw std::invalid_argument("frag: --out DIR is required");
  auto rule = parse_rule(rule_desc);
  auto alphas = parse_list(alphas_csv);
  auto cuts = parse_list(cuts_csv);
  auto m = mode == "poisson" ? IntervalConfig::Mode::poissonized
                             : IntervalConfig::Mode::discrete;
  if (mode != "poisson" && mode != "discrete")
    throw std::invalid_argument("frag: --mode must be discrete or poisson");

  fs::create_directories(out);
  params.write_echo(fs::path(out) / "config.echo");

  auto configuration = IntervalConfig::from_cuts(cuts, m);
  Rng rng(seed);
  auto schedule = geometric_schedule(steps, snapshots);
  auto stats = run(configuration, rule, steps, alphas, rng, schedule);

  {
    CsvWriter w(fs::path(out) / "equidistribution.csv", "step,alpha,frac");
    for (const auto& snap : stats.snapshots)
      for (std::size_t a = 0; a < alphas.size(); ++a)
        w.row(snap.step, alphas[a], snap.alpha_fractions[a]);
  }
  for (const auto& snap : stats.snapshots)
    write_cdf_csv(fs::path(out) / ("sizebiased_" + std::to_string(snap.step) + ".csv"),
                  snap.rescaled);

  Summary summary;
  summary.checks_enabled = check;
  summary.note("rule: " + rule_desc);
  summary.metric("steps", static_cast<double>(steps));
  summary.metric("intervals", static_cast<double>(configuration.interval_count()));
  summary.metric("total_length_error", std::abs(configuration.total_length() - 1.0));
  double worst = 0.0;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    double frac = configuration.alpha_fraction(a);
    summary.metric("frac_alpha_" + fmt_double(alphas[a]), frac);
    worst = std::max(worst, std::abs(frac - alphas[a]));
  }
  summary.metric("worst_alpha_deviation", worst);
  summary.check("length conservation", std::abs(configuration.total_length() - 1.0) < 1e-9,
                std::abs(configuration.total_length() - 1.0), 1e-9);
  double equi_bound = std::max(0.01, 4.0 / std::sqrt(static_cast<double>(steps)));
  summary.check("equidistribution", worst <= equi_bound, worst, equi_bound);
  summary.write(fs::path(out) / "summary.txt");
  summary.print();
  return summary.checks_failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// solve: fixed point of a selection rule, or stationary law of a rate.
// ---------------------------------------------------------------------------
inline int run_solve(ParamSet& params, const std::string& config,
                     std::string& rule_desc, std::string& rate_desc,
                     std::string& grid_spec, double& tol, std::string& out,
                     bool& check) {
  if (!config.empty()) params.apply_config(config);
  if (rule_desc.empty() && rate_desc.empty())
    throw std::invalid_argument("solve: --rule or --rate is required (see --help)");

  Summary summary;
  summary.checks_enabled = check;
  GridCDF F;
  if (!rule_desc.empty()) {
    auto rule = parse_rule(rule_desc);
    auto grid = grid_spec.empty() ? default_grid_for(rule) : parse_grid_spec(grid_spec);
    SolveReport rep;
    F = solve_psi_fixed_point(rule, grid, tol, 500, &rep);
    summary.note("solved fixed point for rule " + rule_desc);
    summary.metric("iterations", rep.iterations);
    summary.metric("Z", rep.Z);
    summary.metric("candy_norm", candy_norm(F));
    summary.metric("tail_mass", F.tail_mass());
    double resid = fixed_point_residual(F, rule);
    summary.metric("residual", resid);
    if (rule.kind() == RuleKind::uniform) {
      double worst = 0.0;
      for (std::size_t i = 0; i < F.size(); ++i)
        worst = std::max(worst, std::abs(F.values()[i] -
                                         (1.0 - (1.0 + F.grid()[i]) *
                                                    std::exp(-F.grid()[i]))));
      summary.metric("sup_error_vs_closed_form", worst);
      summary.check("closed form", worst <= 1e-5, worst, 1e-5);
    }
    summary.check("candy norm", std::abs(candy_norm(F) - 1.0) <= 1e-4,
                  std::abs(candy_norm(F) - 1.0), 1e-4);
    summary.check("residual", resid <= 5e-3, resid, 5e-3);
  } else {
    auto setup = make_rate(rate_desc, grid_spec);
    auto grid = grid_spec.empty() ? log_grid(1e-4, 50.0, 4096)
                                  : parse_grid_spec(grid_spec);
    auto law = stationary_law(setup.rate, grid);
    F = law.cdf;
    summary.note(setup.note);
    summary.metric("Z", law.Z);
    summary.metric("tail_mass", F.tail_mass());
    double closure = std::abs(F.values().back() + F.tail_mass() - 1.0);
    summary.check("mass closure", closure <= 1e-6, closure, 1e-6);
  }

  if (!out.empty()) {
    fs::path out_path(out);
    fs::path stem = out_path;
    if (out_path.extension() == ".csv") {
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      stem.replace_extension();
    } else {
      fs::create_directories(out_path);
      out_path /= "F.csv";
      stem = fs::path(out) / "F";
    }
    write_cdf_csv(out_path, F);
    params.write_echo(fs::path(stem.string() + ".config.echo"));
    summary.write(fs::path(stem.string() + ".summary.txt"));
  }
  summary.print();
  return summary.checks_failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// cell: PDMP ensembles.
// ---------------------------------------------------------------------------
inline int run_cell(ParamSet& params, const std::string& config,
                    std::string& rate_desc, std::string& grid_spec, double& x0,
                    std::string& init, double& tmax, std::int64_t& paths,
                    std::uint64_t& seed, int& threads, std::string& horizons_csv,
                    std::string& out, bool& check) {
  if (!config.empty()) params.apply_config(config);
  if (rate_desc.empty()) throw std::invalid_argument("cell: --rate is required");
  if (out.empty()) throw std::invalid_argument("cell: --out DIR is required");
  if (!(tmax > 0.0) || paths < 1)
    throw std::invalid_argument("cell: need --tmax > 0 and --paths >= 1");

  auto setup = make_rate(rate_desc, grid_spec);
  auto grid = grid_spec.empty() ? log_grid(1e-4, 50.0, 4096)
                                : parse_grid_spec(grid_spec);
  auto law = stationary_law(setup.rate, grid);

  std::vector<double> horizons = parse_list(horizons_csv);
  if (horizons.empty())
    for (int j = 1; j <= 8; ++j) horizons.push_back(tmax * j / 8.0);

  InitSampler sampler;
  if (init == "point")
    sampler = point_init(x0);
  else if (init == "stationary")
    sampler = cdf_init(law.cdf);
  else
    throw std::invalid_argument("cell: --init must be point or stationary");

  fs::create_directories(out);
  params.write_echo(fs::path(out) / "config.echo");

  auto res = marginal_ensemble(setup.rate, sampler, horizons, paths, seed, {},
                               threads);

  {
    CsvWriter w(fs::path(out) / "marginal_T.csv", "x");
    for (double v : res.values.back()) w.row(v);
  }
  std::vector<double> tvs;
  {
    CsvWriter w(fs::path(out) / "ergodicity.csv", "t,tv_estimate");
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      double tv = dist_tv(res.values[h], law.cdf);
      tvs.push_back(tv);
      w.row(horizons[h], tv);
    }
  }
  {
    CsvWriter w(fs::path(out) / "paths_meta.csv", "path,absorbed,exploded,jumps");
    for (std::int64_t i = 0; i < paths; ++i) {
      auto idx = static_cast<std::size_t>(i);
      w.row(i, static_cast<int>(res.absorbed_flags[idx]),
            static_cast<int>(res.exploded_flags[idx]),
            static_cast<std::int64_t>(res.jump_counts[idx]));
    }
  }

  Summary summary;
  summary.checks_enabled = check;
  summary.note(setup.note + ", init " + init);
  summary.metric("paths", static_cast<double>(paths));
  summary.metric("absorbed", static_cast<double>(res.absorbed));
  summary.metric("exploded", static_cast<double>(res.exploded));
  summary.metric("tv_final", tvs.back());
  // binned-TV noise floor at 200 bins
  double floor200 = 0.399 * std::sqrt(200.0 / static_cast<double>(paths));
  summary.check("ergodic at tmax", tvs.back() <= std::max(0.05, 3.0 * floor200),
                tvs.back(), std::max(0.05, 3.0 * floor200));
  summary.write(fs::path(out) / "summary.txt");
  summary.print();
  return summary.checks_failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// evolve: deterministic CDF evolution.
// ---------------------------------------------------------------------------
inline int run_evolve(ParamSet& params, const std::string& config,
                      std::string& rate_desc, std::string& init, double& tmax,
                      std::string& dt_spec, std::string& grid_spec,
                      std::string& out, bool& check) {
  if (!config.empty()) params.apply_config(config);
  if (rate_desc.empty()) throw std::invalid_argument("evolve: --rate is required");
  if (out.empty()) throw std::invalid_argument("evolve: --out DIR is required");

  auto setup = make_rate(rate_desc, grid_spec);
  auto grid = grid_spec.empty() ? log_grid(1e-4, 50.0, 4096)
                                : parse_grid_spec(grid_spec);

  GridCDF F0;
  if (init.rfind("gamma:", 0) == 0) {
    std::string spec = init.substr(6);
    std::replace(spec.begin(), spec.end(), ':', ',');
    auto parts = parse_list(spec);
    if (parts.size() != 2)
      throw std::invalid_argument("evolve: --init gamma:SHAPE:RATE");
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      f[i] = gamma_cdf(parts[0], parts[1], grid[i]);
    F0 = GridCDF(grid, std::move(f));
  } else if (init.rfind("table:", 0) == 0) {
    auto raw = read_cdf_csv(init.substr(6));
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = raw.value(grid[i]);
    F0 = GridCDF(grid, std::move(f));
  } else {
    throw std::invalid_argument("evolve: --init must be gamma:A:B or table:PATH");
  }

  EvolveOptions opt;
  if (dt_spec != "auto") opt.dt = std::stod(dt_spec);
  double probe_dt = opt.dt > 0.0 ? opt.dt : std::log(grid[1] / grid[0]);
  auto total_steps = static_cast<std::int64_t>(std::ceil(tmax / probe_dt));
  opt.snapshot_stride = std::max<std::int64_t>(1, total_steps / 8);

  fs::create_directories(out);
  params.write_echo(fs::path(out) / "config.echo");

  auto traj = evolve_rate(setup.rate, F0, tmax, opt);

  bool have_pi = true;
  StationaryLaw law;
  try {
    law = stationary_law(setup.rate, grid);
  } catch (const numerical_error&) {
    have_pi = false;
  }

  {
    CsvWriter w(fs::path(out) / "trajectory.csv", "t,x,F");
    for (const auto& st : traj.states)
      for (std::size_t i = 0; i < grid.size(); ++i)
        w.row(st.t, grid[i], st.F.values()[i]);
  }
  double tv_final = std::numeric_limits<double>::quiet_NaN();
  {
    CsvWriter w(fs::path(out) / "diagnostics.csv", "t,tv_to_pi,mass_drift");
    for (const auto& st : traj.states) {
      double tv = have_pi ? dist_tv(st.F, law.cdf)
                          : std::numeric_limits<double>::quiet_NaN();
      tv_final = tv;
      w.row(st.t, tv, st.mass_drift);
    }
  }

  Summary summary;
  summary.checks_enabled = check;
  summary.note(setup.note + ", init " + init);
  summary.metric("dt", traj.dt);
  summary.metric("mass_drift_final", traj.states.back().mass_drift);
  summary.metric("projected_mass", traj.projected_mass);
  if (have_pi) summary.metric("tv_to_pi_final", tv_final);
  summary.check("mass conservation",
                traj.states.back().mass_drift <= F0.tail_mass() + 5.0 * traj.dt,
                traj.states.back().mass_drift, F0.tail_mass() + 5.0 * traj.dt);
  summary.check("monotone projection quiet",
                traj.projected_mass <= 1e-6 * std::max(1.0, tmax),
                traj.projected_mass, 1e-6 * std::max(1.0, tmax));
  summary.write(fs::path(out) / "summary.txt");
  summary.print();
  return summary.checks_failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify: acceptance checks.
// ---------------------------------------------------------------------------
inline int run_verify(const std::string& suite, std::uint64_t seed, int threads) {
  if (suite != "fast" && suite != "full")
    throw std::invalid_argument("verify: suite must be 'fast' or 'full'");
  int failed = 0;
  auto progress = [&](const CheckResult& r) {
    std::printf("%s  %-36s metric=%-11.4g bound=%-9.4g [%6.1f s]  %s\n",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.metric, r.threshold,
                r.seconds, r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  };
  run_acceptance(suite == "full", seed, threads, progress);
  std::printf(failed ? "%d check(s) failed\n" : "all checks passed\n", failed);
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
inline int run(int argc, const char* const* argv) {
  CLI::App app{"interval fragmentations with choice: simulation and numerics"};
  app.require_subcommand(1);

  // shared option storage
  std::string config, out, rule_desc, rate_desc, grid_spec;
  std::uint64_t seed = 1;
  int threads = 0;
  bool check = false;

  // frag
  auto* frag = app.add_subcommand("frag", "run the fragmentation point process");
  ParamSet frag_params("frag");
  std::int64_t steps = 100000;
  std::string alphas_csv = "0.1,0.25,0.5,0.75,0.9";
  std::string cuts_csv;
  std::string mode = "discrete";
  int snapshots = 32;
  frag_params.add(*frag, "--rule", rule_desc, "selection rule descriptor");
  frag_params.add(*frag, "--steps", steps, "number of split events");
  frag_params.add(*frag, "--alphas", alphas_csv, "comma list of alpha levels");
  frag_params.add(*frag, "--cuts", cuts_csv, "initial cut points in (0,1)");
  frag_params.add(*frag, "--mode", mode, "discrete | poisson");
  frag_params.add(*frag, "--snapshots", snapshots, "snapshot count (geometric)");
  frag_params.add(*frag, "--seed", seed, "master seed");
  frag_params.add(*frag, "--out", out, "output directory");
  frag_params.add_flag(*frag, "--check", check, "evaluate pass/fail thresholds");
  frag->add_option("--config", config, "key=value config file");

  // solve
  auto* solve = app.add_subcommand("solve", "solve the limiting size-biased law");
  ParamSet solve_params("solve");
  double tol = 1e-10;
  solve_params.add(*solve, "--rule", rule_desc, "selection rule descriptor");
  solve_params.add(*solve, "--rate", rate_desc, "rate descriptor (stationary law)");
  solve_params.add(*solve, "--grid", grid_spec, "x0:x1:n log grid");
  solve_params.add(*solve, "--tol", tol, "fixed-point tolerance");
  solve_params.add(*solve, "--out", out, "output CSV (or directory)");
  solve_params.add_flag(*solve, "--check", check, "evaluate pass/fail thresholds");
  solve->add_option("--config", config, "key=value config file");

  // cell
  auto* cell = app.add_subcommand("cell", "simulate the cell process");
  ParamSet cell_params("cell");
  double x0 = 1.0, tmax = 10.0;
  std::int64_t paths = 10000;
  std::string init = "point", horizons_csv;
  cell_params.add(*cell, "--rate", rate_desc, "rate descriptor");
  cell_params.add(*cell, "--grid", grid_spec, "grid for rho/pi tables");
  cell_params.add(*cell, "--x0", x0, "starting point");
  cell_params.add(*cell, "--init", init, "point | stationary");
  cell_params.add(*cell, "--tmax", tmax, "final horizon");
  cell_params.add(*cell, "--horizons", horizons_csv, "explicit horizon list");
  cell_params.add(*cell, "--paths", paths, "ensemble size");
  cell_params.add(*cell, "--seed", seed, "master seed");
  cell_params.add(*cell, "--threads", threads, "worker cap (0 = hardware)");
  cell_params.add(*cell, "--out", out, "output directory");
  cell_params.add_flag(*cell, "--check", check, "evaluate pass/fail thresholds");
  cell->add_option("--config", config, "key=value config file");

  // evolve
  auto* evolve = app.add_subcommand("evolve", "deterministic CDF evolution");
  ParamSet evolve_params("evolve");
  std::string init_desc = "gamma:2:2", dt_spec = "auto";
  evolve_params.add(*evolve, "--rate", rate_desc, "rate descriptor");
  evolve_params.add(*evolve, "--init", init_desc, "gamma:A:B | table:PATH");
  evolve_params.add(*evolve, "--tmax", tmax, "final time");
  evolve_params.add(*evolve, "--dt", dt_spec, "step (auto = one log cell)");
  evolve_params.add(*evolve, "--grid", grid_spec, "x0:x1:n log grid");
  evolve_params.add(*evolve, "--out", out, "output directory");
  evolve_params.add_flag(*evolve, "--check", check, "evaluate pass/fail thresholds");
  evolve->add_option("--config", config, "key=value config file");

  // verify
  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  std::string suite;
  verify->add_option("suite", suite, "fast | full")->required();
  verify->add_option("--seed", seed, "master seed");
  verify->add_option("--threads", threads, "worker cap (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (frag->parsed())
      return run_frag(frag_params, config, rule_desc, steps, alphas_csv,
                      cuts_csv, mode, seed, snapshots, out, check);
    if (solve->parsed())
      return run_solve(solve_params, config, rule_desc, rate_desc, grid_spec,
                       tol, out, check);
    if (cell->parsed())
      return run_cell(cell_params, config, rate_desc, grid_spec, x0, init, tmax,
                      paths, seed, threads, horizons_csv, out, check);
    if (evolve->parsed())
      return run_evolve(evolve_params, config, rate_desc, init_desc, tmax,
                        dt_spec, grid_spec, out, check);
    if (verify->parsed()) return run_verify(suite, seed, threads);
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace fragchoice::cli
