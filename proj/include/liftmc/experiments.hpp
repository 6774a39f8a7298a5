#pragma once

// Experiment drivers: recovery-probability sweeps over the observation
// budget, per-iteration convergence traces for all solvers on a shared
// instance, and wall-clock/flop scaling runs. Configuration is a flat
// key=value file; results are CSV with fixed, documented column sets.
// Every trial's randomness derives from (master seed, cell index, trial
// index) only, so repeated runs are byte-identical apart from time-valued
// columns.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "liftmc/baselines.hpp"
#include "liftmc/core.hpp"
#include "liftmc/instance.hpp"
#include "liftmc/matrix_market.hpp"
#include "liftmc/rng.hpp"
#include "liftmc/solver.hpp"

namespace liftmc {

struct ExperimentSpec {
  enum class Kind { phase_transition, convergence, runtime };
  Kind kind = Kind::phase_transition;

  // Dimension pairs are zipped (n1_grid[i] with n2_grid[i]) and crossed
  // with the rank grid and the observation-budget grid.
  std::vector<Index> n1_grid{500};
  std::vector<Index> n2_grid{500};
  std::vector<Index> r_grid{10};

  // Exactly one of these describes the observation budget; when all are
  // empty a kind-dependent default applies (multiplier sweep for the phase
  // study, a well-sampled single budget m = 2 n r ln n otherwise).
  std::vector<double> m_over_nr_grid;  // multiples of max(n1,n2)*r
  std::vector<Index> m_grid;
  std::vector<double> p_grid;

  long trials = 20;
  std::vector<std::string> solvers;  // default: gd (phase) or all three
  double success_threshold = 1e-6;
  std::optional<double> tol;  // stopping tolerance; default 1e-7 / 1e-9
  long max_iters = 2000;
  double eta = 0.4;
  double lambda = 0.5;
  std::optional<double> svp_step;
  double kappa = 1.3;
  bool use_projection = true;
  std::uint64_t seed = 0;
  std::string out;
};

namespace detail {

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& key) {
  std::vector<T> out;
  for (const auto& tok : split_csv_list(s)) {
    std::istringstream ss(tok);
    T v{};
    ss >> v;
    if (ss.fail() || !ss.eof()) {
      throw std::invalid_argument("config: bad value '" + tok + "' for key '" +
                                  key + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw std::invalid_argument("config: empty list for key '" + key + "'");
  }
  return out;
}

template <class T>
T parse_scalar(const std::string& s, const std::string& key) {
  std::istringstream ss(s);
  T v{};
  ss >> v;
  if (ss.fail()) {
    throw std::invalid_argument("config: bad value '" + s + "' for key '" +
                                key + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw std::invalid_argument("config: bad flag value '" + s + "' for key '" +
                              key + "'");
}

}  // namespace detail

inline ExperimentSpec parse_experiment_config(std::istream& in) {
  ExperimentSpec spec;
  bool have_solvers = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key=value at line " +
                                  std::to_string(lineno));
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    const auto ke = key.find_last_not_of(" \t");
    key = key.substr(0, ke + 1);
    const auto vb = val.find_first_not_of(" \t");
    val = vb == std::string::npos ? "" : val.substr(vb);

    if (key == "kind") {
      if (val == "phase-transition") {
        spec.kind = ExperimentSpec::Kind::phase_transition;
      } else if (val == "convergence") {
        spec.kind = ExperimentSpec::Kind::convergence;
      } else if (val == "runtime") {
        spec.kind = ExperimentSpec::Kind::runtime;
      } else {
        throw std::invalid_argument("config: unknown kind '" + val + "'");
      }
    } else if (key == "n1") {
      spec.n1_grid = detail::parse_list<Index>(val, key);
    } else if (key == "n2") {
      spec.n2_grid = detail::parse_list<Index>(val, key);
    } else if (key == "r") {
      spec.r_grid = detail::parse_list<Index>(val, key);
    } else if (key == "m_over_nr") {
      spec.m_over_nr_grid = detail::parse_list<double>(val, key);
    } else if (key == "m") {
      spec.m_grid = detail::parse_list<Index>(val, key);
    } else if (key == "p") {
      spec.p_grid = detail::parse_list<double>(val, key);
    } else if (key == "trials") {
      spec.trials = detail::parse_scalar<long>(val, key);
    } else if (key == "solvers") {
      spec.solvers = detail::split_csv_list(val);
      have_solvers = true;
    } else if (key == "success_threshold") {
      spec.success_threshold = detail::parse_scalar<double>(val, key);
    } else if (key == "tol") {
      spec.tol = detail::parse_scalar<double>(val, key);
    } else if (key == "max_iters") {
      spec.max_iters = detail::parse_scalar<long>(val, key);
    } else if (key == "eta") {
      spec.eta = detail::parse_scalar<double>(val, key);
    } else if (key == "lambda") {
      spec.lambda = detail::parse_scalar<double>(val, key);
    } else if (key == "svp_step") {
      spec.svp_step = detail::parse_scalar<double>(val, key);
    } else if (key == "kappa") {
      spec.kappa = detail::parse_scalar<double>(val, key);
    } else if (key == "projection") {
      spec.use_projection = detail::parse_bool(val, key);
    } else if (key == "seed") {
      spec.seed = detail::parse_scalar<std::uint64_t>(val, key);
    } else if (key == "out") {
      spec.out = val;
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                  std::to_string(lineno));
    }
  }

  require(!spec.n1_grid.empty() && spec.n1_grid.size() == spec.n2_grid.size(),
          "config: n1 and n2 lists must be nonempty and equally long");
  require(!spec.r_grid.empty(), "config: rank grid must be nonempty");
  require(spec.trials >= 1, "config: trials must be >= 1");
  const int budget_forms = (!spec.m_over_nr_grid.empty() ? 1 : 0) +
                           (!spec.m_grid.empty() ? 1 : 0) +
                           (!spec.p_grid.empty() ? 1 : 0);
  require(budget_forms <= 1,
          "config: give at most one of m, p, m_over_nr");
  if (!have_solvers) {
    spec.solvers =
        spec.kind == ExperimentSpec::Kind::phase_transition
            ? std::vector<std::string>{"gd"}
            : std::vector<std::string>{"gd", "svp", "altmin"};
  }
  for (const auto& s : spec.solvers) {
    require(s == "gd" || s == "svp" || s == "altmin",
            "config: unknown solver '" + s + "'");
  }
  return spec;
}

inline ExperimentSpec parse_experiment_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  return parse_experiment_config(in);
}

namespace detail {

inline double resolved_tol(const ExperimentSpec& spec) {
  if (spec.tol) return *spec.tol;
  return spec.kind == ExperimentSpec::Kind::phase_transition ? 1e-7 : 1e-9;
}

// Observation budgets for one (n1, n2, r) combination.
inline std::vector<Index> m_values(const ExperimentSpec& spec, Index n1,
                                   Index n2, Index r) {
  const double total = static_cast<double>(n1) * static_cast<double>(n2);
  const double nr = static_cast<double>(std::max(n1, n2)) * r;
  std::vector<Index> out;
  const auto push = [&](double m) {
    const double clamped = std::min(std::max(m, 1.0), total);
    out.push_back(static_cast<Index>(std::llround(clamped)));
  };
  if (!spec.m_grid.empty()) {
    for (Index m : spec.m_grid) push(static_cast<double>(m));
  } else if (!spec.p_grid.empty()) {
    for (double p : spec.p_grid) push(p * total);
  } else if (!spec.m_over_nr_grid.empty()) {
    for (double f : spec.m_over_nr_grid) push(f * nr);
  } else if (spec.kind == ExperimentSpec::Kind::phase_transition) {
    for (double f = 1.5; f <= 6.01; f += 0.5) push(f * nr);
  } else {
    push(2.0 * nr * std::log(static_cast<double>(std::max(n1, n2))));
  }
  return out;
}

struct TrialSeeds {
  std::uint64_t instance, omega, solver;
};

inline TrialSeeds trial_seeds(std::uint64_t master, std::uint64_t cell,
                              std::uint64_t trial) {
  const std::uint64_t s = derive_seed(master, cell, trial);
  return {splitmix64(s ^ 0x11ULL), splitmix64(s ^ 0x22ULL),
          splitmix64(s ^ 0x33ULL)};
}

inline SolveReport dispatch_solve(const std::string& solver,
                                  const ObservationSet& obs,
                                  const ExperimentSpec& spec, Index r,
                                  std::uint64_t seed, bool trace_truth,
                                  const LowRankInstance& inst) {
  if (solver == "gd") {
    SolverConfig cfg;
    cfg.r = r;
    cfg.eta = spec.eta;
    cfg.lambda = spec.lambda;
    cfg.max_iters = spec.max_iters;
    cfg.tol_rel_obs = resolved_tol(spec);
    cfg.use_projection = spec.use_projection;
    cfg.seed = seed;
    cfg.trace_truth = trace_truth;
    return solve(obs, cfg, &inst);
  }
  BaselineConfig cfg;
  cfg.r = r;
  cfg.step = spec.svp_step;
  cfg.max_iters = spec.max_iters;
  cfg.tol_rel_obs = resolved_tol(spec);
  cfg.seed = seed;
  cfg.trace_truth = trace_truth;
  return solver == "svp" ? svp_solve(obs, cfg, &inst)
                         : altmin_solve(obs, cfg, &inst);
}

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file " + path);
  return out;
}

inline std::string csv_num(double v) { return format_g17(v); }

}  // namespace detail

struct PhaseRow {
  Index n1, n2, r, m;
  long trials, successes;
  double mean_iters, mean_seconds;
};

inline const char* kPhaseHeader =
    "n1,n2,r,m,trials,successes,mean_iters,mean_seconds";
inline const char* kConvergenceHeader =
    "solver,iter,objective,rel_obs_residual,rel_error,distance,seconds";
inline const char* kConvergenceSummaryHeader =
    "solver,iterations,status,final_rel_error,final_rel_obs,rho_fit,r2_fit";
inline const char* kRuntimeHeader =
    "solver,n1,n2,r,m,seconds_to_tol,iterations,flops_per_iter";

// Empirical recovery probability over the observation-budget grid; one CSV
// row per grid cell.
inline std::vector<PhaseRow> run_phase_transition(const ExperimentSpec& spec,
                                                  const std::string& out_path) {
  auto out = detail::open_csv(out_path);
  out << kPhaseHeader << "\n";
  const std::string solver = spec.solvers.empty() ? "gd" : spec.solvers[0];
  std::vector<PhaseRow> rows;
  std::uint64_t cell = 0;
  for (std::size_t d = 0; d < spec.n1_grid.size(); ++d) {
    const Index n1 = spec.n1_grid[d], n2 = spec.n2_grid[d];
    for (Index r : spec.r_grid) {
      for (Index m : detail::m_values(spec, n1, n2, r)) {
        long successes = 0;
        double iter_sum = 0.0, sec_sum = 0.0;
        for (long t = 0; t < spec.trials; ++t) {
          const auto seeds = detail::trial_seeds(spec.seed, cell, t);
          const auto inst =
              generate_instance(n1, n2, r, spec.kappa, seeds.instance);
          const auto obs = sample_uniform(n1, n2, m, inst, seeds.omega);
          const auto t0 = std::chrono::steady_clock::now();
          const auto rep = detail::dispatch_solve(solver, obs, spec, r,
                                                  seeds.solver, false, inst);
          sec_sum += std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
          iter_sum += static_cast<double>(rep.iterations);
          if (rep.final_rel_error <= spec.success_threshold) ++successes;
        }
        PhaseRow row{n1,
                     n2,
                     r,
                     m,
                     spec.trials,
                     successes,
                     iter_sum / spec.trials,
                     sec_sum / spec.trials};
        rows.push_back(row);
        out << row.n1 << "," << row.n2 << "," << row.r << "," << row.m << ","
            << row.trials << "," << row.successes << ","
            << detail::csv_num(row.mean_iters) << ","
            << detail::csv_num(row.mean_seconds) << "\n";
        ++cell;
      }
    }
  }
  if (!out) throw IoError("write failed for " + out_path);
  return rows;
}

struct GeometricFit {
  double rho = kNaN;  // per-iteration contraction factor
  double r2 = kNaN;   // goodness of the log-linear fit
  long start_iter = -1;
  long points = 0;
};

// Least-squares fit of log(dist) = a + k log(rho) over the trace tail
// starting at the first entry with dist <= enter_threshold.
inline GeometricFit fit_geometric_tail(const std::vector<TraceRecord>& trace,
                                       double enter_threshold) {
  GeometricFit fit;
  std::vector<std::pair<double, double>> pts;
  bool entered = false;
  for (const auto& tr : trace) {
    if (!std::isfinite(tr.dist) || tr.dist <= 0.0) continue;
    if (!entered && tr.dist <= enter_threshold) {
      entered = true;
      fit.start_iter = tr.iter;
    }
    if (entered) pts.emplace_back(static_cast<double>(tr.iter),
                                  std::log(tr.dist));
  }
  fit.points = static_cast<long>(pts.size());
  if (pts.size() < 3) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double n = static_cast<double>(pts.size());
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (vxx <= 0.0 || vyy <= 0.0) return fit;
  const double slope = vxy / vxx;
  fit.rho = std::exp(slope);
  fit.r2 = (vxy * vxy) / (vxx * vyy);
  return fit;
}

struct ConvergenceResult {
  std::string solver;
  SolveReport report;
  GeometricFit fit;  // populated for the gradient solver
};

// Per-iteration traces for each requested solver on one shared
// (instance, observations) pair; also writes a summary CSV next to the
// trace file (suffix `_summary.csv`).
inline std::vector<ConvergenceResult> run_convergence(
    const ExperimentSpec& spec, const std::string& out_path) {
  const Index n1 = spec.n1_grid[0], n2 = spec.n2_grid[0];
  const Index r = spec.r_grid[0];
  const Index m = detail::m_values(spec, n1, n2, r)[0];
  const auto seeds = detail::trial_seeds(spec.seed, 0, 0);
  const auto inst = generate_instance(n1, n2, r, spec.kappa, seeds.instance);
  const auto obs = sample_uniform(n1, n2, m, inst, seeds.omega);

  auto out = detail::open_csv(out_path);
  out << kConvergenceHeader << "\n";
  std::vector<ConvergenceResult> results;
  for (const auto& solver : spec.solvers) {
    ConvergenceResult res;
    res.solver = solver;
    res.report =
        detail::dispatch_solve(solver, obs, spec, r, seeds.solver, true, inst);
    if (solver == "gd") {
      res.fit = fit_geometric_tail(res.report.trace,
                                   0.25 * std::sqrt(inst.sigma_r()));
    }
    for (const auto& tr : res.report.trace) {
      out << solver << "," << tr.iter << "," << detail::csv_num(tr.objective)
          << "," << detail::csv_num(tr.rel_obs) << ","
          << detail::csv_num(tr.rel_error) << "," << detail::csv_num(tr.dist)
          << "," << detail::csv_num(tr.seconds) << "\n";
    }
    results.push_back(std::move(res));
  }
  if (!out) throw IoError("write failed for " + out_path);

  std::string summary_path = out_path;
  const auto dot = summary_path.rfind(".csv");
  if (dot != std::string::npos && dot == summary_path.size() - 4) {
    summary_path = summary_path.substr(0, dot);
  }
  summary_path += "_summary.csv";
  auto sum = detail::open_csv(summary_path);
  sum << kConvergenceSummaryHeader << "\n";
  for (const auto& res : results) {
    sum << res.solver << "," << res.report.iterations << ","
        << to_string(res.report.status) << ","
        << detail::csv_num(res.report.final_rel_error) << ","
        << detail::csv_num(res.report.final_rel_obs) << ","
        << detail::csv_num(res.fit.rho) << "," << detail::csv_num(res.fit.r2)
        << "\n";
  }
  if (!sum) throw IoError("write failed for " + summary_path);
  return results;
}

struct RuntimeRow {
  std::string solver;
  Index n1, n2, r, m;
  double seconds_to_tol;
  long iterations;
  std::uint64_t flops_per_iter;
  SolveStatus status;
};

// Wall-clock and instrumented flops per solver across the size grid (one
// trial per cell; timing would be polluted by per-iteration truth metrics,
// so those are disabled here).
inline std::vector<RuntimeRow> run_runtime(const ExperimentSpec& spec,
                                           const std::string& out_path) {
  auto out = detail::open_csv(out_path);
  out << kRuntimeHeader << "\n";
  std::vector<RuntimeRow> rows;
  std::uint64_t cell = 0;
  for (std::size_t d = 0; d < spec.n1_grid.size(); ++d) {
    const Index n1 = spec.n1_grid[d], n2 = spec.n2_grid[d];
    for (Index r : spec.r_grid) {
      for (Index m : detail::m_values(spec, n1, n2, r)) {
        const auto seeds = detail::trial_seeds(spec.seed, cell, 0);
        const auto inst =
            generate_instance(n1, n2, r, spec.kappa, seeds.instance);
        const auto obs = sample_uniform(n1, n2, m, inst, seeds.omega);
        for (const auto& solver : spec.solvers) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto rep = detail::dispatch_solve(solver, obs, spec, r,
                                                  seeds.solver, false, inst);
          const double secs = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
          RuntimeRow row{solver,          n1, n2, r, m, secs,
                         rep.iterations,  rep.flops_per_iter, rep.status};
          rows.push_back(row);
          out << row.solver << "," << row.n1 << "," << row.n2 << "," << row.r
              << "," << row.m << "," << detail::csv_num(row.seconds_to_tol)
              << "," << row.iterations << "," << row.flops_per_iter << "\n";
        }
        ++cell;
      }
    }
  }
  if (!out) throw IoError("write failed for " + out_path);
  return rows;
}

// Runs the configured experiment, writing to `spec.out` (or the
// override). Returns the exit-worthy status: false only if a solver
// diverged somewhere.
inline bool run_experiment(const ExperimentSpec& spec,
                           const std::string& out_override = "") {
  const std::string path = out_override.empty() ? spec.out : out_override;
  require(!path.empty(), "experiment: no output path given");
  switch (spec.kind) {
    case ExperimentSpec::Kind::phase_transition:
      run_phase_transition(spec, path);
      return true;
    case ExperimentSpec::Kind::convergence: {
      const auto results = run_convergence(spec, path);
      for (const auto& res : results) {
        if (res.report.status == SolveStatus::diverged) return false;
      }
      return true;
    }
    case ExperimentSpec::Kind::runtime: {
      const auto rows = run_runtime(spec, path);
      for (const auto& row : rows) {
        if (row.status == SolveStatus::diverged) return false;
      }
      return true;
    }
  }
  return true;
}

// The determinism contract excludes wall-clock values: this helper returns
// the file's text with any time-valued columns removed, for byte-level
// comparison of repeated runs.
inline std::string csv_without_time_columns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) return "";
  const auto headers = detail::split_csv_list(line);
  std::vector<bool> keep(headers.size(), true);
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (headers[i] == "mean_seconds" || headers[i] == "seconds" ||
        headers[i] == "seconds_to_tol") {
      keep[i] = false;
    }
  }
  std::ostringstream out;
  const auto emit = [&](const std::string& row) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ss(row);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    bool first = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i < keep.size() && !keep[i]) continue;
      if (!first) out << ",";
      out << fields[i];
      first = false;
    }
    out << "\n";
  };
  emit(line);
  while (std::getline(in, line)) emit(line);
  return out.str();
}

}  // namespace liftmc
