// Command-line harness for the lifted matrix-completion library.
//
//   liftmc gen    synthesize a low-rank instance and an observation set
//   liftmc solve  run a solver on saved observations
//   liftmc bench  run an experiment described by a key=value config file
//   liftmc check  report initialization quality and the curvature diagnostic
//
// Exit codes: 0 success, 1 usage or input-format error, 2 runtime failure
// (divergence, unreadable/unwritable files, numerical breakdown).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "liftmc/liftmc.hpp"

namespace {

namespace fs = std::filesystem;
using liftmc::Index;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

liftmc::ObservationSet sample_with_budget(const liftmc::LowRankInstance& inst,
                                          std::optional<Index> m,
                                          std::optional<double> p,
                                          std::optional<double> m_over_nr,
                                          std::uint64_t seed) {
  const int given = int(m.has_value()) + int(p.has_value()) +
                    int(m_over_nr.has_value());
  if (given != 1) {
    throw std::invalid_argument(
        "give exactly one of --m, --p, --m-over-nr");
  }
  if (p) return liftmc::sample_bernoulli(inst.n1, inst.n2, *p, inst, seed);
  Index count = 0;
  if (m) {
    count = *m;
  } else {
    const double nr =
        static_cast<double>(std::max(inst.n1, inst.n2)) * inst.r;
    count = static_cast<Index>(std::llround(*m_over_nr * nr));
  }
  count = std::min<Index>(std::max<Index>(count, 1), inst.n1 * inst.n2);
  return liftmc::sample_uniform(inst.n1, inst.n2, count, inst, seed);
}

void write_trace_csv(const std::string& path, const std::string& solver,
                     const liftmc::SolveReport& rep) {
  std::ofstream out(path);
  if (!out) throw liftmc::IoError("cannot write " + path);
  out << liftmc::kConvergenceHeader << "\n";
  for (const auto& tr : rep.trace) {
    out << solver << "," << tr.iter << ","
        << liftmc::detail::format_g17(tr.objective) << ","
        << liftmc::detail::format_g17(tr.rel_obs) << ","
        << liftmc::detail::format_g17(tr.rel_error) << ","
        << liftmc::detail::format_g17(tr.dist) << ","
        << liftmc::detail::format_g17(tr.seconds) << "\n";
  }
  if (!out) throw liftmc::IoError("write failed for " + path);
}

int run_gen(const std::string& out_dir, Index n1, Index n2, Index rank,
            double kappa, std::uint64_t seed, std::optional<Index> m,
            std::optional<double> p, std::optional<double> m_over_nr) {
  const auto inst = liftmc::generate_instance(n1, n2, rank, kappa, seed);
  const auto obs = sample_with_budget(inst, m, p, m_over_nr, seed + 1);
  fs::create_directories(out_dir);
  liftmc::write_instance(inst, join_path(out_dir, "instance.txt"));
  liftmc::write_matrix_market(obs, join_path(out_dir, "observations.mm"));
  std::printf("wrote %s and %s: n1=%lld n2=%lld r=%lld m=%lld p_hat=%.6g\n",
              join_path(out_dir, "instance.txt").c_str(),
              join_path(out_dir, "observations.mm").c_str(),
              static_cast<long long>(n1), static_cast<long long>(n2),
              static_cast<long long>(rank), static_cast<long long>(obs.m()),
              obs.p_hat());
  return 0;
}

int run_solve(const std::string& obs_path, const std::string& inst_path,
              const std::string& out_dir, std::string solver,
              std::optional<Index> rank, double eta, double lambda,
              std::optional<double> step, long max_iters, double tol,
              std::uint64_t seed, std::optional<double> mu,
              bool no_projection) {
  const liftmc::ObservationSet obs = liftmc::read_matrix_market(obs_path);
  std::optional<liftmc::LowRankInstance> truth;
  if (!inst_path.empty()) truth = liftmc::read_instance(inst_path);
  Index r = 0;
  if (rank) {
    r = *rank;
  } else if (truth) {
    r = truth->r;
  } else {
    throw std::invalid_argument("--rank is required without --instance");
  }

  liftmc::SolveReport rep;
  if (solver == "gd") {
    liftmc::SolverConfig cfg;
    cfg.r = r;
    cfg.eta = eta;
    cfg.lambda = lambda;
    cfg.max_iters = max_iters;
    cfg.tol_rel_obs = tol;
    cfg.use_projection = !no_projection;
    cfg.seed = seed;
    cfg.mu_override = mu;
    rep = liftmc::solve(obs, cfg, truth ? &*truth : nullptr);
  } else if (solver == "svp" || solver == "altmin") {
    liftmc::BaselineConfig cfg;
    cfg.r = r;
    cfg.step = step;
    cfg.max_iters = max_iters;
    cfg.tol_rel_obs = tol;
    cfg.seed = seed;
    rep = solver == "svp"
              ? liftmc::svp_solve(obs, cfg, truth ? &*truth : nullptr)
              : liftmc::altmin_solve(obs, cfg, truth ? &*truth : nullptr);
  } else {
    throw std::invalid_argument("unknown solver '" + solver + "'");
  }

  fs::create_directories(out_dir);
  liftmc::write_dense_matrix_market(liftmc::Mat(rep.z.zu()),
                                    join_path(out_dir, "zu.mm"));
  liftmc::write_dense_matrix_market(liftmc::Mat(rep.z.zv()),
                                    join_path(out_dir, "zv.mm"));
  write_trace_csv(join_path(out_dir, "trace.csv"), solver, rep);

  std::printf("solver=%s status=%s iterations=%ld rel_obs=%.6e",
              solver.c_str(), liftmc::to_string(rep.status).c_str(),
              rep.iterations, rep.final_rel_obs);
  if (truth) std::printf(" rel_error=%.6e", rep.final_rel_error);
  std::printf("\n");
  return rep.status == liftmc::SolveStatus::diverged ? 2 : 0;
}

int run_bench(const std::string& config_path, const std::string& out_override,
              std::optional<std::uint64_t> seed) {
  auto spec = liftmc::parse_experiment_config_file(config_path);
  if (seed) spec.seed = *seed;
  const std::string path =
      out_override.empty() ? spec.out : out_override;
  if (!path.empty()) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  }
  const bool ok = liftmc::run_experiment(spec, out_override);
  std::printf("bench wrote %s: %s\n", path.c_str(),
              ok ? "ok" : "solver diverged");
  return ok ? 0 : 2;
}

int run_check(const std::string& obs_path, const std::string& inst_path,
              std::optional<Index> rank, std::uint64_t seed) {
  const liftmc::ObservationSet obs = liftmc::read_matrix_market(obs_path);
  const auto inst = liftmc::read_instance(inst_path);
  const Index r = rank.value_or(inst.r);
  const auto init = liftmc::spectral_init(obs, r, seed, inst.mu);
  const auto zstar = inst.lifted_truth();
  const double d0 = liftmc::distance(init.z0, zstar);
  const double d1 = liftmc::distance(init.z1, zstar);
  const double ball = 0.25 * std::sqrt(inst.sigma_r());
  liftmc::ModelParams params{0.5, obs.p_hat(), init.theta};
  const auto rc =
      liftmc::rc_diagnostic(init.z1, zstar, obs, params, inst.spectrum());
  std::printf("observations: n1=%lld n2=%lld m=%lld p_hat=%.6g\n",
              static_cast<long long>(obs.n1()),
              static_cast<long long>(obs.n2()),
              static_cast<long long>(obs.m()), obs.p_hat());
  std::printf("instance: r=%lld kappa=%.6g mu=%.6g sigma1=%.6g sigmar=%.6g\n",
              static_cast<long long>(inst.r), inst.kappa, inst.mu,
              inst.sigma1(), inst.sigma_r());
  std::printf("init: norm_z0=%.6g theta=%.6g dist_raw=%.6e dist_clipped=%.6e"
              " ball=%.6e inside_ball=%s\n",
              init.norm_z0, init.theta, d0, d1, ball,
              d1 <= ball ? "yes" : "no");
  std::printf("curvature: lhs=%.6e curvature_term=%.6e gradient_term=%.6e"
              " satisfied=%s\n",
              rc.lhs, rc.curvature_term, rc.gradient_term,
              rc.satisfied ? "yes" : "no");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rectangular matrix completion via a lifted factored"
               " gradient method, with truncation and alternating"
               " least-squares baselines"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand(
      "gen", "Synthesize a random low-rank instance and observations");
  Index g_n1 = 500, g_n2 = 500, g_rank = 10;
  double g_kappa = 1.3;
  std::uint64_t g_seed = 0;
  std::optional<Index> g_m;
  std::optional<double> g_p, g_mnr;
  std::string g_out = ".";
  gen->add_option("--n1", g_n1, "Rows")->capture_default_str();
  gen->add_option("--n2", g_n2, "Columns")->capture_default_str();
  gen->add_option("--rank", g_rank, "Target rank")->capture_default_str();
  gen->add_option("--kappa", g_kappa, "Condition number of the spectrum")
      ->capture_default_str();
  gen->add_option("--seed", g_seed, "Master seed")->capture_default_str();
  gen->add_option("--m", g_m, "Observation count (uniform without"
                              " replacement)");
  gen->add_option("--p", g_p, "Observation probability (independent"
                              " per entry)");
  gen->add_option("--m-over-nr", g_mnr,
                  "Observation count as a multiple of max(n1,n2)*rank");
  gen->add_option("--out-dir", g_out, "Output directory")
      ->capture_default_str();

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "Run a solver on saved"
                                            " observations");
  std::string s_obs, s_inst, s_solver = "gd", s_out = ".";
  std::optional<Index> s_rank;
  double s_eta = 0.4, s_lambda = 0.5, s_tol = 1e-6;
  std::optional<double> s_step, s_mu;
  long s_max_iters = 2000;
  std::uint64_t s_seed = 0;
  bool s_noproj = false;
  solve->add_option("--obs", s_obs, "Observation file (matrix market)")
      ->required();
  solve->add_option("--instance", s_inst,
                    "Instance file; enables error metrics against the truth");
  solve->add_option("--solver", s_solver, "gd, svp, or altmin")
      ->capture_default_str();
  solve->add_option("--rank", s_rank,
                    "Factor rank (defaults to the instance rank)");
  solve->add_option("--eta", s_eta,
                    "Step constant, scaled by the squared spectral norm of"
                    " the initializer (gd)")
      ->capture_default_str();
  solve->add_option("--lambda", s_lambda, "Balance-regularizer weight (gd)")
      ->capture_default_str();
  solve->add_option("--step", s_step,
                    "Step on the rescaled masked residual (svp); default is"
                    " the observed fraction, i.e. a unit per-entry step");
  solve->add_option("--max-iters", s_max_iters, "Iteration cap")
      ->capture_default_str();
  solve->add_option("--tol", s_tol,
                    "Stop when the relative observed residual falls below")
      ->capture_default_str();
  solve->add_option("--seed", s_seed, "Solver seed")->capture_default_str();
  solve->add_option("--mu", s_mu,
                    "Row-norm bound parameter when no instance file is"
                    " given (gd projection)");
  solve->add_flag("--no-projection", s_noproj,
                  "Disable the per-row clipping step (gd)");
  solve->add_option("--out-dir", s_out,
                    "Directory for zu.mm, zv.mm, trace.csv")
      ->capture_default_str();

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Run an experiment config");
  std::string b_config, b_out;
  std::optional<std::uint64_t> b_seed;
  bench->add_option("--config", b_config, "key=value experiment description")
      ->required();
  bench->add_option("--out", b_out, "Override the config's output CSV path");
  bench->add_option("--seed", b_seed, "Override the config's master seed");

  // ---- check ----
  auto* check = app.add_subcommand(
      "check", "Report initialization quality and the curvature diagnostic");
  std::string c_obs, c_inst;
  std::optional<Index> c_rank;
  std::uint64_t c_seed = 0;
  check->add_option("--obs", c_obs, "Observation file (matrix market)")
      ->required();
  check->add_option("--instance", c_inst, "Instance file (ground truth)")
      ->required();
  check->add_option("--rank", c_rank,
                    "Factor rank (defaults to the instance rank)");
  check->add_option("--seed", c_seed, "Initializer seed")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (gen->parsed()) {
      return run_gen(g_out, g_n1, g_n2, g_rank, g_kappa, g_seed, g_m, g_p,
                     g_mnr);
    }
    if (solve->parsed()) {
      return run_solve(s_obs, s_inst, s_out, s_solver, s_rank, s_eta,
                       s_lambda, s_step, s_max_iters, s_tol, s_seed, s_mu,
                       s_noproj);
    }
    if (bench->parsed()) return run_bench(b_config, b_out, b_seed);
    if (check->parsed()) return run_check(c_obs, c_inst, c_rank, c_seed);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const liftmc::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
