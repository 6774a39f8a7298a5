#pragma once

// Projected gradient descent on the stacked-factor objective, with spectral
// initialization from the rescaled observed matrix and an observable
// stopping rule.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liftmc/core.hpp"
#include "liftmc/flops.hpp"
#include "liftmc/instance.hpp"
#include "liftmc/lifted.hpp"
#include "liftmc/observation.hpp"
#include "liftmc/svd.hpp"

namespace liftmc {

struct SolverConfig {
  Index r = 1;
  double eta = 0.4;      // step constant, scaled by ||Z0||^2 at run time
  double lambda = 0.5;   // balance-regularizer weight
  long max_iters = 2000;
  double tol_rel_obs = 1e-6;  // stop when observed rel. residual falls below
  bool use_projection = true;
  std::uint64_t seed = 0;
  std::optional<double> mu_override;  // row-norm bound parameter for real data
  // When truth is available, also log distance/relative error along the
  // trace (costs roughly one extra gradient per logged iteration).
  bool trace_truth = true;
};

enum class SolveStatus { converged, max_iters, diverged };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max-iters";
    default: return "diverged";
  }
}

struct TraceRecord {
  long iter = 0;
  double objective = kNaN;
  double rel_obs = kNaN;   // ||masked residual|| / ||masked truth||
  double rel_error = kNaN; // ||Xhat - Xstar||_F / ||Xstar||_F (needs truth)
  double dist = kNaN;      // factor distance to the lifted truth
  double seconds = 0.0;
};

struct SolveReport {
  long iterations = 0;
  std::vector<TraceRecord> trace;
  SolveStatus status = SolveStatus::max_iters;
  FactorZ z;  // final stacked factor; Xhat = Zu * Zv^T is implicit
  double final_rel_obs = kNaN;
  double final_rel_error = kNaN;
  double final_dist = kNaN;
  std::uint64_t flops_per_iter = 0;
  double norm_z0 = 0.0;
  double theta = kInf;
  long regularized_rows = 0;  // rows that needed a ridge fallback (ALS only)
};

struct InitResult {
  FactorZ z0;       // lifted truncated decomposition of the rescaled mask
  FactorZ z1;       // z0 clipped onto the feasible set
  double norm_z0 = 0.0;
  double theta = kInf;
};

// Rank-r decomposition of (1/p_hat) * (observed matrix, zeros elsewhere),
// lifted to a stacked factor, then clipped row-wise with radius
// theta = sqrt(2 mu r / min(n1,n2)) * ||Z0||.
inline InitResult spectral_init(const ObservationSet& obs, Index r,
                                std::uint64_t seed, double mu,
                                bool use_projection = true) {
  require(r >= 1 && r <= std::min(obs.n1(), obs.n2()),
          "spectral_init: invalid rank");
  require(mu >= 1.0, "spectral_init: mu must be >= 1");
  SparseCooOperator op{obs.n1(),
                       obs.n2(),
                       obs.m(),
                       obs.rows().data(),
                       obs.cols().data(),
                       obs.vals().data(),
                       1.0 / obs.p_hat()};
  const SvdResult svd = randomized_rank_r_svd(op, r, seed);
  InitResult out;
  out.z0 = lift(svd);
  out.norm_z0 = factor_spectral_norm(out.z0.data);
  if (use_projection && out.norm_z0 > 0.0) {
    out.theta = std::sqrt(2.0 * mu * static_cast<double>(r) /
                          static_cast<double>(std::min(obs.n1(), obs.n2()))) *
                out.norm_z0;
    out.z1 = project_C(out.z0, out.theta);
  } else {
    out.theta = kInf;
    out.z1 = out.z0;
  }
  return out;
}

// One projected update Z <- clip(Z - eta_scaled * grad f(Z)).
inline FactorZ gd_step(const FactorZ& z, const ObservationSet& obs,
                       const ModelParams& params, double eta_scaled) {
  FactorZ g = gradient(z, obs, params);
  FactorZ next = z;
  next.data -= eta_scaled * g.data;
  flop_counter().add(std::uint64_t(z.data.rows()) * z.r);
  if (params.clip_radius != kInf) next = project_C(next, params.clip_radius);
  return next;
}

namespace detail {

// ||Zu Zv^T - Xstar||_F^2 evaluated through r x r Grams, never densifying:
// tr(Gu Gv) - 2 tr((Zu^T U) S (V^T Zv)) + sum(S^2).
inline double full_error_sq(const FactorZ& z, const LowRankInstance& inst) {
  Mat gu = z.zu().transpose() * z.zu();
  Mat gv = z.zv().transpose() * z.zv();
  Mat a1 = z.zu().transpose() * inst.Ustar;
  Mat a2 = inst.Vstar.transpose() * z.zv();
  flop_counter().add(2 * std::uint64_t(z.data.rows()) * z.r * z.r +
                     std::uint64_t(z.n1 + z.n2) * z.r * inst.r);
  const double xhat_sq = (gu * gv).trace();
  const double cross = (a1 * inst.sigma_star.asDiagonal() * a2).trace();
  const double xstar_sq = inst.sigma_star.squaredNorm();
  flop_counter().add(2 * std::uint64_t(z.r) * z.r * z.r +
                     std::uint64_t(z.r) * z.r + z.r);
  return std::max(0.0, xhat_sq - 2.0 * cross + xstar_sq);
}

}  // namespace detail

inline double relative_full_error(const FactorZ& z,
                                  const LowRankInstance& inst) {
  const double denom = inst.frob_norm();
  return std::sqrt(detail::full_error_sq(z, inst)) / denom;
}

inline SolveReport solve(const ObservationSet& obs, const SolverConfig& cfg,
                         const LowRankInstance* truth = nullptr) {
  require(cfg.eta > 0.0, "solve: eta must be positive");
  require(cfg.max_iters >= 1, "solve: max_iters must be >= 1");
  require(cfg.tol_rel_obs > 0.0, "solve: tol_rel_obs must be positive");
  require(cfg.lambda >= 0.0, "solve: lambda must be nonnegative");

  double mu = 1.0;
  if (cfg.mu_override) {
    mu = *cfg.mu_override;
  } else if (truth) {
    mu = truth->mu;
  } else if (cfg.use_projection) {
    throw std::invalid_argument(
        "solve: projection needs a row-norm bound; provide ground truth or "
        "mu_override (or disable projection)");
  }

  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  InitResult init = spectral_init(obs, cfg.r, cfg.seed, std::max(mu, 1.0),
                                  cfg.use_projection);
  ModelParams params{cfg.lambda, obs.p_hat(), init.theta};

  SolveReport rep;
  rep.norm_z0 = init.norm_z0;
  rep.theta = init.theta;
  rep.z = init.z1;

  std::optional<FactorZ> zstar;
  if (truth && cfg.trace_truth) zstar = truth->lifted_truth();

  const double denom = obs.masked_norm();
  const double eta_scaled =
      init.norm_z0 > 0.0 ? cfg.eta / (init.norm_z0 * init.norm_z0) : 0.0;

  std::vector<double> resid;
  double f0 = kNaN;
  std::uint64_t iter_mark = 0;
  for (long k = 0;; ++k) {
    if (k == 1) iter_mark = flop_counter().madds;
    if (k == 2) rep.flops_per_iter = flop_counter().madds - iter_mark;

    const double ss = detail::eval_residuals(rep.z, obs, resid);
    const Mat gap = detail::gram_gap(rep.z);
    const double obj = detail::objective_from_parts(ss, gap, params);
    const double rel_obs =
        denom > 0.0 ? std::sqrt(ss) / denom : std::sqrt(ss);
    if (k == 0) f0 = obj;

    const bool record = (k <= 10000) || (k % 10 == 0);
    const bool stop_converged = rel_obs <= cfg.tol_rel_obs;
    const bool stop_diverged = !std::isfinite(obj) || obj > 1e3 * f0;
    const bool stop_max = k == cfg.max_iters;
    if (record || stop_converged || stop_diverged || stop_max) {
      TraceRecord tr;
      tr.iter = k;
      tr.objective = obj;
      tr.rel_obs = rel_obs;
      if (truth && cfg.trace_truth) {
        tr.rel_error = relative_full_error(rep.z, *truth);
        tr.dist = procrustes_align(rep.z.data, zstar->data).dist;
      }
      tr.seconds = elapsed();
      rep.trace.push_back(tr);
    }

    if (stop_converged || stop_diverged || stop_max) {
      rep.iterations = k;
      rep.status = stop_converged  ? SolveStatus::converged
                   : stop_diverged ? SolveStatus::diverged
                                   : SolveStatus::max_iters;
      rep.final_rel_obs = rel_obs;
      break;
    }

    RowMat grad = detail::gradient_from_parts(rep.z, obs, resid, gap, params);
    rep.z.data -= eta_scaled * grad;
    flop_counter().add(std::uint64_t(rep.z.data.rows()) * rep.z.r);
    if (cfg.use_projection) rep.z = project_C(rep.z, init.theta);
  }

  if (truth) {
    rep.final_rel_error = relative_full_error(rep.z, *truth);
    rep.final_dist = distance(rep.z, truth->lifted_truth());
  }
  return rep;
}

}  // namespace liftmc
