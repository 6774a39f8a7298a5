#pragma once

// Reference solvers sharing the gradient solver's report schema:
//  - iterative hard thresholding in matrix space (rank-r truncation of a
//    masked-residual step), kept factored and matrix-free end to end;
//  - alternating least squares over the two factors, one exact r x r
//    normal-equation solve per row.

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "liftmc/core.hpp"
#include "liftmc/flops.hpp"
#include "liftmc/instance.hpp"
#include "liftmc/lifted.hpp"
#include "liftmc/observation.hpp"
#include "liftmc/solver.hpp"
#include "liftmc/svd.hpp"

namespace liftmc {

struct BaselineConfig {
  Index r = 1;
  // Step multiplying the (1/p_hat)-rescaled masked residual. Unset means
  // p_hat itself, i.e. a unit per-entry step, which is stable across
  // observation densities.
  std::optional<double> step;
  long max_iters = 2000;
  double tol_rel_obs = 1e-6;
  std::uint64_t seed = 0;
  bool trace_truth = true;
};

namespace detail {

template <class DerivedU, class DerivedV>
double full_error_sq_blocks(const Eigen::MatrixBase<DerivedU>& xu,
                            const Eigen::MatrixBase<DerivedV>& xv,
                            const LowRankInstance& inst) {
  Mat gu = xu.transpose() * xu;
  Mat gv = xv.transpose() * xv;
  Mat a1 = xu.transpose() * inst.Ustar;
  Mat a2 = inst.Vstar.transpose() * xv;
  flop_counter().add(2 * std::uint64_t(xu.rows() + xv.rows()) * xu.cols() *
                     xu.cols());
  const double xhat_sq = (gu * gv).trace();
  const double cross = (a1 * inst.sigma_star.asDiagonal() * a2).trace();
  flop_counter().add(2 * std::uint64_t(xu.cols()) * xu.cols() * xu.cols());
  return std::max(0.0,
                  xhat_sq - 2.0 * cross + inst.sigma_star.squaredNorm());
}

}  // namespace detail

// X^{k+1} = rank-r truncation of (X^k - step * (1/p_hat) * masked(X^k -
// Xstar)). X^k lives as (U, s, V); the truncation input is applied
// matrix-free as dense-factored plus sparse.
inline SolveReport svp_solve(const ObservationSet& obs,
                             const BaselineConfig& cfg,
                             const LowRankInstance* truth = nullptr) {
  require(cfg.r >= 1 && cfg.r <= std::min(obs.n1(), obs.n2()),
          "svp_solve: invalid rank");
  const double step = cfg.step.value_or(obs.p_hat());
  require(step > 0.0, "svp_solve: step must be positive");
  require(cfg.max_iters >= 1, "svp_solve: max_iters must be >= 1");

  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  const Index n1 = obs.n1(), n2 = obs.n2(), m = obs.m(), r = cfg.r;
  const double entry_step = step / obs.p_hat();
  const double denom = obs.masked_norm();

  RowMat a = RowMat::Zero(n1, r);  // U * diag(s)
  RowMat b = RowMat::Zero(n2, r);  // V
  SvdResult current{Mat::Zero(n1, r), Vec::Zero(r), Mat::Zero(n2, r)};

  SolveReport rep;
  rep.z = FactorZ(n1, n2, r);
  std::optional<FactorZ> zstar;
  if (truth && cfg.trace_truth) zstar = truth->lifted_truth();

  std::vector<double> resid(m);
  const Index* ri = obs.rows().data();
  const Index* ci = obs.cols().data();
  const double* xv = obs.vals().data();

  double f0 = kNaN;
  std::uint64_t iter_mark = 0;
  for (long k = 0;; ++k) {
    if (k == 1) iter_mark = flop_counter().madds;
    if (k == 2) rep.flops_per_iter = flop_counter().madds - iter_mark;

    double ss = 0.0;
    for (Index e = 0; e < m; ++e) {
      const double rv = a.row(ri[e]).dot(b.row(ci[e])) - xv[e];
      resid[e] = rv;
      ss += rv * rv;
    }
    flop_counter().add(std::uint64_t(m) * (r + 2));
    const double rel_obs = denom > 0.0 ? std::sqrt(ss) / denom : std::sqrt(ss);
    const double obj = ss / obs.p_hat();
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
        tr.rel_error =
            std::sqrt(detail::full_error_sq_blocks(a, b, *truth)) /
            truth->frob_norm();
        FactorZ zk = lift(current);
        tr.dist = procrustes_align(zk.data, zstar->data).dist;
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

    SparseCooOperator sparse{n1,          n2, m, ri, ci, resid.data(),
                             -entry_step};
    FactoredPlusSparseOperator op{a, b, sparse};
    current = randomized_rank_r_svd(
        op, r, splitmix64(cfg.seed ^ (0x5B7A000ULL + std::uint64_t(k))));
    a = current.U * current.sigma.asDiagonal();
    b = current.V;
    flop_counter().add(std::uint64_t(n1) * r);
  }

  rep.z = lift(current);
  if (truth) {
    rep.final_rel_error = relative_full_error(rep.z, *truth);
    rep.final_dist = distance(rep.z, truth->lifted_truth());
  }
  return rep;
}

// Alternating exact least squares on X = U V^T. One iteration = one half
// sweep (all rows of one factor). Rows with fewer observations than r are
// solved with a small ridge and counted in the report.
inline SolveReport altmin_solve(const ObservationSet& obs,
                                const BaselineConfig& cfg,
                                const LowRankInstance* truth = nullptr) {
  require(cfg.r >= 1 && cfg.r <= std::min(obs.n1(), obs.n2()),
          "altmin_solve: invalid rank");
  require(cfg.max_iters >= 1, "altmin_solve: max_iters must be >= 1");

  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  const Index n1 = obs.n1(), n2 = obs.n2(), m = obs.m(), r = cfg.r;
  const Index* ri = obs.rows().data();
  const Index* ci = obs.cols().data();
  const double* xv = obs.vals().data();

  // Per-row and per-column observation lists (CSR both ways).
  std::vector<std::vector<Index>> by_row(n1), by_col(n2);
  for (Index e = 0; e < m; ++e) {
    by_row[ri[e]].push_back(e);
    by_col[ci[e]].push_back(e);
  }

  InitResult init = spectral_init(obs, r, cfg.seed, 1.0, false);
  RowMat u = init.z0.zu();
  RowMat v = init.z0.zv();

  SolveReport rep;
  rep.norm_z0 = init.norm_z0;
  // No distance column for this solver: its factors are not balance-
  // normalized, so the stacked-factor distance would not vanish even at
  // exact recovery.

  const double denom = obs.masked_norm();

  // Exact minimization over one factor's row given the other factor.
  const auto solve_rows = [&](bool update_u) {
    const auto& lists = update_u ? by_row : by_col;
    RowMat& target = update_u ? u : v;
    const RowMat& other = update_u ? v : u;
    for (Index i = 0; i < static_cast<Index>(lists.size()); ++i) {
      const auto& entries = lists[i];
      if (entries.empty()) continue;  // unconstrained row: leave as is
      Mat mat = Mat::Zero(r, r);
      Vec rhs = Vec::Zero(r);
      for (Index e : entries) {
        const Index o = update_u ? ci[e] : ri[e];
        mat.selfadjointView<Eigen::Lower>().rankUpdate(
            other.row(o).transpose(), 1.0);
        rhs += xv[e] * other.row(o).transpose();
      }
      // LDLT below reads only the lower triangle, which is what rankUpdate
      // filled.
      flop_counter().add(std::uint64_t(entries.size()) * r * (r + 1));
      bool flagged = static_cast<Index>(entries.size()) < r;
      if (flagged) {
        mat.diagonal().array() += 1e-10 * (mat.trace() + 1.0);
      }
      Eigen::LDLT<Mat> ldlt(mat);
      Vec sol = ldlt.solve(rhs);
      if (ldlt.info() != Eigen::Success || !sol.allFinite()) {
        mat.diagonal().array() += 1e-10 * (mat.trace() + 1.0);
        sol = Eigen::LDLT<Mat>(mat).solve(rhs);
        flagged = true;
      }
      flop_counter().add(std::uint64_t(r) * r * r);
      if (flagged) ++rep.regularized_rows;
      target.row(i) = sol.transpose();
    }
  };

  double f0 = kNaN;
  std::uint64_t iter_mark = 0;
  for (long h = 0;; ++h) {
    if (h == 1) iter_mark = flop_counter().madds;
    if (h == 2) rep.flops_per_iter = flop_counter().madds - iter_mark;

    double ss = 0.0;
    for (Index e = 0; e < m; ++e) {
      const double rv = u.row(ri[e]).dot(v.row(ci[e])) - xv[e];
      ss += rv * rv;
    }
    flop_counter().add(std::uint64_t(m) * (r + 2));
    const double rel_obs = denom > 0.0 ? std::sqrt(ss) / denom : std::sqrt(ss);
    const double obj = ss / obs.p_hat();
    if (h == 0) f0 = obj;

    const bool stop_converged = rel_obs <= cfg.tol_rel_obs;
    const bool stop_diverged = !std::isfinite(obj) || obj > 1e3 * f0;
    const bool stop_max = h == cfg.max_iters;
    TraceRecord tr;
    tr.iter = h;
    tr.objective = obj;
    tr.rel_obs = rel_obs;
    if (truth && cfg.trace_truth) {
      tr.rel_error = std::sqrt(detail::full_error_sq_blocks(u, v, *truth)) /
                     truth->frob_norm();
    }
    tr.seconds = elapsed();
    rep.trace.push_back(tr);

    if (stop_converged || stop_diverged || stop_max) {
      rep.iterations = h;
      rep.status = stop_converged  ? SolveStatus::converged
                   : stop_diverged ? SolveStatus::diverged
                                   : SolveStatus::max_iters;
      rep.final_rel_obs = rel_obs;
      break;
    }

    solve_rows(h % 2 == 0);
  }

  rep.z = FactorZ(n1, n2, r);
  rep.z.zu() = u;
  rep.z.zv() = v;
  if (truth) {
    rep.final_rel_error = relative_full_error(rep.z, *truth);
  }
  return rep;
}

}  // namespace liftmc
