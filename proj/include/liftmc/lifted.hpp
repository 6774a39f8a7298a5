#pragma once

// The stacked-factor model: a single (n1+n2) x r variable whose top block
// reconstructs rows and bottom block reconstructs columns of the completed
// matrix. Provides the regularized objective, its analytic gradient, the
// row-clipping projection onto the incoherence ball, factor distances, and
// a local-curvature diagnostic. Nothing here ever materializes an
// (n1+n2) x (n1+n2) matrix.

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "liftmc/core.hpp"
#include "liftmc/flops.hpp"
#include "liftmc/observation.hpp"
#include "liftmc/procrustes.hpp"
#include "liftmc/svd.hpp"

namespace liftmc {

struct FactorZ {
  Index n1 = 0, n2 = 0, r = 0;
  RowMat data;  // (n1+n2) x r

  FactorZ() = default;
  FactorZ(Index n1_, Index n2_, Index r_)
      : n1(n1_), n2(n2_), r(r_), data(RowMat::Zero(n1_ + n2_, r_)) {}

  auto zu() { return data.topRows(n1); }
  auto zv() { return data.bottomRows(n2); }
  auto zu() const { return data.topRows(n1); }
  auto zv() const { return data.bottomRows(n2); }
};

struct ModelParams {
  double lambda = 0.5;       // balance-regularizer weight
  double p = 1.0;            // observation fraction used to scale the loss
  double clip_radius = kInf; // per-row bound of the feasible set
};

// Z_U = U*sqrt(S), Z_V = V*sqrt(S), stacked.
inline FactorZ lift(const SvdResult& svd) {
  FactorZ z(svd.U.rows(), svd.V.rows(), svd.sigma.size());
  const Vec root = svd.sigma.cwiseSqrt();
  z.zu() = svd.U * root.asDiagonal();
  z.zv() = svd.V * root.asDiagonal();
  flop_counter().add(std::uint64_t(z.data.rows()) * z.r + z.r);
  return z;
}

namespace detail {

inline void check_conforming(const FactorZ& z, const ObservationSet& obs) {
  require(z.n1 == obs.n1() && z.n2 == obs.n2() && z.data.rows() == z.n1 + z.n2,
          "lifted model: dimension mismatch between factor and observations");
}

// Residuals r_e = <zu_i, zv_j> - x_e for every observed cell, plus their sum
// of squares. One pass, O(m r).
inline double eval_residuals(const FactorZ& z, const ObservationSet& obs,
                             std::vector<double>& resid) {
  const Index m = obs.m();
  resid.resize(m);
  const Index* ri = obs.rows().data();
  const Index* ci = obs.cols().data();
  const double* xv = obs.vals().data();
  double acc = 0.0;
  for (Index e = 0; e < m; ++e) {
    const double pred = z.zu().row(ri[e]).dot(z.zv().row(ci[e]));
    const double rv = pred - xv[e];
    resid[e] = rv;
    acc += rv * rv;
  }
  flop_counter().add(std::uint64_t(m) * (z.r + 2));
  return acc;
}

// Gram gap G = Zu^T Zu - Zv^T Zv (r x r), the quantity the balance
// regularizer penalizes.
inline Mat gram_gap(const FactorZ& z) {
  Mat g = z.zu().transpose() * z.zu() - z.zv().transpose() * z.zv();
  flop_counter().add(std::uint64_t(z.data.rows()) * z.r * z.r +
                     std::uint64_t(z.r) * z.r);
  return g;
}

inline double objective_from_parts(double resid_sq_sum, const Mat& gram_gap,
                                   const ModelParams& params) {
  const double data_term = resid_sq_sum / params.p;
  const double reg = 0.25 * params.lambda * gram_gap.squaredNorm();
  flop_counter().add(std::uint64_t(gram_gap.size()) + 3);
  return data_term + reg;
}

// Analytic gradient assembled from precomputed residuals and Gram gap:
//   top block    = (2/p) * R * Zv + lambda * Zu * G
//   bottom block = (2/p) * R^T * Zu - lambda * Zv * G
// where R holds the raw residuals on the observed cells.
inline RowMat gradient_from_parts(const FactorZ& z, const ObservationSet& obs,
                                  const std::vector<double>& resid,
                                  const Mat& gram_gap,
                                  const ModelParams& params) {
  const Index m = obs.m();
  const Index r = z.r;
  RowMat grad = RowMat::Zero(z.n1 + z.n2, r);
  auto gu = grad.topRows(z.n1);
  auto gv = grad.bottomRows(z.n2);
  const Index* ri = obs.rows().data();
  const Index* ci = obs.cols().data();
  const double c = 2.0 / params.p;
  for (Index e = 0; e < m; ++e) {
    const double w = c * resid[e];
    gu.row(ri[e]) += w * z.zv().row(ci[e]);
    gv.row(ci[e]) += w * z.zu().row(ri[e]);
  }
  flop_counter().add(std::uint64_t(m) * (2 * r + 1));
  if (params.lambda != 0.0) {
    Mat lg = params.lambda * gram_gap;
    gu.noalias() += z.zu() * lg;
    gv.noalias() -= z.zv() * lg;
    flop_counter().add(std::uint64_t(z.data.rows()) * r * r +
                       std::uint64_t(r) * r);
  }
  return grad;
}

}  // namespace detail

// f(Z) = (1/p) * sum over observed cells of (<zu_i, zv_j> - x_ij)^2
//        + (lambda/4) * ||Zu^T Zu - Zv^T Zv||_F^2.
// The data term carries both off-diagonal blocks of the symmetrized
// residual, which is why the rectangular sum enters with weight 1/p rather
// than 1/(2p).
inline double objective(const FactorZ& z, const ObservationSet& obs,
                        const ModelParams& params) {
  detail::check_conforming(z, obs);
  std::vector<double> resid;
  const double ss = detail::eval_residuals(z, obs, resid);
  return detail::objective_from_parts(ss, detail::gram_gap(z), params);
}

inline FactorZ gradient(const FactorZ& z, const ObservationSet& obs,
                        const ModelParams& params) {
  detail::check_conforming(z, obs);
  std::vector<double> resid;
  detail::eval_residuals(z, obs, resid);
  FactorZ g(z.n1, z.n2, z.r);
  g.data = detail::gradient_from_parts(z, obs, resid, detail::gram_gap(z),
                                       params);
  return g;
}

// Row-wise clipping onto { per-row l2 norm <= clip_radius }. Rows already
// inside are untouched (so the map is idempotent and zero rows stay zero);
// clipped rows keep their direction. The rescale factor is shaved by a few
// ulps so a clipped row re-measures strictly inside the ball.
inline FactorZ project_C(const FactorZ& z, double clip_radius) {
  require(clip_radius > 0.0, "project_C: clip_radius must be positive");
  FactorZ out = z;
  if (clip_radius == kInf) return out;
  const Index nrows = out.data.rows();
  for (Index i = 0; i < nrows; ++i) {
    const double nrm = out.data.row(i).norm();
    if (nrm > clip_radius) {
      const double s = clip_radius * (1.0 - 4.0 * kEps) / nrm;
      out.data.row(i) *= s;
    }
  }
  flop_counter().add(std::uint64_t(nrows) * (z.r + 2));
  return out;
}

// mu = max( (n1/r) * max row sq-norm of U, (n2/r) * max row sq-norm of V )
// for orthonormal factors; always >= 1.
inline double incoherence_mu(const Mat& u, const Mat& v, Index n1, Index n2) {
  const Index r = u.cols();
  require(v.cols() == r && u.rows() == n1 && v.rows() == n2,
          "incoherence_mu: shape mismatch");
  const double du = (u.transpose() * u - Mat::Identity(r, r)).norm();
  const double dv = (v.transpose() * v - Mat::Identity(r, r)).norm();
  flop_counter().add(2 * std::uint64_t(n1 + n2) * r * r);
  require(du <= 1e-6 && dv <= 1e-6, "incoherence_mu: factors not orthonormal");
  const double mu_u = u.rowwise().squaredNorm().maxCoeff() *
                      (static_cast<double>(n1) / r);
  const double mu_v = v.rowwise().squaredNorm().maxCoeff() *
                      (static_cast<double>(n2) / r);
  flop_counter().add(std::uint64_t(n1 + n2) * (r + 1));
  return std::max(mu_u, mu_v);
}

inline double distance(const FactorZ& z, const FactorZ& zstar) {
  require(z.data.rows() == zstar.data.rows() && z.r == zstar.r,
          "distance: shape mismatch");
  return procrustes_align(z.data, zstar.data).dist;
}

// Scalars of the ground truth needed by the curvature diagnostic.
struct TruthSpectrum {
  double sigma1 = 0.0;
  double sigma_r = 0.0;
  double kappa = 1.0;
  double mu = 1.0;
};

struct RcRecord {
  double lhs = 0.0;            // <grad f(Z), Z - aligned truth>
  double curvature_term = 0.0; // (99/512) * sigma_r * ||H||_F^2
  double gradient_term = 0.0;  // ||grad||_F^2 / (beta * sigma1)
  double alpha = 0.0;          // 512/99
  double beta = 0.0;           // 13196 * mu^2 r^2 kappa
  bool satisfied = false;
};

// Local inequality <grad, H> >= (99/512) sigma_r ||H||^2 + ||grad||^2/(beta
// sigma1) with H the gap to the aligned truth; the certificate behind the
// geometric convergence of the projected descent loop.
inline RcRecord rc_diagnostic(const FactorZ& z, const FactorZ& zstar,
                              const ObservationSet& obs,
                              const ModelParams& params,
                              const TruthSpectrum& ts) {
  RcRecord rec;
  const auto align = procrustes_align(z.data, zstar.data);
  RowMat h = z.data - (zstar.data * align.R).eval();
  flop_counter().add(std::uint64_t(z.data.rows()) * z.r * (z.r + 1));
  const FactorZ g = gradient(z, obs, params);
  rec.lhs = (g.data.array() * h.array()).sum();
  const double h_sq = h.squaredNorm();
  const double g_sq = g.data.squaredNorm();
  flop_counter().add(3 * std::uint64_t(z.data.rows()) * z.r);
  rec.alpha = 512.0 / 99.0;
  rec.beta = 13196.0 * ts.mu * ts.mu * static_cast<double>(z.r) *
             static_cast<double>(z.r) * ts.kappa;
  rec.curvature_term = (99.0 / 512.0) * ts.sigma_r * h_sq;
  rec.gradient_term = g_sq / (rec.beta * ts.sigma1);
  rec.satisfied = rec.lhs >= rec.curvature_term + rec.gradient_term;
  return rec;
}

// Convenience overload of the masked-residual operator for stacked factors.
inline SparseResidual residual_on_omega(const ObservationSet& obs,
                                        const FactorZ& z, double scale) {
  detail::check_conforming(z, obs);
  return residual_on_omega_blocks(obs, z.zu(), z.zv(), scale);
}

}  // namespace liftmc
