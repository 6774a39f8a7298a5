#pragma once

// Rank-r truncated SVD via randomized range sketching with power iterations,
// plus spectral-norm helpers. All inputs are linear operators so large
// matrices never need to be densified; small problems fall back to a dense
// decomposition.

#include <concepts>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "liftmc/core.hpp"
#include "liftmc/flops.hpp"
#include "liftmc/rng.hpp"

namespace liftmc {

struct SvdResult {
  Mat U;      // n1 x r, orthonormal columns
  Vec sigma;  // r, nonincreasing, nonnegative
  Mat V;      // n2 x r, orthonormal columns
};

// Anything that can multiply a block by the matrix and by its transpose.
template <class Op>
concept LinearOperator = requires(const Op& op, const Mat& x) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  { op.apply(x) } -> std::convertible_to<Mat>;
  { op.apply_transpose(x) } -> std::convertible_to<Mat>;
};

struct DenseOperator {
  const Mat& a;
  Index rows() const { return a.rows(); }
  Index cols() const { return a.cols(); }
  Mat apply(const Mat& x) const {
    flop_counter().add(std::uint64_t(a.rows()) * a.cols() * x.cols());
    return a * x;
  }
  Mat apply_transpose(const Mat& x) const {
    flop_counter().add(std::uint64_t(a.rows()) * a.cols() * x.cols());
    return a.transpose() * x;
  }
};

// scale * (sparse coordinate matrix), e.g. the rescaled observed entries.
struct SparseCooOperator {
  Index n1 = 0, n2 = 0;
  Index m = 0;
  const Index* row_idx = nullptr;
  const Index* col_idx = nullptr;
  const double* val = nullptr;
  double scale = 1.0;

  Index rows() const { return n1; }
  Index cols() const { return n2; }
  Mat apply(const Mat& x) const {
    Mat y = Mat::Zero(n1, x.cols());
    for (Index e = 0; e < m; ++e) {
      y.row(row_idx[e]) += (scale * val[e]) * x.row(col_idx[e]);
    }
    flop_counter().add(std::uint64_t(m) * (x.cols() + 1));
    return y;
  }
  Mat apply_transpose(const Mat& x) const {
    Mat y = Mat::Zero(n2, x.cols());
    for (Index e = 0; e < m; ++e) {
      y.row(col_idx[e]) += (scale * val[e]) * x.row(row_idx[e]);
    }
    flop_counter().add(std::uint64_t(m) * (x.cols() + 1));
    return y;
  }
};

// a * b^T + scale * (sparse coordinate matrix): the shape of one hard-
// thresholding update, kept matrix-free so only factor-sized products occur.
struct FactoredPlusSparseOperator {
  const RowMat& a;  // n1 x r
  const RowMat& b;  // n2 x r
  SparseCooOperator sparse;

  Index rows() const { return a.rows(); }
  Index cols() const { return b.rows(); }
  Mat apply(const Mat& x) const {
    Mat w = b.transpose() * x;  // r x k
    Mat y = a * w;              // n1 x k
    flop_counter().add(std::uint64_t(a.cols()) * x.cols() *
                       (a.rows() + b.rows()));
    if (sparse.m > 0) {
      for (Index e = 0; e < sparse.m; ++e) {
        y.row(sparse.row_idx[e]) +=
            (sparse.scale * sparse.val[e]) * x.row(sparse.col_idx[e]);
      }
      flop_counter().add(std::uint64_t(sparse.m) * (x.cols() + 1));
    }
    return y;
  }
  Mat apply_transpose(const Mat& x) const {
    Mat w = a.transpose() * x;  // r x k
    Mat y = b * w;              // n2 x k
    flop_counter().add(std::uint64_t(a.cols()) * x.cols() *
                       (a.rows() + b.rows()));
    if (sparse.m > 0) {
      for (Index e = 0; e < sparse.m; ++e) {
        y.row(sparse.col_idx[e]) +=
            (sparse.scale * sparse.val[e]) * x.row(sparse.row_idx[e]);
      }
      flop_counter().add(std::uint64_t(sparse.m) * (x.cols() + 1));
    }
    return y;
  }
};

namespace detail {

// Fix each left singular vector so its largest-magnitude entry (first such
// index on ties) is nonnegative; flips the matching right vector too. Makes
// decompositions deterministic under a fixed seed.
inline void fix_svd_signs(Mat& u, Mat& v) {
  for (Index k = 0; k < u.cols(); ++k) {
    Index imax = 0;
    double best = -1.0;
    for (Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, k));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (u(imax, k) < 0.0) {
      u.col(k) = -u.col(k);
      v.col(k) = -v.col(k);
    }
  }
}

inline Mat thin_q(const Mat& y) {
  Eigen::HouseholderQR<Mat> qr(y);
  Mat q = qr.householderQ() * Mat::Identity(y.rows(), y.cols());
  flop_counter().add(2 * std::uint64_t(y.rows()) * y.cols() * y.cols());
  return q;
}

inline SvdResult dense_truncated_svd(const Mat& a, Index r) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  flop_counter().add(4 * std::uint64_t(a.rows()) * a.cols() *
                     std::min(a.rows(), a.cols()));
  SvdResult out;
  out.U = svd.matrixU().leftCols(r);
  out.sigma = svd.singularValues().head(r);
  out.V = svd.matrixV().leftCols(r);
  fix_svd_signs(out.U, out.V);
  return out;
}

}  // namespace detail

template <class Op>
  requires LinearOperator<Op>
SvdResult randomized_rank_r_svd(const Op& op, Index r, std::uint64_t seed,
                                Index oversample = 10, int power_iters = 2) {
  const Index n1 = op.rows();
  const Index n2 = op.cols();
  require(n1 >= 1 && n2 >= 1, "randomized_rank_r_svd: empty operator");
  require(r >= 1 && r <= std::min(n1, n2),
          "randomized_rank_r_svd: rank exceeds dimensions");

  // At small sizes sketching buys nothing; densify and decompose directly.
  if (std::min(n1, n2) <= 32) {
    Mat dense;
    if (n2 <= n1) {
      dense = op.apply(Mat::Identity(n2, n2));
    } else {
      dense = op.apply_transpose(Mat::Identity(n1, n1)).transpose();
    }
    if (!all_finite(dense)) {
      throw NumericalError("randomized_rank_r_svd: non-finite values");
    }
    return detail::dense_truncated_svd(dense, r);
  }

  const Index l = std::min(r + oversample, std::min(n1, n2));
  Rng rng(seed);
  Mat g(n2, l);
  for (Index i = 0; i < n2; ++i) {
    for (Index j = 0; j < l; ++j) g(i, j) = rng.gaussian();
  }

  Mat q = detail::thin_q(op.apply(g));
  for (int t = 0; t < power_iters; ++t) {
    Mat qw = detail::thin_q(op.apply_transpose(q));
    q = detail::thin_q(op.apply(qw));
  }

  Mat bt = op.apply_transpose(q).transpose();  // l x n2
  if (!all_finite(bt)) {
    throw NumericalError("randomized_rank_r_svd: non-finite values");
  }
  Eigen::JacobiSVD<Mat> small(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  flop_counter().add(4 * std::uint64_t(l) * l * n2);

  SvdResult out;
  out.U = q * small.matrixU().leftCols(r);
  flop_counter().add(std::uint64_t(n1) * l * r);
  out.sigma = small.singularValues().head(r);
  out.V = small.matrixV().leftCols(r);
  detail::fix_svd_signs(out.U, out.V);
  if (!all_finite(out.U) || !all_finite(out.sigma) || !all_finite(out.V)) {
    throw NumericalError("randomized_rank_r_svd: non-finite result");
  }
  return out;
}

// Largest singular value of a dense matrix, accurate to 1e-6 relative.
inline double spectral_norm(const Mat& a) {
  require(a.size() > 0, "spectral_norm: empty matrix");
  if (!all_finite(a)) throw NumericalError("spectral_norm: non-finite input");
  if (std::min(a.rows(), a.cols()) <= 32) {
    Eigen::JacobiSVD<Mat> svd(a);
    flop_counter().add(4 * std::uint64_t(a.rows()) * a.cols() *
                       std::min(a.rows(), a.cols()));
    return svd.singularValues()(0);
  }
  Rng rng(0xD1CEC0DEULL);
  Vec v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec u = a * v;
    const double nu = u.norm();
    flop_counter().add(std::uint64_t(a.rows()) * (a.cols() + 1));
    if (nu == 0.0) return 0.0;
    Vec w = a.transpose() * (u / nu);
    flop_counter().add(std::uint64_t(a.rows()) * a.cols() + a.rows());
    const double next = w.norm();
    flop_counter().add(a.cols());
    const bool done = std::abs(next - sigma) <= 1e-9 * std::max(next, 1e-300);
    sigma = next;
    if (next == 0.0) return 0.0;
    v = w / next;
    if (done && it >= 3) break;
  }
  return sigma;
}

// Largest singular value of a tall factor computed from its r x r Gram
// matrix; exact up to the symmetric eigensolver's accuracy.
inline double factor_spectral_norm(const RowMat& z) {
  require(z.size() > 0, "factor_spectral_norm: empty matrix");
  Mat gram = z.transpose() * z;
  flop_counter().add(std::uint64_t(z.rows()) * z.cols() * z.cols());
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  flop_counter().add(10 * std::uint64_t(z.cols()) * z.cols() * z.cols());
  const double lmax = es.eigenvalues().maxCoeff();
  return lmax > 0.0 ? std::sqrt(lmax) : 0.0;
}

}  // namespace liftmc
