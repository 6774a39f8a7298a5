#pragma once

// Orthogonal alignment between two stacked factors: the closest rotation/
// reflection R minimizing ||Z - Zstar*R||_F, and the induced distance.

#include <Eigen/Dense>

#include "liftmc/core.hpp"
#include "liftmc/flops.hpp"

namespace liftmc {

struct ProcrustesResult {
  Mat R;        // r x r orthogonal
  double dist;  // ||Z - Zstar*R||_F at the optimum
};

template <class DerivedA, class DerivedB>
ProcrustesResult procrustes_align(const Eigen::MatrixBase<DerivedA>& z,
                                  const Eigen::MatrixBase<DerivedB>& zstar) {
  require(z.rows() == zstar.rows() && z.cols() == zstar.cols(),
          "procrustes_align: shape mismatch");
  const Index r = z.cols();
  Mat m = zstar.transpose() * z;  // r x r
  flop_counter().add(std::uint64_t(z.rows()) * r * r);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  flop_counter().add(12 * std::uint64_t(r) * r * r);
  ProcrustesResult out;
  out.R = svd.matrixU() * svd.matrixV().transpose();
  out.dist = (z - zstar * out.R).norm();
  flop_counter().add(std::uint64_t(z.rows()) * r * (r + 2));
  return out;
}

}  // namespace liftmc
