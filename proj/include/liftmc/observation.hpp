#pragma once

// The set of observed entries: sampling models, the masked-residual
// operator, and the invariants shared by everything downstream (sorted
// row-major coordinates, no duplicates, finite values).

#include <algorithm>
#include <cstdint>
#include <unordered_set>
#include <utility>
#include <vector>

#include "liftmc/core.hpp"
#include "liftmc/flops.hpp"
#include "liftmc/rng.hpp"

namespace liftmc {

class ObservationSet {
 public:
  // Takes coordinate lists (zero-based) with aligned values; sorts them
  // row-major and validates every invariant.
  ObservationSet(Index n1, Index n2, std::vector<Index> rows,
                 std::vector<Index> cols, std::vector<double> vals)
      : n1_(n1), n2_(n2) {
    require(n1 >= 1 && n2 >= 1, "ObservationSet: dimensions must be positive");
    require(rows.size() == cols.size() && rows.size() == vals.size(),
            "ObservationSet: index/value length mismatch");
    require(!rows.empty(), "ObservationSet: at least one observation required");
    const std::size_t m = rows.size();
    std::vector<std::size_t> order(m);
    for (std::size_t e = 0; e < m; ++e) order[e] = e;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (rows[a] != rows[b]) return rows[a] < rows[b];
      return cols[a] < cols[b];
    });
    rows_.resize(m);
    cols_.resize(m);
    vals_.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      rows_[e] = rows[order[e]];
      cols_[e] = cols[order[e]];
      vals_[e] = vals[order[e]];
      require(rows_[e] >= 0 && rows_[e] < n1 && cols_[e] >= 0 && cols_[e] < n2,
              "ObservationSet: index out of range");
      require(std::isfinite(vals_[e]), "ObservationSet: non-finite value");
      if (e > 0) {
        require(rows_[e] != rows_[e - 1] || cols_[e] != cols_[e - 1],
                "ObservationSet: duplicate coordinate");
      }
    }
  }

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index m() const { return static_cast<Index>(vals_.size()); }
  double p_hat() const {
    return static_cast<double>(m()) / (static_cast<double>(n1_) * n2_);
  }
  const std::vector<Index>& rows() const { return rows_; }
  const std::vector<Index>& cols() const { return cols_; }
  const std::vector<double>& vals() const { return vals_; }

  // Frobenius norm of the observed values, i.e. of the masked matrix.
  double masked_norm() const {
    double s = 0.0;
    for (double v : vals_) s += v * v;
    flop_counter().add(vals_.size() + 1);
    return std::sqrt(s);
  }

  bool operator==(const ObservationSet& o) const {
    return n1_ == o.n1_ && n2_ == o.n2_ && rows_ == o.rows_ &&
           cols_ == o.cols_ && vals_ == o.vals_;
  }

 private:
  Index n1_, n2_;
  std::vector<Index> rows_, cols_;
  std::vector<double> vals_;
};

struct SparseResidual {
  Index n1 = 0, n2 = 0;
  std::vector<Index> rows, cols;
  std::vector<double> vals;
};

// Draws exactly m distinct cells uniformly without replacement (Floyd's
// sampling: O(m) memory over the virtual n1*n2 index space), then fills
// values from the provided entry source.
template <class EntryFn>
ObservationSet sample_uniform_entries(Index n1, Index n2, Index m,
                                      EntryFn&& entry, std::uint64_t seed) {
  require(n1 >= 1 && n2 >= 1, "sample_uniform: dimensions must be positive");
  const std::uint64_t total = std::uint64_t(n1) * std::uint64_t(n2);
  require(m >= 1 && std::uint64_t(m) <= total,
          "sample_uniform: m out of range");
  Rng rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(m) * 2);
  for (std::uint64_t j = total - std::uint64_t(m); j < total; ++j) {
    const std::uint64_t t = rng.uniform_below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> cells(chosen.begin(), chosen.end());
  std::sort(cells.begin(), cells.end());
  std::vector<Index> rows(m), cols(m);
  std::vector<double> vals(m);
  for (Index e = 0; e < m; ++e) {
    rows[e] = static_cast<Index>(cells[e] / std::uint64_t(n2));
    cols[e] = static_cast<Index>(cells[e] % std::uint64_t(n2));
    vals[e] = entry(rows[e], cols[e]);
  }
  return ObservationSet(n1, n2, std::move(rows), std::move(cols),
                        std::move(vals));
}

// Includes each cell independently with probability p.
template <class EntryFn>
ObservationSet sample_bernoulli_entries(Index n1, Index n2, double p,
                                        EntryFn&& entry, std::uint64_t seed) {
  require(n1 >= 1 && n2 >= 1, "sample_bernoulli: dimensions must be positive");
  require(p > 0.0 && p <= 1.0, "sample_bernoulli: p out of range");
  Rng rng(seed);
  std::vector<Index> rows, cols;
  std::vector<double> vals;
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      if (rng.uniform01() < p) {
        rows.push_back(i);
        cols.push_back(j);
        vals.push_back(entry(i, j));
      }
    }
  }
  if (rows.empty()) {
    throw NumericalError(
        "sample_bernoulli: draw produced an empty observation set");
  }
  return ObservationSet(n1, n2, std::move(rows), std::move(cols),
                        std::move(vals));
}

// scale * (mask of (rowFactor * colFactor^T - observed)) in coordinate form.
// The factor blocks are passed directly so this header stays independent of
// the lifted-factor type.
template <class DerivedU, class DerivedV>
SparseResidual residual_on_omega_blocks(const ObservationSet& obs,
                                        const Eigen::MatrixBase<DerivedU>& zu,
                                        const Eigen::MatrixBase<DerivedV>& zv,
                                        double scale) {
  require(zu.rows() == obs.n1() && zv.rows() == obs.n2() &&
              zu.cols() == zv.cols(),
          "residual_on_omega: dimension mismatch");
  SparseResidual res;
  res.n1 = obs.n1();
  res.n2 = obs.n2();
  res.rows = obs.rows();
  res.cols = obs.cols();
  const Index m = obs.m();
  res.vals.resize(m);
  for (Index e = 0; e < m; ++e) {
    const double pred = zu.row(res.rows[e]).dot(zv.row(res.cols[e]));
    res.vals[e] = scale * (pred - obs.vals()[e]);
  }
  flop_counter().add(std::uint64_t(m) * (zu.cols() + 2));
  return res;
}

}  // namespace liftmc
