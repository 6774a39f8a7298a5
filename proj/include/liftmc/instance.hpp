#pragma once

// Synthetic ground-truth instances: orthonormal factors from QR of Gaussian
// matrices, a linearly spaced spectrum with exact condition number, and a
// small regenerable on-disk description (the instance is a pure function of
// its parameters and seed).

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "liftmc/core.hpp"
#include "liftmc/lifted.hpp"
#include "liftmc/observation.hpp"
#include "liftmc/rng.hpp"

namespace liftmc {

class LowRankInstance {
 public:
  Index n1 = 0, n2 = 0, r = 0;
  Mat Ustar;       // n1 x r orthonormal
  Mat Vstar;       // n2 x r orthonormal
  Vec sigma_star;  // r, strictly positive, descending
  double mu = 1.0;
  double kappa = 1.0;
  // Generation parameters, kept so the instance can be re-created from disk.
  double kappa_target = 1.0;
  std::uint64_t seed = 0;

  double entry(Index i, Index j) const {
    double s = 0.0;
    for (Index k = 0; k < r; ++k) s += Ustar(i, k) * sigma_star(k) * Vstar(j, k);
    return s;
  }

  // Dense truth, cached; only sensible at desk scale.
  const Mat& dense() const {
    if (!dense_) {
      dense_ = Ustar * sigma_star.asDiagonal() * Vstar.transpose();
    }
    return *dense_;
  }

  double frob_norm() const {
    return sigma_star.norm();  // orthonormal factors preserve it
  }

  double sigma1() const { return sigma_star(0); }
  double sigma_r() const { return sigma_star(r - 1); }

  FactorZ lifted_truth() const {
    SvdResult svd{Ustar, sigma_star, Vstar};
    return lift(svd);
  }

  TruthSpectrum spectrum() const { return {sigma1(), sigma_r(), kappa, mu}; }

 private:
  mutable std::optional<Mat> dense_;
};

namespace detail {

// Thin Q factor with a deterministic sign convention (diagonal of R made
// nonnegative).
inline Mat gaussian_orthonormal(Index n, Index r, Rng& rng) {
  Mat g(n, r);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < r; ++j) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, r);
  Mat rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Index j = 0; j < r; ++j) {
    if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  flop_counter().add(2 * std::uint64_t(n) * r * r);
  return q;
}

}  // namespace detail

inline LowRankInstance generate_instance(Index n1, Index n2, Index r,
                                         double kappa, std::uint64_t seed) {
  require(n1 >= 1 && n2 >= 1, "generate_instance: dimensions must be positive");
  require(r >= 1 && r <= std::min(n1, n2), "generate_instance: invalid rank");
  require(kappa >= 1.0, "generate_instance: kappa must be >= 1");
  LowRankInstance inst;
  inst.n1 = n1;
  inst.n2 = n2;
  inst.r = r;
  inst.kappa_target = kappa;
  inst.seed = seed;
  Rng rng(seed);
  inst.Ustar = detail::gaussian_orthonormal(n1, r, rng);
  inst.Vstar = detail::gaussian_orthonormal(n2, r, rng);
  inst.sigma_star.resize(r);
  // Linearly spaced from kappa down to 1 so the condition number is exact.
  for (Index k = 0; k < r; ++k) {
    inst.sigma_star(k) =
        (r == 1) ? kappa
                 : kappa + (1.0 - kappa) * static_cast<double>(k) /
                               static_cast<double>(r - 1);
  }
  inst.kappa = inst.sigma_star(0) / inst.sigma_star(r - 1);
  inst.mu = incoherence_mu(inst.Ustar, inst.Vstar, n1, n2);
  return inst;
}

// Spec'd sampler entry points: values are read from the instance's truth.
inline ObservationSet sample_uniform(Index n1, Index n2, Index m,
                                     const LowRankInstance& inst,
                                     std::uint64_t seed) {
  require(n1 == inst.n1 && n2 == inst.n2,
          "sample_uniform: dimension mismatch with instance");
  return sample_uniform_entries(
      n1, n2, m, [&](Index i, Index j) { return inst.entry(i, j); }, seed);
}

inline ObservationSet sample_bernoulli(Index n1, Index n2, double p,
                                       const LowRankInstance& inst,
                                       std::uint64_t seed) {
  require(n1 == inst.n1 && n2 == inst.n2,
          "sample_bernoulli: dimension mismatch with instance");
  return sample_bernoulli_entries(
      n1, n2, p, [&](Index i, Index j) { return inst.entry(i, j); }, seed);
}

// On-disk description: flat key=value lines. The heavy factors are not
// stored; reading re-generates them deterministically from the seed.
inline void write_instance(const LowRankInstance& inst,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_instance: cannot open " + path);
  out << "# low-rank ground-truth description (regenerated from seed)\n";
  out << "n1=" << inst.n1 << "\n";
  out << "n2=" << inst.n2 << "\n";
  out << "rank=" << inst.r << "\n";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", inst.kappa_target);
  out << "kappa=" << buf << "\n";
  out << "seed=" << inst.seed << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", inst.mu);
  out << "# derived: mu=" << buf << "\n";
  if (!out) throw IoError("write_instance: write failed for " + path);
}

inline LowRankInstance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_instance: cannot open " + path);
  Index n1 = -1, n2 = -1, r = -1;
  double kappa = -1.0;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("read_instance: expected key=value", lineno);
    }
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    std::istringstream ss(val);
    if (key == "n1") ss >> n1;
    else if (key == "n2") ss >> n2;
    else if (key == "rank") ss >> r;
    else if (key == "kappa") ss >> kappa;
    else if (key == "seed") { ss >> seed; have_seed = true; }
    else throw ParseError("read_instance: unknown key '" + key + "'", lineno);
    if (ss.fail()) throw ParseError("read_instance: bad value", lineno);
  }
  if (n1 < 1 || n2 < 1 || r < 1 || kappa < 1.0 || !have_seed) {
    throw ParseError("read_instance: missing or invalid fields", lineno);
  }
  return generate_instance(n1, n2, r, kappa, seed);
}

}  // namespace liftmc
