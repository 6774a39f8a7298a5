#include "liftmc/solver.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "liftmc/instance.hpp"
#include "oracles.hpp"

namespace {

using liftmc::FactorZ;
using liftmc::Index;
using liftmc::Mat;
using liftmc::ModelParams;
using liftmc::ObservationSet;
using liftmc::SolveStatus;
using liftmc::SolverConfig;

ObservationSet full_observations(const liftmc::LowRankInstance& inst) {
  std::vector<Index> rows, cols;
  std::vector<double> vals;
  for (Index i = 0; i < inst.n1; ++i) {
    for (Index j = 0; j < inst.n2; ++j) {
      rows.push_back(i);
      cols.push_back(j);
      vals.push_back(inst.entry(i, j));
    }
  }
  return ObservationSet(inst.n1, inst.n2, rows, cols, vals);
}

TEST(SpectralInit, ExactUnderFullObservation) {
  const auto inst = liftmc::generate_instance(24, 18, 3, 2.0, 51);
  const auto obs = full_observations(inst);
  ASSERT_DOUBLE_EQ(obs.p_hat(), 1.0);
  const auto init = liftmc::spectral_init(obs, 3, 7, inst.mu);
  const FactorZ zstar = inst.lifted_truth();
  EXPECT_LE(liftmc::distance(init.z0, zstar),
            1e-6 * std::sqrt(inst.sigma1()));
  // the truth is feasible, so clipping must leave the tiny gap intact
  EXPECT_LE(liftmc::distance(init.z1, zstar),
            liftmc::distance(init.z0, zstar) + 1e-12);
}

TEST(SpectralInit, ClippingNeverIncreasesDistanceToTruth) {
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst =
        liftmc::generate_instance(40, 30, 2, 1.5, 800 + rep);
    const Index m = (40 * 30) / 4;
    const auto obs = liftmc::sample_uniform(40, 30, m, inst, 900 + rep);
    const auto init = liftmc::spectral_init(obs, 2, 1000 + rep, inst.mu);
    const FactorZ zstar = inst.lifted_truth();
    const double d0 = liftmc::distance(init.z0, zstar);
    const double d1 = liftmc::distance(init.z1, zstar);
    EXPECT_LE(d1, d0 + 1e-12) << "rep " << rep;
    // every row of the clipped iterate is inside the ball
    for (Index i = 0; i < init.z1.data.rows(); ++i) {
      EXPECT_LE(init.z1.data.row(i).norm(), init.theta) << "row " << i;
    }
  }
}

TEST(SpectralInit, RadiusFormula) {
  const auto inst = liftmc::generate_instance(30, 20, 2, 1.4, 3);
  const auto obs = liftmc::sample_uniform(30, 20, 300, inst, 4);
  const auto init = liftmc::spectral_init(obs, 2, 5, inst.mu);
  const double expect_theta =
      std::sqrt(2.0 * inst.mu * 2.0 / 20.0) * init.norm_z0;
  EXPECT_NEAR(init.theta, expect_theta, 1e-12 * expect_theta);
  EXPECT_GT(init.norm_z0, 0.0);
  // with projection disabled the radius is reported as unbounded
  const auto noproj = liftmc::spectral_init(obs, 2, 5, inst.mu, false);
  EXPECT_EQ(noproj.theta, liftmc::kInf);
  EXPECT_EQ((noproj.z1.data - noproj.z0.data).norm(), 0.0);
}

TEST(GdStep, TruthIsAFixedPoint) {
  const auto inst = liftmc::generate_instance(16, 12, 2, 1.8, 9);
  const auto obs = liftmc::sample_uniform(16, 12, 100, inst, 10);
  const FactorZ zstar = inst.lifted_truth();
  ModelParams params{0.5, obs.p_hat(), liftmc::kInf};
  const FactorZ next = liftmc::gd_step(zstar, obs, params, 0.1);
  EXPECT_LE((next.data - zstar.data).norm(), 1e-12 * zstar.data.norm());
}

TEST(GdStep, ScalarHandIterate) {
  // One observed scalar x, factors (a, b), no balance penalty, no clipping:
  //   a' = a - s * 2(ab - x) b,  b' = b - s * 2(ab - x) a.
  FactorZ z(1, 1, 1);
  const double a = 1.5, b = 0.8, x = 2.0, s = 0.05;
  z.data << a, b;
  ObservationSet obs(1, 1, {0}, {0}, {x});
  ModelParams params{0.0, 1.0, liftmc::kInf};
  const FactorZ next = liftmc::gd_step(z, obs, params, s);
  const double resid = a * b - x;
  EXPECT_NEAR(next.data(0, 0), a - s * 2.0 * resid * b, 1e-15);
  EXPECT_NEAR(next.data(1, 0), b - s * 2.0 * resid * a, 1e-15);
}

TEST(GdStep, RespectsClipRadius) {
  const auto inst = liftmc::generate_instance(12, 10, 2, 1.5, 30);
  const auto obs = liftmc::sample_uniform(12, 10, 70, inst, 31);
  const auto init = liftmc::spectral_init(obs, 2, 32, inst.mu);
  ModelParams params{0.5, obs.p_hat(), init.theta};
  const double eta_scaled = 0.4 / (init.norm_z0 * init.norm_z0);
  FactorZ z = init.z1;
  for (int k = 0; k < 30; ++k) {
    z = liftmc::gd_step(z, obs, params, eta_scaled);
    for (Index i = 0; i < z.data.rows(); ++i) {
      ASSERT_LE(z.data.row(i).norm(), init.theta) << "iter " << k;
    }
  }
}

TEST(Solve, ConvergesFastUnderFullObservation) {
  const auto inst = liftmc::generate_instance(24, 20, 3, 1.6, 71);
  const auto obs = full_observations(inst);
  SolverConfig cfg;
  cfg.r = 3;
  cfg.tol_rel_obs = 1e-8;
  cfg.seed = 72;
  const auto rep = liftmc::solve(obs, cfg, &inst);
  EXPECT_EQ(rep.status, SolveStatus::converged);
  EXPECT_LE(rep.iterations, 50);
  EXPECT_LE(rep.final_rel_error, 1e-6);
  EXPECT_LE(rep.final_rel_obs, 1e-8);
}

TEST(Solve, ConvergesFromPartialObservations) {
  const auto inst = liftmc::generate_instance(60, 50, 2, 1.5, 19);
  const Index m = Index(5.0 * 60 * 2 * 1.5);  // comfortably oversampled
  const auto obs = liftmc::sample_uniform(60, 50, m, inst, 20);
  SolverConfig cfg;
  cfg.r = 2;
  cfg.tol_rel_obs = 1e-9;
  cfg.max_iters = 3000;
  cfg.seed = 21;
  const auto rep = liftmc::solve(obs, cfg, &inst);
  EXPECT_EQ(rep.status, SolveStatus::converged);
  EXPECT_LE(rep.final_rel_error, 1e-6);
}

TEST(Solve, RepeatRunsAreBitwiseIdentical) {
  const auto inst = liftmc::generate_instance(30, 25, 2, 1.7, 5);
  const auto obs = liftmc::sample_uniform(30, 25, 450, inst, 6);
  SolverConfig cfg;
  cfg.r = 2;
  cfg.tol_rel_obs = 1e-8;
  cfg.seed = 7;
  const auto a = liftmc::solve(obs, cfg, &inst);
  const auto b = liftmc::solve(obs, cfg, &inst);
  ASSERT_EQ(a.iterations, b.iterations);
  ASSERT_EQ(a.status, b.status);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  EXPECT_EQ((a.z.data - b.z.data).norm(), 0.0);
  for (size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].objective, b.trace[i].objective) << "record " << i;
    EXPECT_EQ(a.trace[i].rel_obs, b.trace[i].rel_obs) << "record " << i;
  }
}

TEST(Solve, TraceCoversEveryIterationAtDeskScale) {
  const auto inst = liftmc::generate_instance(20, 16, 2, 1.5, 44);
  const auto obs = liftmc::sample_uniform(20, 16, 200, inst, 45);
  SolverConfig cfg;
  cfg.r = 2;
  cfg.tol_rel_obs = 1e-7;
  cfg.max_iters = 500;
  cfg.seed = 46;
  const auto rep = liftmc::solve(obs, cfg, &inst);
  ASSERT_LE(rep.iterations, 500);
  EXPECT_EQ(long(rep.trace.size()), rep.iterations + 1);
  for (size_t i = 0; i < rep.trace.size(); ++i) {
    EXPECT_EQ(rep.trace[i].iter, long(i));
    EXPECT_TRUE(std::isfinite(rep.trace[i].objective));
    EXPECT_TRUE(std::isfinite(rep.trace[i].rel_error));
    EXPECT_TRUE(std::isfinite(rep.trace[i].dist));
  }
  // objective at the end is far below the start
  EXPECT_LT(rep.trace.back().objective, 1e-6 * rep.trace.front().objective);
}

TEST(Solve, TruthColumnsBlankWithoutTruth) {
  const auto inst = liftmc::generate_instance(18, 14, 2, 1.5, 64);
  const auto obs = liftmc::sample_uniform(18, 14, 160, inst, 65);
  SolverConfig cfg;
  cfg.r = 2;
  cfg.tol_rel_obs = 1e-6;
  cfg.seed = 66;
  cfg.mu_override = inst.mu;
  const auto rep = liftmc::solve(obs, cfg, nullptr);
  EXPECT_TRUE(std::isnan(rep.final_rel_error));
  EXPECT_TRUE(std::isnan(rep.trace.front().rel_error));
  EXPECT_TRUE(std::isnan(rep.trace.front().dist));
  EXPECT_TRUE(std::isfinite(rep.trace.front().objective));
}

TEST(Solve, ProjectionWithoutRowBoundThrows) {
  const auto inst = liftmc::generate_instance(10, 8, 2, 1.5, 1);
  const auto obs = liftmc::sample_uniform(10, 8, 60, inst, 2);
  SolverConfig cfg;
  cfg.r = 2;
  EXPECT_THROW(liftmc::solve(obs, cfg, nullptr), std::invalid_argument);
  cfg.use_projection = false;
  EXPECT_NO_THROW(liftmc::solve(obs, cfg, nullptr));
}

TEST(Solve, OversizedStepIsFlaggedAsDivergence) {
  const auto inst = liftmc::generate_instance(20, 16, 2, 1.5, 90);
  const auto obs = liftmc::sample_uniform(20, 16, 200, inst, 91);
  SolverConfig cfg;
  cfg.r = 2;
  cfg.eta = 5e4;
  cfg.max_iters = 200;
  cfg.seed = 92;
  cfg.use_projection = false;  // leave the blow-up unchecked by clipping
  cfg.mu_override = inst.mu;
  const auto rep = liftmc::solve(obs, cfg, nullptr);
  EXPECT_EQ(rep.status, SolveStatus::diverged);
  EXPECT_EQ(liftmc::to_string(rep.status), "diverged");
}

TEST(Solve, StatusNames) {
  EXPECT_EQ(liftmc::to_string(SolveStatus::converged), "converged");
  EXPECT_EQ(liftmc::to_string(SolveStatus::max_iters), "max-iters");
  EXPECT_EQ(liftmc::to_string(SolveStatus::diverged), "diverged");
}

TEST(Solve, PerIterationWorkWithinBudget) {
  const Index n1 = 80, n2 = 60, r = 3;
  const auto inst = liftmc::generate_instance(n1, n2, r, 1.5, 13);
  const Index m = 4000;
  const auto obs = liftmc::sample_uniform(n1, n2, m, inst, 14);
  SolverConfig cfg;
  cfg.r = r;
  cfg.tol_rel_obs = 1e-9;
  cfg.max_iters = 50;
  cfg.seed = 15;
  cfg.mu_override = inst.mu;
  cfg.trace_truth = false;
  const auto rep = liftmc::solve(obs, cfg, nullptr);
  const std::uint64_t budget =
      2 * (2 * std::uint64_t(m) * r + std::uint64_t(m) +
           std::uint64_t(n1 + n2) * r * r + 4 * std::uint64_t(n1 + n2) * r);
  ASSERT_GT(rep.flops_per_iter, 0u);
  EXPECT_LE(rep.flops_per_iter, budget)
      << "measured " << rep.flops_per_iter << " vs budget " << budget;
}

TEST(Solve, DistanceContractsNearTruth) {
  const auto inst = liftmc::generate_instance(40, 32, 2, 1.5, 23);
  const Index m = Index(0.5 * 40 * 32);
  const auto obs = liftmc::sample_uniform(40, 32, m, inst, 24);
  const FactorZ zstar = inst.lifted_truth();
  ModelParams params{0.5, obs.p_hat(), liftmc::kInf};
  const double op_norm = liftmc::factor_spectral_norm(zstar.data);
  const double eta_scaled = 0.4 / (op_norm * op_norm);
  FactorZ z = zstar;
  z.data += liftmc::RowMat(oracles::random_gaussian(z.data.rows(), 2, 25) *
                           0.02 * std::sqrt(inst.sigma1()));
  int shrank = 0;
  double d = liftmc::distance(z, zstar);
  for (int k = 0; k < 100; ++k) {
    z = liftmc::gd_step(z, obs, params, eta_scaled);
    const double dn = liftmc::distance(z, zstar);
    if (dn < d) ++shrank;
    d = dn;
  }
  EXPECT_GE(shrank, 99);
  EXPECT_LE(d, 1e-3 * std::sqrt(inst.sigma1()));
}

}  // namespace
