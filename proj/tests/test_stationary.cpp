#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace lobsim;

namespace {

ModelParams n2() { return ModelParams::flat(2, 1, 1, 1, 1); }

}  // namespace

TEST(Oracle, BirthDeathSliceIsPoisson) {
  // Only ask limits and proportional ask cancellations at one level: the
  // queue is an M/M/infinity system with stationary law Poisson(1).
  ModelParams p = ModelParams::flat(1, 0.0, 1.0, 1.0, 1);
  p.rate_limit_bid = {0.0};
  p.rate_cancel_bid = {0.0};
  TruncationOptions opt;
  opt.cap = 20;
  const auto pi = truncated_stationary(p, opt);
  const auto m = pi.queue_marginal(Side::kAsk, 1);
  std::vector<double> poisson(m.size());
  double f = 1.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (k > 0) f *= static_cast<double>(k);
    poisson[k] = std::exp(-1.0) / f;
  }
  EXPECT_LT(total_variation(m, poisson), 1e-6);
  EXPECT_LT(pi.residual, 1e-12);
}

TEST(Oracle, BoundaryMassDecreasesWithCap) {
  double prev = 1.0;
  for (int cap : {4, 6, 8}) {
    TruncationOptions opt;
    opt.cap = cap;
    const auto pi = truncated_stationary(n2(), opt);
    EXPECT_LT(pi.boundary_mass, prev) << "cap " << cap;
    prev = pi.boundary_mass;
    double total = 0;
    for (double x : pi.probability) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LT(pi.residual, 1e-10);
  }
}

TEST(Oracle, SpreadMarginalIsSymmetricAndNormalised) {
  const auto pi = truncated_stationary(n2());
  const auto s = pi.spread_marginal();
  EXPECT_NEAR(s[1] + s[2] + s[3], 1.0, 1e-12);
  const auto a = pi.queue_marginal(Side::kAsk, 2);
  const auto b = pi.queue_marginal(Side::kBid, 2);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-10);
}

TEST(Oracle, MatchesSimulationOnSmallBook) {
  const auto p = n2();
  const auto pi = truncated_stationary(p);
  SimulationOptions o;
  o.seed = 101;
  o.n_events = 2'000'000;
  const auto est = stationary_estimators(simulate(p, o), p);
  EXPECT_LT(total_variation(pi.spread_marginal(), est.spread_histogram), 0.02);
}

TEST(Oracle, RefusesLargeProblems) {
  EXPECT_THROW(truncated_stationary(ModelParams::flat(4, 1, 1, 1)), OracleError);
  TruncationOptions opt;
  opt.cap = 20;
  EXPECT_THROW(truncated_stationary(ModelParams::flat(3, 1, 1, 1), opt), OracleError);
}

TEST(Oracle, TotalVariation) {
  EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5}, {1.0}), 0.5);
  EXPECT_DOUBLE_EQ(total_variation({0.2, 0.8}, {0.2, 0.8}), 0.0);
}
