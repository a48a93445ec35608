#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace lobsim;

namespace {

// Integer-valued MA(1): eta_k = e_k + e_{k-1} with e iid in {-1, 0, 1}
// (variance 2/3). sigma^2 = (1 + 1)^2 * 2/3 = 8/3.
std::vector<double> ma1(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  double prev = 0.0;
  for (auto& x : out) {
    const double e = static_cast<double>(static_cast<int>(rng() % 3) - 1);
    x = e + prev;
    prev = e;
  }
  return out;
}

Trace trace_from_increments(const std::vector<double>& eta) {
  Trace tr;
  tr.frame_size = 1;
  std::int64_t mid = 0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    mid += static_cast<std::int64_t>(eta[k]);
    tr.t.push_back(static_cast<double>(k + 1));
    tr.code.push_back(0);
    tr.mid.push_back(mid);
    tr.spread.push_back(1);
  }
  return tr;
}

}  // namespace

TEST(Stats, CompensatedSum) {
  CompensatedSum s;
  s.add(1e16);
  for (int k = 0; k < 1000; ++k) s.add(1.0);
  s.add(-1e16);
  EXPECT_DOUBLE_EQ(s.value(), 1000.0);
}

TEST(Stats, AutocovarianceOfKnownSeries) {
  const std::vector<double> x{1, -1, 1, -1, 1, -1, 1, -1, 1, -1};
  EXPECT_THROW(autocovariance(x, 1), StatsError);
  std::vector<double> y;
  for (int k = 0; k < 200; ++k) y.push_back(k % 2 ? -1.0 : 1.0);
  const auto g = autocovariance(y, 2);
  EXPECT_NEAR(g[0], 1.0, 1e-12);
  EXPECT_NEAR(g[1], -199.0 / 200.0, 1e-12);
  EXPECT_NEAR(g[2], 198.0 / 200.0, 1e-12);
}

TEST(Stats, MovingAverageAsymptoticVariance) {
  const auto eta = ma1(2'000'000, 3);
  const auto g = autocovariance(eta, 50);
  EXPECT_NEAR(g[0], 4.0 / 3.0, 0.01);
  EXPECT_NEAR(g[1], 2.0 / 3.0, 0.01);
  const auto av = asymptotic_variance(g, eta.size());
  EXPECT_NEAR(av.sigma2, 8.0 / 3.0, 0.05);
  EXPECT_GE(av.cutoff, 1u);
  EXPECT_NEAR(batch_means_variance(eta), 8.0 / 3.0, 0.15);
  const auto vs = variance_scaling(trace_from_increments(eta), log_grid(10, 20000, 4));
  EXPECT_NEAR(vs.fit.slope, 8.0 / 3.0, 0.15);
  EXPECT_GT(vs.fit.r2, 0.99);
}

TEST(Stats, FixedCutoffAndClipping) {
  std::vector<double> g{1.0, -0.6, 0.0};
  auto av = asymptotic_variance(g, 1000, CutoffRule::fixed_lag(1));
  EXPECT_EQ(av.cutoff, 1u);
  EXPECT_DOUBLE_EQ(av.sigma2, 0.0);
  EXPECT_TRUE(av.clipped);
  av = asymptotic_variance({2.0, 0.5, 0.25}, 1000, CutoffRule::fixed_lag(2));
  EXPECT_DOUBLE_EQ(av.sigma2, 3.5);
}

TEST(Stats, CutoffRuleStopsAtNoise) {
  std::vector<double> g{1.0, 0.5, 0.25, 0.001, 0.001, 0.001, 0.3, 0.2};
  EXPECT_EQ(cutoff_lag(g, 10000, CutoffRule::consecutive()), 2u);
}

TEST(Stats, LineFitExact) {
  std::vector<VariancePoint> pts{{1, 100, 3}, {2, 50, 5}, {4, 25, 9}};
  for (auto w : {FitWeighting::kOrdinary, FitWeighting::kInverseVariance}) {
    const auto f = fit_line(pts, w);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
  }
  EXPECT_EQ(fit_weighting_from_string(to_string(FitWeighting::kOrdinary)), FitWeighting::kOrdinary);
  EXPECT_THROW(fit_weighting_from_string("huber"), StatsError);
}

TEST(Stats, MixingFitRecoversAr1Rate) {
  std::vector<double> g(60);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = 2.0 * std::pow(0.8, static_cast<double>(k));
  const auto f = fit_mixing(g, 100'000'000);
  EXPECT_NEAR(f.rho, 0.8, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-9);
}

TEST(Stats, MomentsAndAggregation) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m = moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.variance, 5.0 / 3.0);
  EXPECT_NEAR(m.skewness, 0.0, 1e-12);
  EXPECT_EQ(aggregate(x, 2), (std::vector<double>{3, 7}));
  const auto h = value_histogram(std::vector<double>{-2, 0, 0, 2});
  EXPECT_EQ(h.at(0), 2u);
  EXPECT_EQ(h.at(-2), 1u);
}

TEST(Stats, LogGrid) {
  const auto g = log_grid(10, 1000, 2);
  EXPECT_EQ(g.front(), 10u);
  EXPECT_EQ(g.back(), 1000u);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_GT(g[k], g[k - 1]);
}

TEST(Stats, WindowCountGuard) {
  const auto tr = trace_from_increments(ma1(1000, 1));
  EXPECT_THROW(variance_scaling(tr, {100}), StatsError);
}

TEST(Stats, EmptyTraceRejected) {
  Trace tr;
  tr.frame_size = 2;
  EXPECT_THROW(compute_stats(tr, ModelParams::flat(2, 1, 1, 1)), StatsError);
}

TEST(Stats, ReportIsPureFunctionOfTrace) {
  const auto p = ModelParams::flat(4, 1, 1, 1);
  SimulationOptions o;
  o.seed = 6;
  o.n_events = 200'000;
  o.snapshot_stride = 50;
  const auto tr = simulate(p, o);
  const auto a = compute_stats(tr, p);
  const auto b = compute_stats(tr, p);
  EXPECT_EQ(a.sigma2_series.sigma2, b.sigma2_series.sigma2);
  EXPECT_EQ(a.variance.fit.slope, b.variance.fit.slope);
  double s = 0;
  for (std::size_t k = 1; k < a.stationary.spread_histogram.size(); ++k) s += a.stationary.spread_histogram[k];
  EXPECT_NEAR(s, 1.0, 1e-9);
  for (double d : a.stationary.ask_depth) EXPECT_GT(d, 0.0);
}

TEST(Stats, PhysicalTimeRequiresConstantMode) {
  const auto p = ModelParams::flat(3, 1, 1, 1);
  SimulationOptions o;
  o.n_events = 100'000;
  const auto tr = simulate(p, o);
  EXPECT_THROW(physical_time_variance(tr, p, {1.0, 2.0}), StatsError);
}

TEST(Stats, PhysicalVarianceHalvesWithRates) {
  // Halving every rate doubles every holding time: sigma^2 per unit time halves.
  const auto p = ModelParams::flat(3, 1, 0.2, 1, 1, 1, CancelMode::kConstant);
  const auto h = ModelParams::flat(3, 0.5, 0.1, 0.5, 1, 1, CancelMode::kConstant);
  SimulationOptions o;
  o.seed = 21;
  o.n_events = 500'000;
  const auto a = compute_stats(simulate(p, o), p);
  const auto b = compute_stats(simulate(h, o), h);
  ASSERT_TRUE(a.physical && b.physical);
  EXPECT_NEAR(b.physical_time_sigma2 / a.physical_time_sigma2, 0.5, 1e-9);
}
