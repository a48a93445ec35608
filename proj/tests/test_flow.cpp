#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace lobsim;

TEST(Rng, DeterministicAndStreamsDiffer) {
  Rng a(5), b(5), c(5, 1);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a(), b());
  Rng d(5);
  int equal = 0;
  for (int k = 0; k < 100; ++k) equal += d() == c();
  EXPECT_EQ(equal, 0);
  Rng u(1);
  for (int k = 0; k < 100000; ++k) {
    const double x = u.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}

TEST(Rng, ExponentialMean) {
  Rng r(77);
  double s = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) s += r.exponential(4.0);
  EXPECT_NEAR(s / n, 0.25, 4 * 0.25 / std::sqrt(n));
}

TEST(Flow, TraceIsReproducible) {
  const auto p = ModelParams::flat(5, 1, 1, 1, 2);
  SimulationOptions o;
  o.seed = 12;
  o.n_events = 20000;
  o.burn_in = 1000;
  o.snapshot_stride = 100;
  const auto a = simulate(p, o);
  const auto b = simulate(p, o);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 20000u);
  EXPECT_EQ(a.snapshots.size(), 200u);
  o.seed = 13;
  EXPECT_NE(simulate(p, o).mid, a.mid);
}

TEST(Flow, ReplicasMatchSequential) {
  const auto p = ModelParams::flat(4, 1, 1, 1);
  SimulationOptions o;
  o.n_events = 5000;
  o.burn_in = 500;
  const auto seeds = replica_seeds(99, 16);
  const auto par = simulate_replicas(p, seeds, o, 4);
  ASSERT_EQ(par.size(), 16u);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    o.seed = seeds[i];
    EXPECT_EQ(par[i], simulate(p, o));
  }
  EXPECT_THROW(simulate_replicas(p, {1, 2, 1}, o), std::invalid_argument);
}

TEST(Flow, TraceColumnsAreConsistent) {
  const auto p = ModelParams::flat(5, 1, 1, 1, 1, 1, CancelMode::kConstant);
  SimulationOptions o;
  o.seed = 3;
  o.n_events = 20000;
  o.burn_in = 100;
  o.snapshot_stride = 7;
  const auto tr = simulate(p, o);
  for (std::size_t k = 1; k < tr.size(); ++k) ASSERT_GE(tr.t[k], tr.t[k - 1]);
  for (const auto& s : tr.snapshots) {
    ASSERT_TRUE(well_formed(s.state));
    EXPECT_EQ(mid_half_ticks(s.state), tr.mid[s.event_index]);
    EXPECT_EQ(spread_ticks(s.state), tr.spread[s.event_index]);
    EXPECT_EQ(s.t, tr.t[s.event_index]);
  }
}

// From a fixed state, the first jump has exponential holding time of rate
// Lambda(x) and lands on each event with probability rate / Lambda(x).
TEST(Flow, JumpChainLaw) {
  const auto p = ModelParams::flat(1, 0.5, 1.0, 1.0, 1);
  const BookState x{{2}, {1}, 0};
  const auto probs = embedded_probabilities(x, p);
  const double lambda = total_rate(x, p);
  EXPECT_DOUBLE_EQ(lambda, 0.5 + 0.5 + 1 + 1 + 2 + 1);
  const std::size_t n = 100000;
  std::vector<double> freq(probs.size(), 0.0);
  double hold = 0.0;
  Rng rng(2024);
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = step(x, p, rng);
    hold += r.dt;
    freq[static_cast<std::size_t>(event_code(r.event, 1))] += 1.0;
  }
  const double mean_hold = hold / static_cast<double>(n);
  EXPECT_NEAR(mean_hold, 1.0 / lambda, 3.0 * (1.0 / lambda) / std::sqrt(static_cast<double>(n)));
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double f = freq[c] / static_cast<double>(n);
    const double se = std::sqrt(probs[c] * (1 - probs[c]) / static_cast<double>(n));
    EXPECT_NEAR(f, probs[c], 3.0 * se + 1e-12) << "code " << c;
  }
}

TEST(Flow, StationarityOnset) {
  const auto p = ModelParams::flat(5, 1, 1, 1);
  SimulationOptions o;
  o.seed = 31;
  o.n_events = 1'000'000;
  const auto tr = simulate(p, o);
  std::vector<double> h1(7, 0.0), h2(7, 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) (k < tr.size() / 2 ? h1 : h2)[static_cast<std::size_t>(tr.spread[k])] += 2.0 / static_cast<double>(tr.size());
  EXPECT_LT(total_variation(h1, h2), 0.02);
}

TEST(Flow, InitialConditionForgotten) {
  const auto p = ModelParams::flat(5, 1, 1, 1);
  SimulationOptions o;
  o.seed = 8;
  o.n_events = 1'000'000;
  const auto a = stationary_estimators(simulate(p, o), p);
  o.seed = 9;
  o.initial_state = BookState{{0, 0, 0, 0, 40}, {0, 0, 0, 0, 3}, 0};
  const auto b = stationary_estimators(simulate(p, o), p);
  EXPECT_LT(total_variation(a.spread_histogram, b.spread_histogram), 0.02);
}

TEST(Flow, BadInitialStateRejected) {
  const auto p = ModelParams::flat(3, 1, 1, 1);
  SimulationOptions o;
  o.n_events = 10;
  o.initial_state = BookState{{1, 0, 0}, {0, 1, 0}, 0};
  EXPECT_THROW(simulate(p, o), std::invalid_argument);
}

TEST(Flow, ConstantModeRateIsStateFree) {
  const auto p = ModelParams::flat(5, 1, 0.1, 1, 1, 1, CancelMode::kConstant);
  Rng rng(1);
  const double lambda = total_rate(full_book(p), p);
  EXPECT_DOUBLE_EQ(lambda, 13.0);
  for (int k = 0; k < 200; ++k) EXPECT_DOUBLE_EQ(total_rate(lobsim::testing::random_state(p, rng), p), lambda);
}
