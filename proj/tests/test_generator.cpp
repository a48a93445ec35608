#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace lobsim;

TEST(Generator, LinearFunctionClosedForm) {
  // L(phi) = q (sum limit rates) - q (market rates) - q (sum of cancel rates)
  // away from the frame edges of a book with every level filled.
  const auto p = ModelParams::flat(4, 1, 1, 1, 1);
  BookState s{{3, 2, 2, 2}, {3, 1, 2, 2}, 0};
  const double lv = apply_generator([&](const BookState& x) { return lyapunov_linear(x, p); }, s, p);
  const double cancels = static_cast<double>(total_shares(s, p));
  EXPECT_DOUBLE_EQ(lv, 8.0 - 2.0 - cancels);
}

TEST(Generator, MatchesShortTimeMonteCarlo) {
  const auto p = ModelParams::flat(4, 1, 1, 1, 2);
  Rng rng(55);
  for (int k = 0; k < 3; ++k) {
    const auto x = lobsim::testing::random_state(p, rng, 5);
    auto f = [&](const BookState& s) { return lyapunov_linear(s, p); };
    const double exact = apply_generator(f, x, p);
    const double h = 0.02 / total_rate(x, p);
    const auto [mc, se] = lobsim::testing::short_time_generator(f, x, p, h, 50000, 1000 + k);
    EXPECT_NEAR(mc, exact, 3.5 * se);
  }
}

TEST(Generator, DriftOperatorIsGeneratorOverRate) {
  const auto p = ModelParams::flat(3, 1, 1, 1, 2);
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const auto x = lobsim::testing::random_state(p, rng);
    auto f = [&](const BookState& s) { return lyapunov_exp(s, p, 1.1); };
    EXPECT_NEAR(apply_drift_operator(f, x, p) * total_rate(x, p), apply_generator(f, x, p),
                1e-9 * std::abs(apply_generator(f, x, p)) + 1e-12);
  }
}

TEST(Drift, ContinuousCheckPassesForPositiveCancels) {
  const std::vector<ModelParams> matrix{
      ModelParams::flat(3, 1, 1, 1), ModelParams::flat(5, 2, 0.5, 0.2, 3),
      ModelParams::flat(4, 0.1, 3, 0.05, 2, 2)};
  for (const auto& p : matrix) {
    const auto sample = drift_sample(p, 3, 500, 50, 5000, 10, 2000);
    const auto rep = drift_check_continuous(p, sample);
    EXPECT_TRUE(rep.pass) << canonical_string(p);
    EXPECT_DOUBLE_EQ(rep.beta, p.min_cancel_rate() / 2.0);
    for (const auto& r : rep.records) EXPECT_LE(r.drift, -rep.beta * std::exp(r.log_v) + rep.gamma + 1e-9);
  }
}

TEST(Drift, EmbeddedCheck) {
  const auto p = lobsim::testing::baseline_params();
  const auto sample = drift_sample(p, 4, 1000, 100, 20000);
  const auto rep = drift_check_embedded(p, 1.05, sample);
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.beta, 0.0);
  EXPECT_GT(rep.tail_size, 0u);
  for (const auto& r : rep.records) {
    if (r.phi > rep.threshold) {
      EXPECT_LE(r.drift_ratio, -rep.beta);
    }
  }
  EXPECT_THROW(drift_check_embedded(p, 1.0, sample), std::invalid_argument);
}

TEST(Drift, ConstantModeRefused) {
  const auto p = ModelParams::flat(3, 1, 1, 1, 1, 1, CancelMode::kConstant);
  EXPECT_THROW(drift_check_continuous(p, {full_book(p)}), std::invalid_argument);
}

TEST(Stability, WorkedExample) {
  const auto p = ModelParams::flat(2, 1.0, 0.1, 1.0, 5, 1, CancelMode::kConstant);
  const auto r = stability_condition(p);
  EXPECT_DOUBLE_EQ(r.lhs, 6.0);
  EXPECT_NEAR(r.rhs, 4.4, 1e-12);
  EXPECT_NEAR(r.margin, 1.6, 1e-12);
  EXPECT_TRUE(r.holds);
  ASSERT_TRUE(r.symmetric_margin.has_value());
  EXPECT_NEAR(*r.symmetric_margin, 0.8, 1e-12);
}

TEST(Stability, ScalingAndViolation) {
  auto p = ModelParams::flat(3, 1.0, 0.2, 0.5, 2, 1, CancelMode::kConstant);
  const auto r = stability_condition(p);
  auto scaled = ModelParams::flat(3, 2.5, 0.5, 1.25, 2, 1, CancelMode::kConstant);
  EXPECT_NEAR(stability_condition(scaled).margin, 2.5 * r.margin, 1e-12);
  const auto bad = ModelParams::flat(3, 1.0, 1.0, 0.1, 4, 1, CancelMode::kConstant);
  EXPECT_FALSE(stability_condition(bad).holds);
  EXPECT_THROW(stability_condition(ModelParams::flat(3, 1, 1, 1)), std::invalid_argument);
}

TEST(ConditionalDrift, ClosedFormMatchesEnumeration) {
  for (auto mode : {CancelMode::kProportional, CancelMode::kConstant}) {
    auto p = ModelParams::flat(6, 1.3, 0.7, 0.4, 3, 1, mode);
    p.rate_limit_ask = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    p.rate_cancel_bid = {0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
    p.rate_market_sell = 0.6;
    Rng rng(11);
    for (int k = 0; k < 300; ++k) {
      const auto x = lobsim::testing::random_state(p, rng, 4);
      const auto a = conditional_drifts(x, p);
      const auto b = enumerated_drifts(x, p);
      EXPECT_NEAR(a.mid, b.mid, 1e-12 * std::max(1.0, std::abs(b.mid)));
      EXPECT_NEAR(a.spread, b.spread, 1e-12 * std::max(1.0, std::abs(b.spread)));
    }
  }
}
