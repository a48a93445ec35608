#include <gtest/gtest.h>

#include <cmath>

#include "lobsim/toy.hpp"

using namespace lobsim;
using namespace lobsim::toy;

TEST(Toy, TheoreticalMoments) {
  ToyParams p;
  auto m = theoretical_moments(p);
  EXPECT_DOUBLE_EQ(m.mu, 0.0);
  EXPECT_DOUBLE_EQ(m.sigma, std::sqrt(2.0));
  p.u = 0.0;
  m = theoretical_moments(p);
  EXPECT_DOUBLE_EQ(m.mu, 0.0);
  EXPECT_DOUBLE_EQ(m.sigma, 0.0);
  p = ToyParams{2.0, 0.5, 0.3, 0.01};
  auto q = p;
  std::swap(q.lambda_plus, q.lambda_minus);
  EXPECT_DOUBLE_EQ(theoretical_moments(q).mu, -theoretical_moments(p).mu);
  EXPECT_DOUBLE_EQ(theoretical_moments(q).sigma, theoretical_moments(p).sigma);
}

TEST(Toy, Validation) {
  ToyParams p;
  p.u = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ToyParams{0.0, 0.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Toy, DegenerateCases) {
  ToyParams p;
  p.u = 0.0;
  p.n_events = 1000;
  for (double x : simulate_toy(p).price) EXPECT_EQ(x, 0.0);
  p = ToyParams{1.0, 0.0, 1.0, 1.0, 4, 1000};
  const auto path = simulate_toy(p);
  double prev = 0.0;
  for (double x : path.price) {
    EXPECT_TRUE(x == prev || x == prev + 1.0);
    prev = x;
  }
}

TEST(Toy, MoveProbability) {
  ToyParams p{1.0, 1.0, 0.3, 1.0, 12, 1'000'000};
  const auto path = simulate_toy(p);
  double moved = 0;
  for (bool b : path.moved) moved += b;
  const double n = static_cast<double>(p.n_events);
  EXPECT_NEAR(moved / n, 0.3, 4.0 * std::sqrt(0.3 * 0.7 / n));
}

TEST(Toy, DriftAndVarianceConverge) {
  const std::vector<ToyParams> triples{
      {1.0, 1.0, 1.0, 1.0, 1, 10'000'000}, {2.0, 1.0, 0.5, 1.0, 2, 10'000'000}, {0.5, 1.5, 0.8, 0.1, 3, 10'000'000}};
  for (const auto& p : triples) {
    const auto path = simulate_toy(p);
    const auto th = theoretical_moments(p);
    const double horizon = path.t.back();
    double qv = 0.0;
    for (bool b : path.moved) qv += b ? p.tick * p.tick : 0.0;
    EXPECT_NEAR(qv / horizon, th.sigma * th.sigma, 0.03 * th.sigma * th.sigma);
    const double mu_hat = path.price.back() / horizon;
    EXPECT_NEAR(mu_hat, th.mu, std::max(0.03 * std::abs(th.mu), 4.0 * th.sigma / std::sqrt(horizon)));
  }
}

TEST(Toy, GeneratorOnPolynomials) {
  ToyParams p{1.5, 0.5, 0.6, 1.0};
  const double x = 3.0;
  auto f1 = [](double y) { return y; };
  auto f2 = [](double y) { return y * y; };
  const double lf1 = generator(f1, x, p);
  const double lf2 = generator(f2, x, p);
  EXPECT_NEAR(lf1, theoretical_moments(p).mu, 1e-12);
  EXPECT_NEAR(lf2, 2 * x * lf1 + p.u * (p.lambda_plus + p.lambda_minus), 1e-12);

  // Short-time Monte Carlo of (E f(P_h) - f(x)) / h.
  const double h = 0.01;
  const std::size_t reps = 400'000;
  double s1 = 0, s1q = 0, s2 = 0, s2q = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng(77, r);
    double t = 0.0, y = x;
    while (true) {
      const auto e = next_event(p, rng);
      if (t + e.dt > h) break;
      t += e.dt;
      if (e.moved) y += e.direction * p.tick;
    }
    const double a = (f1(y) - f1(x)) / h, b = (f2(y) - f2(x)) / h;
    s1 += a;
    s1q += a * a;
    s2 += b;
    s2q += b * b;
  }
  const double n = static_cast<double>(reps);
  const double m1 = s1 / n, m2 = s2 / n;
  const double se1 = std::sqrt((s1q / n - m1 * m1) / n), se2 = std::sqrt((s2q / n - m2 * m2) / n);
  EXPECT_NEAR(m1, lf1, 3.0 * se1);
  EXPECT_NEAR(m2, lf2, 3.0 * se2 + h * 10);
}

TEST(Toy, FcltMeansAndIncrements) {
  ToyParams p{1.0, 1.0, 1.0, 1.0, 5};
  const auto rep = fclt_check(p, 10'000, 1000);
  ASSERT_EQ(rep.points.size(), 3u);
  for (const auto& pt : rep.points) EXPECT_LT(std::abs(pt.mean), 4.0 * pt.mean_se);
  EXPECT_LT(std::abs(rep.increment_correlation), 4.0 * rep.correlation_se);
  EXPECT_NEAR(rep.points[0].variance, 0.25, 0.25 * 0.2);
  EXPECT_NEAR(rep.points[1].variance, 0.5, 0.5 * 0.2);
}
