#pragma once

#include <cstdint>
#include <vector>

#include "lobsim/lobsim.hpp"

namespace lobsim::testing {

/// Book of the worked example: N = 9, q = 1, a_inf = |b_inf| = 4, spread 5.
inline ModelParams fig2_params() { return ModelParams::flat(9, 1.0, 1.0, 1.0, 4); }

inline BookState fig2_state() {
  BookState s;
  s.ask = {0, 0, 0, 0, 1, 3, 5, 4, 2};
  s.bid = {0, 0, 0, 0, 1, 0, 4, 5, 3};
  s.ask_price_ticks = 100;
  return s;
}

inline ModelParams baseline_params() { return ModelParams::flat(10, 1.0, 1.0, 1.0); }

/// Random well-formed book with queues of at most `max_count` orders.
inline BookState random_state(const ModelParams& p, Rng& rng, std::int64_t max_count = 6) {
  const int n = p.frame_size;
  BookState s;
  s.ask.assign(static_cast<std::size_t>(n), 0);
  s.bid.assign(static_cast<std::size_t>(n), 0);
  const int spread = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n + 1));
  for (int i = spread; i <= n; ++i) {
    s.ask[static_cast<std::size_t>(i - 1)] = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_count + 1));
    s.bid[static_cast<std::size_t>(i - 1)] = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_count + 1));
  }
  if (spread <= n) {
    s.ask[static_cast<std::size_t>(spread - 1)] = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_count));
    s.bid[static_cast<std::size_t>(spread - 1)] = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_count));
  }
  s.ask_price_ticks = static_cast<std::int64_t>(rng() % 1000);
  return s;
}

/// Short-time Monte-Carlo of (E[f(X_h)] - f(x)) / h: mean and standard error.
template <typename F>
std::pair<double, double> short_time_generator(F&& f, const BookState& x, const ModelParams& p, double h,
                                               std::size_t replicas, std::uint64_t seed) {
  Stepper stepper(p);
  const double fx = f(x);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng(seed, r);
    BookState s = x;
    double t = 0.0;
    while (true) {
      BookState before = s;
      const double dt = stepper.advance(s, rng).first;
      if (t + dt > h) {
        s = before;
        break;
      }
      t += dt;
    }
    const double v = (f(s) - fx) / h;
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(replicas);
  const double m = sum / n;
  const double var = (sum2 - n * m * m) / (n - 1.0);
  return {m, std::sqrt(var / n)};
}

}  // namespace lobsim::testing
