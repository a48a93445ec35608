#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lobsim/rng.hpp"

namespace lobsim::toy {

/// Constant-spread market maker: market orders arrive at rates lambda_plus
/// (buys) and lambda_minus (sells); each one moves the price by one tick in
/// its direction with probability u, when the maker refills the same side.
struct ToyParams {
  double lambda_plus = 1.0;
  double lambda_minus = 1.0;
  double u = 1.0;
  double tick = 1.0;
  std::uint64_t seed = 1;
  std::size_t n_events = 0;

  void validate() const {
    if (!(lambda_plus >= 0.0) || !(lambda_minus >= 0.0)) throw std::invalid_argument("toy: negative intensity");
    if (!(lambda_plus + lambda_minus > 0.0)) throw std::invalid_argument("toy: lambda_plus + lambda_minus must be > 0");
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("toy: u must lie in [0, 1]");
    if (!(tick > 0.0)) throw std::invalid_argument("toy: tick must be positive");
  }
};

struct ToyPath {
  std::vector<double> t;      // event times
  std::vector<double> price;  // price right after each event (starts from 0)
  std::vector<int> direction;  // +1 buy, -1 sell
  std::vector<bool> moved;     // Z for the event
};

struct Moments2 {
  double mu = 0.0;     // drift per unit time
  double sigma = 0.0;  // volatility per sqrt(unit time)
};

/// mu = tick (lambda+ - lambda-) u, sigma = tick sqrt((lambda+ + lambda-) u).
inline Moments2 theoretical_moments(const ToyParams& p) {
  return Moments2{p.tick * (p.lambda_plus - p.lambda_minus) * p.u,
                  p.tick * std::sqrt((p.lambda_plus + p.lambda_minus) * p.u)};
}

/// Generator applied to f at price x: u (lambda+ (f(x+dP) - f) + lambda- (f(x-dP) - f)).
template <typename F>
double generator(F&& f, double x, const ToyParams& p) {
  const double fx = f(x);
  return p.u * (p.lambda_plus * (f(x + p.tick) - fx) + p.lambda_minus * (f(x - p.tick) - fx));
}

/// One event of the toy model: advances `t` and `price`.
struct ToyEvent {
  double dt;
  int direction;
  bool moved;
};

inline ToyEvent next_event(const ToyParams& p, Rng& rng) {
  const double total = p.lambda_plus + p.lambda_minus;
  ToyEvent e;
  e.dt = rng.exponential(total);
  e.direction = rng.uniform() * total < p.lambda_plus ? +1 : -1;
  e.moved = rng.bernoulli(p.u);
  return e;
}

inline ToyPath simulate_toy(const ToyParams& p) {
  p.validate();
  Rng rng(p.seed);
  ToyPath path;
  path.t.reserve(p.n_events);
  path.price.reserve(p.n_events);
  double t = 0.0, price = 0.0;
  for (std::size_t k = 0; k < p.n_events; ++k) {
    const auto e = next_event(p, rng);
    t += e.dt;
    if (e.moved) price += e.direction * p.tick;
    path.t.push_back(t);
    path.price.push_back(price);
    path.direction.push_back(e.direction);
    path.moved.push_back(e.moved);
  }
  return path;
}

struct FcltPoint {
  double t = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;  // standard error of the mean
};

struct FcltReport {
  std::vector<FcltPoint> points;           // t = 0.25, 0.5, 1
  double increment_correlation = 0.0;      // between [0, .5] and [.5, 1]
  double correlation_se = 0.0;             // 1 / sqrt(replicas)
  std::size_t replicas = 0;
  double n = 0.0;
};

/// Monte-Carlo of (P(nt) - n mu t) / (sqrt(n) sigma) over independent
/// replicas; replica r uses stream r of the seed.
inline FcltReport fclt_check(const ToyParams& p, double n, std::size_t replicas) {
  p.validate();
  const auto th = theoretical_moments(p);
  if (!(th.sigma > 0.0)) throw std::invalid_argument("fclt_check: sigma is zero");
  const std::vector<double> ts{0.25, 0.5, 1.0};
  std::vector<std::vector<double>> x(ts.size(), std::vector<double>(replicas));
  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng(p.seed, r);
    double t = 0.0, price = 0.0;
    std::size_t j = 0;
    while (j < ts.size()) {
      const auto e = next_event(p, rng);
      // Record every checkpoint passed before this event lands.
      while (j < ts.size() && t + e.dt > n * ts[j]) {
        x[j][r] = (price - n * th.mu * ts[j]) / (std::sqrt(n) * th.sigma);
        ++j;
      }
      t += e.dt;
      if (e.moved) price += e.direction * p.tick;
    }
  }
  FcltReport rep;
  rep.replicas = replicas;
  rep.n = n;
  const double rn = static_cast<double>(replicas);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    double m = 0.0;
    for (double v : x[j]) m += v;
    m /= rn;
    double v2 = 0.0;
    for (double v : x[j]) v2 += (v - m) * (v - m);
    v2 /= rn - 1.0;
    rep.points.push_back(FcltPoint{ts[j], m, v2, std::sqrt(v2 / rn)});
  }
  // Increments over [0, 0.5] and [0.5, 1].
  std::vector<double> d1(replicas), d2(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    d1[r] = x[1][r];
    d2[r] = x[2][r] - x[1][r];
  }
  double m1 = 0, m2 = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    m1 += d1[r];
    m2 += d2[r];
  }
  m1 /= rn;
  m2 /= rn;
  double s11 = 0, s22 = 0, s12 = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    s11 += (d1[r] - m1) * (d1[r] - m1);
    s22 += (d2[r] - m2) * (d2[r] - m2);
    s12 += (d1[r] - m1) * (d2[r] - m2);
  }
  rep.increment_correlation = s12 / std::sqrt(s11 * s22);
  rep.correlation_se = 1.0 / std::sqrt(rn);
  return rep;
}

}  // namespace lobsim::toy
