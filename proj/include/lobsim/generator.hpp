#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lobsim/book.hpp"
#include "lobsim/flow.hpp"
#include "lobsim/params.hpp"
#include "lobsim/rng.hpp"

namespace lobsim {

/// (Lf)(x) = sum over transitions of rate * (f(x') - f(x)). Exact.
template <typename F>
double apply_generator(F&& f, const BookState& s, const ModelParams& p) {
  const double fx = f(s);
  double acc = 0.0;
  for (const auto& tr : enumerate_transitions(s, p)) acc += tr.rate * (f(tr.next) - fx);
  return acc;
}

/// (Df)(x) = E[f(X_{n+1}) - f(X_n) | X_n = x] for the jump chain.
template <typename F>
double apply_drift_operator(F&& f, const BookState& s, const ModelParams& p) {
  const double total = total_rate(s, p);
  if (!(total > 0.0)) throw ZeroRateError("apply_drift_operator: total event rate is zero");
  return apply_generator(std::forward<F>(f), s, p) / total;
}

/// Total shares in the book plus one unit.
inline double lyapunov_linear(const BookState& s, const ModelParams& p) {
  return static_cast<double>(total_shares(s, p) + p.unit);
}

/// z^phi(x), phi = total shares. Overflows for large phi; the drift checks
/// work with ratios instead.
inline double lyapunov_exp(const BookState& s, const ModelParams& p, double z) {
  if (!(z > 1.0)) throw std::invalid_argument("lyapunov_exp: z must be > 1");
  return std::pow(z, static_cast<double>(total_shares(s, p)));
}

// ---------------------------------------------------------------------------
// Drift checks
// ---------------------------------------------------------------------------

struct DriftRecord {
  std::int64_t phi = 0;      // total shares
  double log_v = 0.0;        // log V(x)
  double drift = 0.0;        // LV(x) or DV(x); +inf-safe only in the linear case
  double drift_ratio = 0.0;  // drift / V
  std::uint64_t state = 0;   // state_digest of the sampled state
};

struct DriftReport {
  enum class Kind { kContinuous, kEmbedded };
  Kind kind = Kind::kContinuous;
  std::vector<DriftRecord> records;
  double beta = 0.0;
  double gamma = 0.0;
  double z = 0.0;            // embedded check only
  std::int64_t threshold = 0;  // A: every sampled state with phi > A has drift/V <= -beta
  std::size_t small_set_size = 0;  // sampled states with phi <= A
  std::size_t tail_size = 0;       // sampled states with phi > A
  bool pass = false;
};

namespace detail {

inline void finish_report(DriftReport& rep) {
  std::int64_t threshold = 0;
  for (const auto& r : rep.records) {
    if (r.drift_ratio > -rep.beta) threshold = std::max(threshold, r.phi);
  }
  rep.threshold = threshold;
  rep.small_set_size = 0;
  rep.tail_size = 0;
  for (const auto& r : rep.records) (r.phi <= threshold ? rep.small_set_size : rep.tail_size) += 1;
}

}  // namespace detail

/// Continuous-time check of LV <= -beta V + gamma with V the linear function
/// and beta = min cancel rate / 2. gamma is the least constant that works on
/// the sample. Passes when gamma is finite and the sample reaches beyond a
/// level A past which LV/V <= -beta.
inline DriftReport drift_check_continuous(const ModelParams& p, const std::vector<BookState>& sample) {
  validate(p);
  if (p.cancel_mode != CancelMode::kProportional) {
    throw std::invalid_argument(
        "drift_check_continuous: needs proportional cancellations; use stability_condition in constant mode");
  }
  DriftReport rep;
  rep.kind = DriftReport::Kind::kContinuous;
  rep.beta = p.min_cancel_rate() / 2.0;
  double gamma = 0.0;
  for (const auto& s : sample) {
    const double v = lyapunov_linear(s, p);
    const double lv = apply_generator([&](const BookState& x) { return lyapunov_linear(x, p); }, s, p);
    rep.records.push_back(DriftRecord{total_shares(s, p), std::log(v), lv, lv / v, state_digest(s)});
    gamma = std::max(gamma, lv + rep.beta * v);
  }
  rep.gamma = gamma;
  detail::finish_report(rep);
  rep.pass = std::isfinite(gamma) && rep.tail_size > 0;
  return rep;
}

/// DV/V for V = z^phi, computed as sum_e p(e|x) (z^(phi' - phi) - 1).
inline double exp_drift_ratio(const BookState& s, const ModelParams& p, double z) {
  const double total = total_rate(s, p);
  if (!(total > 0.0)) throw ZeroRateError("exp_drift_ratio: total event rate is zero");
  const auto phi = total_shares(s, p);
  double acc = 0.0;
  for (const auto& tr : enumerate_transitions(s, p)) {
    const auto d = total_shares(tr.next, p) - phi;
    acc += tr.rate * std::expm1(static_cast<double>(d) * std::log(z));
  }
  return acc / total;
}

/// The large-phi limit of the bound on DV/V: lambda_min (z^-q - 1) / lambda_max.
inline double embedded_drift_limit(const ModelParams& p, double z) {
  return p.min_cancel_rate() * (std::pow(z, -static_cast<double>(p.unit)) - 1.0) / p.max_cancel_rate();
}

/// Jump-chain check of DV <= -beta V + gamma 1_C with V = z^phi and
/// beta = lambda_min (1 - z^-q) / (2 lambda_max).
inline DriftReport drift_check_embedded(const ModelParams& p, double z, const std::vector<BookState>& sample) {
  if (!(z > 1.0)) throw std::invalid_argument("drift_check_embedded: z must be > 1");
  validate(p);
  if (p.cancel_mode != CancelMode::kProportional) {
    throw std::invalid_argument("drift_check_embedded: needs proportional cancellations");
  }
  DriftReport rep;
  rep.kind = DriftReport::Kind::kEmbedded;
  rep.z = z;
  rep.beta = -embedded_drift_limit(p, z) / 2.0;
  for (const auto& s : sample) {
    const auto phi = total_shares(s, p);
    const double log_v = static_cast<double>(phi) * std::log(z);
    const double ratio = exp_drift_ratio(s, p, z);
    rep.records.push_back(DriftRecord{phi, log_v, ratio * std::exp(log_v), ratio, state_digest(s)});
  }
  detail::finish_report(rep);
  double gamma = 0.0;
  for (const auto& r : rep.records) {
    if (r.phi <= rep.threshold) gamma = std::max(gamma, r.drift + rep.beta * std::exp(r.log_v));
  }
  rep.gamma = gamma;
  rep.pass = std::isfinite(gamma) && rep.tail_size > 0;
  return rep;
}

/// A valid state with roughly `phi` shares spread uniformly over both
/// sides and a one-tick spread.
inline BookState heavy_state(const ModelParams& p, std::int64_t phi, Rng& rng) {
  BookState s;
  const auto n = static_cast<std::size_t>(p.frame_size);
  s.ask.assign(n, 0);
  s.bid.assign(n, 0);
  const std::int64_t units = std::max<std::int64_t>(phi / p.unit, 2);
  s.ask[0] = 1;
  s.bid[0] = 1;
  for (std::int64_t k = 2; k < units; ++k) {
    auto& side = rng.bernoulli(0.5) ? s.ask : s.bid;
    side[static_cast<std::size_t>(rng() % n)] += 1;
  }
  return s;
}

/// States visited by a simulation (one every `stride` events after burn-in)
/// plus `n_heavy` adversarial states with phi spread up to `max_phi`.
inline std::vector<BookState> drift_sample(const ModelParams& p, std::uint64_t seed, std::size_t n_visited,
                                           std::size_t n_heavy, std::int64_t max_phi,
                                           std::size_t stride = 10, std::size_t burn_in = 10'000) {
  SimulationOptions opt;
  opt.seed = seed;
  opt.n_events = n_visited * stride;
  opt.burn_in = burn_in;
  opt.snapshot_stride = stride;
  const Trace tr = simulate(p, opt);
  std::vector<BookState> out;
  out.reserve(n_visited + n_heavy);
  for (const auto& snap : tr.snapshots) out.push_back(snap.state);
  Rng rng(seed, 0xd21f7);
  for (std::size_t k = 1; k <= n_heavy; ++k) {
    const auto phi = static_cast<std::int64_t>(static_cast<double>(max_phi) * static_cast<double>(k) /
                                               static_cast<double>(n_heavy));
    out.push_back(heavy_state(p, std::max<std::int64_t>(phi, 2 * p.unit), rng));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-proportional stability condition
// ---------------------------------------------------------------------------

struct StabilityResult {
  bool holds = false;
  double lhs = 0.0;  // market + cancellation rates
  double rhs = 0.0;  // limit rates * (1 + N d_inf / q)
  double margin = 0.0;
  /// lambda^M + N lambda^C - N lambda^L (1 + N d_inf); set when q = 1 and
  /// the rates are flat and symmetric.
  std::optional<double> symmetric_margin;
};

inline bool flat_symmetric(const ModelParams& p) {
  auto flat = [](const std::vector<double>& v, double x) {
    return std::all_of(v.begin(), v.end(), [&](double y) { return y == x; });
  };
  const double l = p.rate_limit_ask.front();
  const double c = p.rate_cancel_ask.front();
  return p.rate_market_buy == p.rate_market_sell && flat(p.rate_limit_ask, l) && flat(p.rate_limit_bid, l) &&
         flat(p.rate_cancel_ask, c) && flat(p.rate_cancel_bid, c);
}

/// Sufficient condition for V-uniform ergodicity with constant cancellations:
/// lambda^M+ + lambda^M- + Lambda^C+ + Lambda^C- > (Lambda^L+ + Lambda^L-)(1 + N d_inf / q).
inline StabilityResult stability_condition(const ModelParams& p) {
  validate(p);
  if (p.cancel_mode != CancelMode::kConstant) {
    throw std::invalid_argument("stability_condition: only meaningful in constant mode; proportional books are "
                                "always ergodic when every cancel rate is positive");
  }
  StabilityResult r;
  const double n = p.frame_size;
  r.lhs = p.rate_market_buy + p.rate_market_sell + sum(p.rate_cancel_ask) + sum(p.rate_cancel_bid);
  r.rhs = (sum(p.rate_limit_ask) + sum(p.rate_limit_bid)) *
          (1.0 + n * static_cast<double>(p.max_boundary()) / static_cast<double>(p.unit));
  r.margin = r.lhs - r.rhs;
  r.holds = r.margin > 0.0;
  if (p.unit == 1 && flat_symmetric(p)) {
    const double lm = p.rate_market_buy;
    const double lc = p.rate_cancel_ask.front();
    const double ll = p.rate_limit_ask.front();
    r.symmetric_margin = lm + n * lc - n * ll * (1.0 + n * static_cast<double>(p.max_boundary()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Conditional drifts of mid and spread
// ---------------------------------------------------------------------------

struct ConditionalDrifts {
  double mid = 0.0;     // E[dP | x] / dt, price units per unit time
  double spread = 0.0;  // E[dS | x] / dt
};

/// Closed-form conditional drifts from the depth profile.
inline ConditionalDrifts conditional_drifts(const BookState& s, const ModelParams& p) {
  const int n = s.frame_size();
  const int best_ask = inverse_depth(s, p, Side::kAsk, 0);
  const int best_bid = inverse_depth(s, p, Side::kBid, 0);
  const double ask_retreat = inverse_depth(s, p, Side::kAsk, p.unit) - best_ask;
  const double bid_retreat = inverse_depth(s, p, Side::kBid, p.unit) - best_bid;

  const double market_ask = side_empty(s, Side::kAsk) ? 0.0 : p.rate_market_buy;
  const double market_bid = side_empty(s, Side::kBid) ? 0.0 : p.rate_market_sell;

  // Cancellation intensity at the best level (zero when it lies beyond the frame).
  auto best_cancel = [&](Side side, int best) {
    if (best > n) return 0.0;
    return event_rate(s, p, side == Side::kAsk ? EventKind::cancel_ask(best) : EventKind::cancel_bid(best));
  };
  const double cancel_ask = best_cancel(Side::kAsk, best_ask);
  const double cancel_bid = best_cancel(Side::kBid, best_bid);

  double improve_ask = 0.0;  // sum_i (A^-1(0) - i)_+ lambda_i^L+
  double improve_bid = 0.0;  // sum_i (B^-1(0) - i)_+ lambda_i^L-
  for (int i = 1; i <= n; ++i) {
    improve_ask += std::max(best_ask - i, 0) * p.rate_limit_ask[static_cast<std::size_t>(i - 1)];
    improve_bid += std::max(best_bid - i, 0) * p.rate_limit_bid[static_cast<std::size_t>(i - 1)];
  }

  ConditionalDrifts d;
  d.mid = p.tick / 2.0 *
          (ask_retreat * market_ask - bid_retreat * market_bid - improve_ask + improve_bid +
           ask_retreat * cancel_ask - bid_retreat * cancel_bid);
  d.spread = p.tick * (ask_retreat * market_ask + bid_retreat * market_bid - improve_ask - improve_bid +
                       ask_retreat * cancel_ask + bid_retreat * cancel_bid);
  return d;
}

/// Same drifts summed over the transition list: sum rate * impact.
inline ConditionalDrifts enumerated_drifts(const BookState& s, const ModelParams& p) {
  ConditionalDrifts d;
  for (const auto& tr : enumerate_transitions(s, p)) {
    d.mid += tr.rate * static_cast<double>(tr.impact.d_mid_half_ticks) * p.tick / 2.0;
    d.spread += tr.rate * static_cast<double>(tr.impact.d_spread_ticks) * p.tick;
  }
  return d;
}

}  // namespace lobsim
