#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lobsim/book.hpp"
#include "lobsim/params.hpp"
#include "lobsim/rng.hpp"

namespace lobsim {

/// Raised when a state has no active event.
class ZeroRateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lambda(x): sum of all event rates, including the constant-mode no-ops.
inline double total_rate(const BookState& s, const ModelParams& p) {
  double total = 0.0;
  for_each_event(s.frame_size(), [&](EventKind e) { total += event_rate(s, p, e); });
  return total;
}

/// Jump-chain law: probability of each event code given the state.
inline std::vector<double> embedded_probabilities(const BookState& s, const ModelParams& p) {
  std::vector<double> probs(static_cast<std::size_t>(alphabet_size(s.frame_size())));
  double total = 0.0;
  for_each_event(s.frame_size(), [&](EventKind e) {
    const double r = event_rate(s, p, e);
    probs[static_cast<std::size_t>(event_code(e, s.frame_size()))] = r;
    total += r;
  });
  if (!(total > 0.0)) throw ZeroRateError("embedded_probabilities: total event rate is zero");
  for (auto& x : probs) x /= total;
  return probs;
}

struct StepResult {
  double dt = 0.0;
  EventKind event;
  BookState next;
};

/// Competing exponential clocks, sampled as one exponential holding time of
/// rate Lambda(x) followed by a categorical draw of the event.
class Stepper {
 public:
  explicit Stepper(const ModelParams& p)
      : params_(&p), rates_(static_cast<std::size_t>(alphabet_size(p.frame_size))) {}

  /// Advances `state` in place. Returns the holding time and the event.
  std::pair<double, EventKind> advance(BookState& state, Rng& rng) {
    const int n = state.frame_size();
    double total = 0.0;
    for (int c = 0; c < alphabet_size(n); ++c) {
      const double r = event_rate(state, *params_, event_from_code(c, n));
      rates_[static_cast<std::size_t>(c)] = r;
      total += r;
    }
    if (!(total > 0.0)) throw ZeroRateError("step: total event rate is zero");
    const double dt = rng.exponential(total);
    const double target = rng.uniform() * total;
    int code = 0;
    double acc = 0.0;
    int last_active = 0;
    for (int c = 0; c < alphabet_size(n); ++c) {
      const double r = rates_[static_cast<std::size_t>(c)];
      if (r <= 0.0) continue;
      last_active = c;
      acc += r;
      if (target < acc) break;
    }
    code = last_active;  // guards against round-off in the cumulative sum
    const EventKind e = event_from_code(code, n);
    if (!is_noop(state, *params_, e)) apply_event_inplace(state, *params_, e);
    return {dt, e};
  }

 private:
  const ModelParams* params_;
  std::vector<double> rates_;
};

/// One exact jump of the continuous-time chain.
inline StepResult step(const BookState& s, const ModelParams& p, Rng& rng) {
  Stepper stepper(p);
  StepResult out;
  out.next = s;
  auto [dt, e] = stepper.advance(out.next, rng);
  out.dt = dt;
  out.event = e;
  return out;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct Snapshot {
  double t = 0.0;
  std::size_t event_index = 0;  // state right after events[event_index]
  BookState state;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// Recorded sample path, one entry per event after burn-in. Column `mid`
/// and `spread` hold the values right after the event; `start_*` hold the
/// values at the beginning of the recording.
struct Trace {
  std::vector<double> t;
  std::vector<std::int32_t> code;
  std::vector<std::int64_t> mid;
  std::vector<std::int32_t> spread;
  std::vector<Snapshot> snapshots;

  std::uint64_t seed = 0;
  std::string params_digest;
  int frame_size = 0;
  double start_time = 0.0;
  std::int64_t start_mid = 0;
  std::int32_t start_spread = 0;
  bool halted = false;  // the chain reached a state with zero total rate

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct SimulationOptions {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::size_t n_events = 0;
  std::size_t burn_in = 100'000;
  std::size_t snapshot_stride = 0;  // 0 disables snapshots
  std::optional<BookState> initial_state;  // defaults to full_book(params)
};

/// Runs the chain for burn_in + n_events jumps and records the last
/// n_events. Deterministic given (params, options).
inline Trace simulate(const ModelParams& p, const SimulationOptions& opt) {
  validate(p);
  BookState state = opt.initial_state.value_or(full_book(p));
  if (state.frame_size() != p.frame_size || !well_formed(state)) {
    throw std::invalid_argument("simulate: initial state does not match the parameters");
  }
  Rng rng(opt.seed, opt.stream);
  Stepper stepper(p);
  Trace tr;
  tr.seed = opt.seed;
  tr.params_digest = params_digest(p);
  tr.frame_size = p.frame_size;

  double t = 0.0;
  try {
    for (std::size_t k = 0; k < opt.burn_in; ++k) t += stepper.advance(state, rng).first;
  } catch (const ZeroRateError&) {
    tr.halted = true;
  }
  tr.start_time = t;
  tr.start_mid = mid_half_ticks(state);
  tr.start_spread = spread_ticks(state);
  if (tr.halted) return tr;

  tr.t.reserve(opt.n_events);
  tr.code.reserve(opt.n_events);
  tr.mid.reserve(opt.n_events);
  tr.spread.reserve(opt.n_events);
  for (std::size_t k = 0; k < opt.n_events; ++k) {
    std::pair<double, EventKind> jump;
    try {
      jump = stepper.advance(state, rng);
    } catch (const ZeroRateError&) {
      tr.halted = true;
      break;
    }
    t += jump.first;
    tr.t.push_back(t);
    tr.code.push_back(event_code(jump.second, p.frame_size));
    tr.mid.push_back(mid_half_ticks(state));
    tr.spread.push_back(spread_ticks(state));
    if (opt.snapshot_stride > 0 && (k + 1) % opt.snapshot_stride == 0) {
      tr.snapshots.push_back(Snapshot{t, k, state});
    }
  }
  return tr;
}

/// Seeds for `count` replicas derived from one master seed.
inline std::vector<std::uint64_t> replica_seeds(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = splitmix64(master ^ splitmix64(i + 0x51a7ULL));
  return seeds;
}

/// Independent replicas, one per seed, computed on up to `threads` workers
/// (0 = hardware concurrency). Output order follows `seeds`; each replica
/// equals simulate() with the same seed.
inline std::vector<Trace> simulate_replicas(const ModelParams& p, const std::vector<std::uint64_t>& seeds,
                                            SimulationOptions opt, unsigned threads = 0) {
  validate(p);
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("simulate_replicas: duplicate seeds");
  }
  std::vector<Trace> out(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1)));

  auto worker = [&](unsigned w) {
    for (std::size_t i = w; i < seeds.size(); i += threads) {
      SimulationOptions o = opt;
      o.seed = seeds[i];
      out[i] = simulate(p, o);
    }
  };
  if (threads <= 1) {
    worker(0);
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  pool.clear();  // joins
  return out;
}

}  // namespace lobsim
