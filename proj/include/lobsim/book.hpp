#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lobsim/params.hpp"

namespace lobsim {

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

enum class EventType : std::uint8_t {
  kMarketBuy,   // M+, consumes the best ask
  kMarketSell,  // M-, consumes the best bid
  kLimitAsk,    // L_i+
  kLimitBid,    // L_i-
  kCancelAsk,   // C_i+
  kCancelBid,   // C_i-
};

/// One letter of the 2(2N+1)-event alphabet. `level` is 1-based for limit
/// and cancel events and 0 for market orders.
struct EventKind {
  EventType type = EventType::kMarketBuy;
  int level = 0;

  static constexpr EventKind market_buy() { return {EventType::kMarketBuy, 0}; }
  static constexpr EventKind market_sell() { return {EventType::kMarketSell, 0}; }
  static constexpr EventKind limit_ask(int i) { return {EventType::kLimitAsk, i}; }
  static constexpr EventKind limit_bid(int i) { return {EventType::kLimitBid, i}; }
  static constexpr EventKind cancel_ask(int i) { return {EventType::kCancelAsk, i}; }
  static constexpr EventKind cancel_bid(int i) { return {EventType::kCancelBid, i}; }

  constexpr Side side() const {
    switch (type) {
      case EventType::kMarketBuy:
      case EventType::kLimitAsk:
      case EventType::kCancelAsk:
        return Side::kAsk;
      default:
        return Side::kBid;
    }
  }

  friend constexpr bool operator==(const EventKind&, const EventKind&) = default;
};

/// Number of distinct events for a frame of size n: 2(2n+1).
constexpr int alphabet_size(int n) { return 2 * (2 * n + 1); }

/// Stable integer code of an event for frame size n:
///   0 market buy, 1 market sell, 2..n+1 limit ask, n+2..2n+1 limit bid,
///   2n+2..3n+1 cancel ask, 3n+2..4n+1 cancel bid.
constexpr int event_code(EventKind e, int n) {
  switch (e.type) {
    case EventType::kMarketBuy: return 0;
    case EventType::kMarketSell: return 1;
    case EventType::kLimitAsk: return 1 + e.level;
    case EventType::kLimitBid: return 1 + n + e.level;
    case EventType::kCancelAsk: return 1 + 2 * n + e.level;
    case EventType::kCancelBid: return 1 + 3 * n + e.level;
  }
  return -1;
}

inline EventKind event_from_code(int code, int n) {
  if (code < 0 || code >= alphabet_size(n)) {
    throw std::out_of_range("event code " + std::to_string(code) + " outside alphabet of size " +
                            std::to_string(alphabet_size(n)));
  }
  if (code == 0) return EventKind::market_buy();
  if (code == 1) return EventKind::market_sell();
  const int k = code - 2;
  const int level = k % n + 1;
  switch (k / n) {
    case 0: return EventKind::limit_ask(level);
    case 1: return EventKind::limit_bid(level);
    case 2: return EventKind::cancel_ask(level);
    default: return EventKind::cancel_bid(level);
  }
}

inline std::string to_string(EventKind e) {
  switch (e.type) {
    case EventType::kMarketBuy: return "M+";
    case EventType::kMarketSell: return "M-";
    case EventType::kLimitAsk: return "L" + std::to_string(e.level) + "+";
    case EventType::kLimitBid: return "L" + std::to_string(e.level) + "-";
    case EventType::kCancelAsk: return "C" + std::to_string(e.level) + "+";
    case EventType::kCancelBid: return "C" + std::to_string(e.level) + "-";
  }
  return "?";
}

/// Market order on a side whose in-frame queues are all empty.
class RejectedEvent : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

/// Book in the moving frame. Queue sizes are counts of unit orders.
///
/// ask[i-1] holds the orders i ticks above the best bid, bid[i-1] the orders
/// i ticks below the best ask (stored as magnitudes). Levels beyond N are
/// never stored; they hold the boundary volume by convention.
struct BookState {
  std::vector<std::int64_t> ask;
  std::vector<std::int64_t> bid;
  std::int64_t ask_price_ticks = 0;  // absolute tick index of the best ask

  int frame_size() const { return static_cast<int>(ask.size()); }
  const std::vector<std::int64_t>& queues(Side side) const { return side == Side::kAsk ? ask : bid; }
  std::vector<std::int64_t>& queues(Side side) { return side == Side::kAsk ? ask : bid; }

  friend bool operator==(const BookState&, const BookState&) = default;
};

/// Both sides filled with the boundary volume, spread of one tick.
inline BookState full_book(const ModelParams& p, std::int64_t ask_price_ticks = 0) {
  BookState s;
  s.ask.assign(static_cast<std::size_t>(p.frame_size), p.boundary_units(Side::kAsk));
  s.bid.assign(static_cast<std::size_t>(p.frame_size), p.boundary_units(Side::kBid));
  s.ask_price_ticks = ask_price_ticks;
  return s;
}

/// FNV-1a over the queue counts of both sides; ignores the price level.
inline std::uint64_t state_digest(const BookState& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::int64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  };
  mix(s.frame_size());
  for (auto c : s.ask) mix(c);
  for (auto c : s.bid) mix(c);
  return h;
}

/// Index of the first non-empty level, N+1 when the in-frame side is empty.
inline int first_nonempty(const std::vector<std::int64_t>& q) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(q.size()) + 1;
}

inline bool side_empty(const BookState& s, Side side) {
  return first_nonempty(s.queues(side)) > s.frame_size();
}

/// Spread in ticks, read off the ask side.
inline int spread_ticks(const BookState& s) { return first_nonempty(s.ask); }

inline std::int64_t bid_price_ticks(const BookState& s) { return s.ask_price_ticks - spread_ticks(s); }

/// Mid price in half ticks: best ask + best bid.
inline std::int64_t mid_half_ticks(const BookState& s) { return 2 * s.ask_price_ticks - spread_ticks(s); }

/// Total resting shares inside the frame (phi in the drift analysis).
inline std::int64_t total_shares(const BookState& s, const ModelParams& p) {
  std::int64_t n = 0;
  for (auto c : s.ask) n += c;
  for (auto c : s.bid) n += c;
  return n * p.unit;
}

/// True when both sides agree on the spread and it is at most N+1.
inline bool well_formed(const BookState& s) {
  if (s.ask.size() != s.bid.size() || s.ask.empty()) return false;
  for (auto c : s.ask) {
    if (c < 0) return false;
  }
  for (auto c : s.bid) {
    if (c < 0) return false;
  }
  return first_nonempty(s.ask) == first_nonempty(s.bid) && first_nonempty(s.ask) <= s.frame_size() + 1;
}

/// Mirror image: swaps the sides and negates prices. Symmetric parameters
/// make the mirrored book statistically identical with opposite price moves.
inline BookState mirror(const BookState& s) {
  BookState m;
  m.ask = s.bid;
  m.bid = s.ask;
  m.ask_price_ticks = -bid_price_ticks(s);
  return m;
}

// ---------------------------------------------------------------------------
// Depth functions
// ---------------------------------------------------------------------------

/// Cumulative shares within `i` ticks on one side; levels beyond N hold the
/// boundary volume.
inline std::int64_t depth(const BookState& s, const ModelParams& p, Side side, int i) {
  const auto& q = s.queues(side);
  const int n = s.frame_size();
  std::int64_t total = 0;
  for (int k = 0; k < std::min(i, n); ++k) total += q[static_cast<std::size_t>(k)] * p.unit;
  if (i > n) total += static_cast<std::int64_t>(i - n) * p.boundary(side);
  return total;
}

/// Generalised inverse: smallest level p with depth(p) > shares.
inline int inverse_depth(const BookState& s, const ModelParams& p, Side side, std::int64_t shares) {
  if (shares < 0) throw std::invalid_argument("inverse_depth: negative quantity");
  const auto& q = s.queues(side);
  const int n = s.frame_size();
  std::int64_t total = 0;
  for (int k = 0; k < n; ++k) {
    total += q[static_cast<std::size_t>(k)] * p.unit;
    if (total > shares) return k + 1;
  }
  // total <= shares here; each virtual level adds the boundary volume.
  const std::int64_t b = p.boundary(side);
  return n + static_cast<int>((shares - total) / b) + 1;
}

// ---------------------------------------------------------------------------
// Transitions
// ---------------------------------------------------------------------------

/// Price effect of one event. Mid moves are in half ticks.
struct Impact {
  std::int64_t d_mid_half_ticks = 0;
  std::int64_t d_spread_ticks = 0;

  friend bool operator==(const Impact&, const Impact&) = default;
};

namespace detail {

// Renumbering of the opposite side when its reference quote moves away:
// indices grow by k, empty levels enter near the quote, far levels drop out.
inline void shift_away(std::vector<std::int64_t>& q, int k) {
  const int n = static_cast<int>(q.size());
  if (k <= 0) return;
  for (int j = n - 1; j >= 0; --j) q[static_cast<std::size_t>(j)] = j - k >= 0 ? q[static_cast<std::size_t>(j - k)] : 0;
}

// Reference quote moves closer by m: indices shrink by m and the levels
// entering the far end of the frame are reset to the boundary volume.
inline void shift_toward(std::vector<std::int64_t>& q, int m, std::int64_t boundary_units) {
  const int n = static_cast<int>(q.size());
  if (m <= 0) return;
  for (int j = 0; j < n; ++j) q[static_cast<std::size_t>(j)] = j + m < n ? q[static_cast<std::size_t>(j + m)] : boundary_units;
}

// Removes `q` shares walking from the best level outwards:
// x_i <- [x_i - (q - X(i-1))_+]_+ with X the in-frame cumulative depth.
inline void consume(std::vector<std::int64_t>& counts, std::int64_t unit, std::int64_t q) {
  std::int64_t before = 0;
  for (auto& c : counts) {
    const std::int64_t shares = c * unit;
    const std::int64_t take = std::max<std::int64_t>(q - before, 0);
    before += shares;
    c = std::max<std::int64_t>(shares - take, 0) / unit;
  }
}

inline constexpr Side opposite(Side s) { return s == Side::kAsk ? Side::kBid : Side::kAsk; }

}  // namespace detail

inline void check_event(const BookState& s, EventKind e) {
  if (e.type == EventType::kMarketBuy || e.type == EventType::kMarketSell) {
    if (e.level != 0) throw std::invalid_argument("market event with a level");
  } else if (e.level < 1 || e.level > s.frame_size()) {
    throw std::invalid_argument("event " + to_string(e) + " outside frame of size " +
                                std::to_string(s.frame_size()));
  }
}

/// In-place form of apply_event.
inline void apply_event_inplace(BookState& s, const ModelParams& p, EventKind e) {
  check_event(s, e);
  const Side side = e.side();
  const Side other = detail::opposite(side);
  auto& own = s.queues(side);
  auto& opp = s.queues(other);
  const int best_before = first_nonempty(own);

  switch (e.type) {
    case EventType::kMarketBuy:
    case EventType::kMarketSell:
      if (best_before > s.frame_size()) {
        throw RejectedEvent(to_string(e) + ": no visible liquidity on the opposite side");
      }
      detail::consume(own, p.unit, p.unit);
      break;
    case EventType::kLimitAsk:
    case EventType::kLimitBid:
      own[static_cast<std::size_t>(e.level - 1)] += 1;
      break;
    case EventType::kCancelAsk:
    case EventType::kCancelBid:
      if (own[static_cast<std::size_t>(e.level - 1)] == 0) return;  // no-op
      own[static_cast<std::size_t>(e.level - 1)] -= 1;
      break;
  }

  const int best_after = first_nonempty(own);
  const int move = best_after - best_before;  // > 0: quote retreats, < 0: quote improves
  if (move > 0) {
    detail::shift_away(opp, move);
  } else if (move < 0) {
    detail::shift_toward(opp, -move, p.boundary_units(other));
  }
  // A retreating ask goes up; a retreating bid leaves the ask where it is.
  if (side == Side::kAsk) s.ask_price_ticks += move;
}

/// Applies one event: queue update, renumbering of the opposite side when
/// the best quote of the touched side moves, and the ask anchor update.
inline BookState apply_event(const BookState& s, const ModelParams& p, EventKind e) {
  BookState out = s;
  apply_event_inplace(out, p, e);
  return out;
}

/// Price and spread change of an event read off the depth profile of the
/// current state, without building the next state.
inline Impact price_impact(const BookState& s, const ModelParams& p, EventKind e) {
  check_event(s, e);
  const Side side = e.side();
  const int best = inverse_depth(s, p, side, 0);
  const auto retreat = [&] { return static_cast<std::int64_t>(inverse_depth(s, p, side, p.unit) - best); };

  std::int64_t move = 0;  // ticks; positive widens the spread
  switch (e.type) {
    case EventType::kMarketBuy:
    case EventType::kMarketSell:
      if (side_empty(s, side)) throw RejectedEvent(to_string(e) + ": no visible liquidity on the opposite side");
      move = retreat();
      break;
    case EventType::kLimitAsk:
    case EventType::kLimitBid:
      move = -std::max(best - e.level, 0);
      break;
    case EventType::kCancelAsk:
    case EventType::kCancelBid:
      if (e.level == best) move = retreat();
      break;
  }
  // Ask moves shift the mid up with the ask; bid moves shift it the other way.
  return Impact{side == Side::kAsk ? move : -move, move};
}

/// Instantaneous rate of an event in the given state.
inline double event_rate(const BookState& s, const ModelParams& p, EventKind e) {
  const Side side = e.side();
  switch (e.type) {
    case EventType::kMarketBuy:
    case EventType::kMarketSell:
      // Constant mode keeps the clock running; the order is then a no-op.
      if (p.cancel_mode == CancelMode::kConstant) return p.market_rate(side);
      return side_empty(s, side) ? 0.0 : p.market_rate(side);
    case EventType::kLimitAsk:
    case EventType::kLimitBid:
      return p.limit_rates(side)[static_cast<std::size_t>(e.level - 1)];
    case EventType::kCancelAsk:
    case EventType::kCancelBid: {
      const double r = p.cancel_rates(side)[static_cast<std::size_t>(e.level - 1)];
      if (p.cancel_mode == CancelMode::kConstant) return r;
      // lambda_i * x_i / q with x_i in shares, i.e. lambda_i * count.
      return r * static_cast<double>(s.queues(side)[static_cast<std::size_t>(e.level - 1)]);
    }
  }
  return 0.0;
}

/// Events that fire without changing the state. Only constant mode has
/// them: cancellations aimed at an empty level and market orders against a
/// side with no visible liquidity. They keep the total rate state-independent.
inline bool is_noop(const BookState& s, const ModelParams& p, EventKind e) {
  if (p.cancel_mode != CancelMode::kConstant) return false;
  switch (e.type) {
    case EventType::kMarketBuy:
    case EventType::kMarketSell:
      return side_empty(s, e.side());
    case EventType::kCancelAsk:
    case EventType::kCancelBid:
      return s.queues(e.side())[static_cast<std::size_t>(e.level - 1)] == 0;
    default:
      return false;
  }
}

/// Calls fn(event) for every letter of the alphabet in code order.
template <typename Fn>
void for_each_event(int n, Fn&& fn) {
  for (int c = 0; c < alphabet_size(n); ++c) fn(event_from_code(c, n));
}

struct Transition {
  EventKind event;
  double rate = 0.0;
  BookState next;
  Impact impact;
};

/// Every event with a positive rate that changes the state, with its target
/// state and price impact. No-op cancellations are left out.
inline std::vector<Transition> enumerate_transitions(const BookState& s, const ModelParams& p) {
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(alphabet_size(s.frame_size())));
  for_each_event(s.frame_size(), [&](EventKind e) {
    const double r = event_rate(s, p, e);
    if (r <= 0.0 || is_noop(s, p, e)) return;
    out.push_back(Transition{e, r, apply_event(s, p, e), price_impact(s, p, e)});
  });
  return out;
}

}  // namespace lobsim
