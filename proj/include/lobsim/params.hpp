#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lobsim {

/// Thrown when model parameters or a configuration violate their invariants.
class ParamError : public std::invalid_argument {
 public:
  ParamError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  /// Name of the offending field, e.g. "rate_cancel_bid[3]".
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class CancelMode : std::uint8_t {
  kProportional,  ///< each resting order dies at rate lambda_i (level rate = lambda_i * count)
  kConstant,      ///< one cancellation clock per level, independent of the queue size
};

inline const char* to_string(CancelMode mode) {
  return mode == CancelMode::kProportional ? "proportional" : "constant";
}

inline CancelMode cancel_mode_from_string(const std::string& s) {
  if (s == "proportional") return CancelMode::kProportional;
  if (s == "constant") return CancelMode::kConstant;
  throw ParamError("cancel_mode", "expected \"proportional\" or \"constant\", got \"" + s + "\"");
}

enum class Side : std::uint8_t { kAsk, kBid };

/// Parameters of the 2N-level moving-frame book.
///
/// Volumes are integers. `boundary_ask` and `boundary_bid` are share counts
/// (the bid one is a magnitude) and must be positive multiples of `unit`.
struct ModelParams {
  int frame_size = 1;            // N, ticks per side
  std::int64_t unit = 1;         // q, shares per order
  double tick = 1.0;             // price of one tick
  double rate_market_buy = 0.0;  // hits the ask
  double rate_market_sell = 0.0;
  std::vector<double> rate_limit_ask;   // index 0 is level 1
  std::vector<double> rate_limit_bid;
  std::vector<double> rate_cancel_ask;
  std::vector<double> rate_cancel_bid;
  std::int64_t boundary_ask = 1;
  std::int64_t boundary_bid = 1;
  CancelMode cancel_mode = CancelMode::kProportional;

  /// Same rate at every level on both sides.
  static ModelParams flat(int n, double market, double limit, double cancel,
                          std::int64_t boundary = 1, std::int64_t q = 1,
                          CancelMode mode = CancelMode::kProportional) {
    ModelParams p;
    p.frame_size = n;
    p.unit = q;
    p.rate_market_buy = market;
    p.rate_market_sell = market;
    p.rate_limit_ask.assign(static_cast<std::size_t>(n), limit);
    p.rate_limit_bid.assign(static_cast<std::size_t>(n), limit);
    p.rate_cancel_ask.assign(static_cast<std::size_t>(n), cancel);
    p.rate_cancel_bid.assign(static_cast<std::size_t>(n), cancel);
    p.boundary_ask = boundary;
    p.boundary_bid = boundary;
    p.cancel_mode = mode;
    return p;
  }

  std::int64_t boundary(Side side) const { return side == Side::kAsk ? boundary_ask : boundary_bid; }
  std::int64_t boundary_units(Side side) const { return boundary(side) / unit; }
  const std::vector<double>& limit_rates(Side side) const {
    return side == Side::kAsk ? rate_limit_ask : rate_limit_bid;
  }
  const std::vector<double>& cancel_rates(Side side) const {
    return side == Side::kAsk ? rate_cancel_ask : rate_cancel_bid;
  }
  double market_rate(Side side) const { return side == Side::kAsk ? rate_market_buy : rate_market_sell; }

  /// d_inf = max(a_inf, |b_inf|), in shares.
  std::int64_t max_boundary() const { return std::max(boundary_ask, boundary_bid); }

  double min_cancel_rate() const {
    double m = rate_cancel_ask.empty() ? 0.0 : rate_cancel_ask.front();
    for (double r : rate_cancel_ask) m = std::min(m, r);
    for (double r : rate_cancel_bid) m = std::min(m, r);
    return m;
  }
  double max_cancel_rate() const {
    double m = 0.0;
    for (double r : rate_cancel_ask) m = std::max(m, r);
    for (double r : rate_cancel_bid) m = std::max(m, r);
    return m;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

namespace detail {

inline void check_rate(const std::string& field, double r) {
  if (!(r >= 0.0) || r == std::numeric_limits<double>::infinity()) {
    throw ParamError(field, "rate must be a finite non-negative number");
  }
}

inline void check_rate_vector(const std::string& field, const std::vector<double>& v, int n) {
  if (static_cast<int>(v.size()) != n) {
    throw ParamError(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) check_rate(field + "[" + std::to_string(i + 1) + "]", v[i]);
}

}  // namespace detail

/// Checks the structural invariants: sizes, non-negative rates, boundary
/// volumes that are positive multiples of the unit.
inline void validate_structure(const ModelParams& p) {
  if (p.frame_size < 1) throw ParamError("frame_size", "must be >= 1");
  if (p.unit < 1) throw ParamError("unit", "must be a positive integer");
  if (!(p.tick > 0.0)) throw ParamError("tick", "must be positive");
  detail::check_rate("rate_market_buy", p.rate_market_buy);
  detail::check_rate("rate_market_sell", p.rate_market_sell);
  detail::check_rate_vector("rate_limit_ask", p.rate_limit_ask, p.frame_size);
  detail::check_rate_vector("rate_limit_bid", p.rate_limit_bid, p.frame_size);
  detail::check_rate_vector("rate_cancel_ask", p.rate_cancel_ask, p.frame_size);
  detail::check_rate_vector("rate_cancel_bid", p.rate_cancel_bid, p.frame_size);
  if (p.boundary_ask < 1 || p.boundary_ask % p.unit != 0) {
    throw ParamError("boundary_ask", "must be a positive multiple of unit");
  }
  if (p.boundary_bid < 1 || p.boundary_bid % p.unit != 0) {
    throw ParamError("boundary_bid", "must be a positive multiple of unit");
  }
}

/// Full validation. In proportional mode every per-order cancellation rate
/// must be strictly positive, which is what makes the book ergodic.
inline void validate(const ModelParams& p) {
  validate_structure(p);
  if (p.cancel_mode == CancelMode::kProportional) {
    for (int i = 0; i < p.frame_size; ++i) {
      if (p.rate_cancel_ask[static_cast<std::size_t>(i)] <= 0.0) {
        throw ParamError("rate_cancel_ask[" + std::to_string(i + 1) + "]",
                         "must be > 0 in proportional mode");
      }
      if (p.rate_cancel_bid[static_cast<std::size_t>(i)] <= 0.0) {
        throw ParamError("rate_cancel_bid[" + std::to_string(i + 1) + "]",
                         "must be > 0 in proportional mode");
      }
    }
  }
}

/// Stable textual form used for hashing; doubles are printed round-trip exact.
inline std::string canonical_string(const ModelParams& p) {
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  auto vec = [&](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s + "]";
  };
  std::string s;
  s += "N=" + std::to_string(p.frame_size);
  s += ";q=" + std::to_string(p.unit);
  s += ";tick=" + num(p.tick);
  s += ";mb=" + num(p.rate_market_buy);
  s += ";ms=" + num(p.rate_market_sell);
  s += ";la=" + vec(p.rate_limit_ask);
  s += ";lb=" + vec(p.rate_limit_bid);
  s += ";ca=" + vec(p.rate_cancel_ask);
  s += ";cb=" + vec(p.rate_cancel_bid);
  s += ";ainf=" + std::to_string(p.boundary_ask);
  s += ";binf=" + std::to_string(p.boundary_bid);
  s += ";mode=";
  s += to_string(p.cancel_mode);
  return s;
}

/// 64-bit FNV-1a of the canonical string, as 16 hex digits.
inline std::string params_digest(const ModelParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_string(p)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lobsim
