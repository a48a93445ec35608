#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lobsim/book.hpp"
#include "lobsim/params.hpp"

namespace lobsim {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stationary law of the book restricted to queues of at most `cap` orders.
struct StationaryDistribution {
  int frame_size = 0;
  int cap = 0;
  std::vector<BookState> states;  // ask_price_ticks is always 0
  std::vector<double> probability;
  double boundary_mass = 0.0;  // probability of states with some queue at the cap
  double residual = 0.0;       // max |(pi Q)_j|

  /// P(spread = s) for s = 0..N+1 (entry 0 unused).
  std::vector<double> spread_marginal() const {
    std::vector<double> m(static_cast<std::size_t>(frame_size) + 2, 0.0);
    for (std::size_t k = 0; k < states.size(); ++k) m[static_cast<std::size_t>(spread_ticks(states[k]))] += probability[k];
    return m;
  }

  /// Law of the queue at one level of one side, indexed by order count.
  std::vector<double> queue_marginal(Side side, int level) const {
    std::vector<double> m(static_cast<std::size_t>(cap) + 1, 0.0);
    for (std::size_t k = 0; k < states.size(); ++k) {
      m[static_cast<std::size_t>(states[k].queues(side)[static_cast<std::size_t>(level - 1)])] += probability[k];
    }
    return m;
  }

  /// Mean shares per level: entries 0..N-1 ask, N..2N-1 bid.
  std::vector<double> mean_depth(const ModelParams& p) const {
    std::vector<double> m(2 * static_cast<std::size_t>(frame_size), 0.0);
    for (std::size_t k = 0; k < states.size(); ++k) {
      for (int i = 0; i < frame_size; ++i) {
        m[static_cast<std::size_t>(i)] += probability[k] * static_cast<double>(states[k].ask[static_cast<std::size_t>(i)] * p.unit);
        m[static_cast<std::size_t>(frame_size + i)] +=
            probability[k] * static_cast<double>(states[k].bid[static_cast<std::size_t>(i)] * p.unit);
      }
    }
    return m;
  }
};

struct TruncationOptions {
  int cap = 5;
  std::size_t max_states = 1'000'000;
  int max_frame = 3;
};

namespace detail {

inline std::uint64_t pack_state(const BookState& s, int cap) {
  std::uint64_t key = 0;
  const auto base = static_cast<std::uint64_t>(cap) + 1;
  for (auto c : s.ask) key = key * base + static_cast<std::uint64_t>(c);
  for (auto c : s.bid) key = key * base + static_cast<std::uint64_t>(c);
  return key;
}

inline bool within_cap(const BookState& s, int cap) {
  return std::all_of(s.ask.begin(), s.ask.end(), [&](auto c) { return c <= cap; }) &&
         std::all_of(s.bid.begin(), s.bid.end(), [&](auto c) { return c <= cap; });
}

inline bool at_cap(const BookState& s, int cap) {
  return std::any_of(s.ask.begin(), s.ask.end(), [&](auto c) { return c == cap; }) ||
         std::any_of(s.bid.begin(), s.bid.end(), [&](auto c) { return c == cap; });
}

}  // namespace detail

/// Exact stationary distribution of the chain truncated at `cap` orders per
/// level. States are those reachable from the full book; transitions that
/// would push a queue above the cap are dropped. Solves pi Q = 0, sum pi = 1
/// with a sparse LU factorisation.
///
/// Only the structural parameter invariants are required: the truncated
/// chain is finite, so zero cancellation rates are allowed here.
inline StationaryDistribution truncated_stationary(const ModelParams& p, const TruncationOptions& opt = {}) {
  validate_structure(p);
  if (p.frame_size > opt.max_frame) {
    throw OracleError("truncated_stationary: frame size " + std::to_string(p.frame_size) + " exceeds " +
                      std::to_string(opt.max_frame));
  }
  if (opt.cap < 1) throw OracleError("truncated_stationary: cap must be >= 1");
  if (p.boundary_units(Side::kAsk) > opt.cap || p.boundary_units(Side::kBid) > opt.cap) {
    throw OracleError("truncated_stationary: boundary volume exceeds the cap");
  }
  const double space = std::pow(static_cast<double>(opt.cap) + 1.0, 2.0 * p.frame_size);
  if (space > static_cast<double>(opt.max_states)) {
    throw OracleError("truncated_stationary: state space of " + std::to_string(space) + " states is too large");
  }

  StationaryDistribution out;
  out.frame_size = p.frame_size;
  out.cap = opt.cap;

  std::unordered_map<std::uint64_t, int> index;
  std::deque<int> frontier;
  auto intern = [&](BookState s) {
    s.ask_price_ticks = 0;
    const auto key = detail::pack_state(s, opt.cap);
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(out.states.size()));
    if (inserted) {
      out.states.push_back(std::move(s));
      frontier.push_back(it->second);
    }
    return it->second;
  };

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> entries;  // (to, from, rate): the transposed generator
  std::vector<double> exit_rate;

  intern(full_book(p));
  while (!frontier.empty()) {
    const int from = frontier.front();
    frontier.pop_front();
    const BookState current = out.states[static_cast<std::size_t>(from)];
    double out_rate = 0.0;
    for (const auto& tr : enumerate_transitions(current, p)) {
      if (!detail::within_cap(tr.next, opt.cap)) continue;
      const int to = intern(tr.next);
      if (to == from) continue;
      entries.emplace_back(to, from, tr.rate);
      out_rate += tr.rate;
    }
    if (exit_rate.size() <= static_cast<std::size_t>(from)) exit_rate.resize(static_cast<std::size_t>(from) + 1, 0.0);
    exit_rate[static_cast<std::size_t>(from)] = out_rate;
  }

  const auto n = static_cast<Eigen::Index>(out.states.size());
  for (Eigen::Index k = 0; k < n; ++k) entries.emplace_back(k, k, -exit_rate[static_cast<std::size_t>(k)]);

  Eigen::SparseMatrix<double> qt(n, n);
  qt.setFromTriplets(entries.begin(), entries.end());

  // Replace the last balance equation by the normalisation constraint.
  std::vector<Triplet> system;
  system.reserve(entries.size() + static_cast<std::size_t>(n));
  for (const auto& t : entries) {
    if (t.row() != n - 1) system.push_back(t);
  }
  for (Eigen::Index k = 0; k < n; ++k) system.emplace_back(n - 1, k, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(system.begin(), system.end());
  a.makeCompressed();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw OracleError("truncated_stationary: factorisation failed: " + lu.lastErrorMessage());
  Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !pi.allFinite()) throw OracleError("truncated_stationary: solve failed");

  // Round-off can leave tiny negative entries.
  for (Eigen::Index k = 0; k < n; ++k) {
    if (pi(k) < 0.0) {
      if (pi(k) < -1e-9) throw OracleError("truncated_stationary: solution has negative mass");
      pi(k) = 0.0;
    }
  }
  pi /= pi.sum();
  out.residual = (qt * pi).cwiseAbs().maxCoeff();

  out.probability.assign(pi.data(), pi.data() + n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (detail::at_cap(out.states[static_cast<std::size_t>(k)], opt.cap)) out.boundary_mass += pi(k);
  }
  return out;
}

/// Total variation distance sum |p - q| / 2 over a common support.
inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  double tv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = k < a.size() ? a[k] : 0.0;
    const double y = k < b.size() ? b[k] : 0.0;
    tv += std::abs(x - y);
  }
  return tv / 2.0;
}

}  // namespace lobsim
