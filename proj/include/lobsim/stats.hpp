#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lobsim/book.hpp"
#include "lobsim/flow.hpp"
#include "lobsim/params.hpp"

namespace lobsim {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double mean(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s.add(v);
  return x.empty() ? 0.0 : s.value() / static_cast<double>(x.size());
}

/// Event-time mid-price increments eta_n in half ticks.
inline std::vector<double> increments(const Trace& tr) {
  if (tr.empty()) throw StatsError("increments: empty trace");
  std::vector<double> eta(tr.size());
  std::int64_t prev = tr.start_mid;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    eta[k] = static_cast<double>(tr.mid[k] - prev);
    prev = tr.mid[k];
  }
  return eta;
}

/// Centered autocovariances gamma_0..gamma_L with the 1/n normalisation.
inline std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n < 50 * std::max<std::size_t>(max_lag, 1)) {
    throw StatsError("autocovariance: need at least 50 * max_lag samples (have " + std::to_string(n) + ")");
  }
  const double m = mean(x);
  std::vector<double> c(n);
  for (std::size_t t = 0; t < n; ++t) c[t] = x[t] - m;
  std::vector<double> gamma(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    CompensatedSum s;
    for (std::size_t t = 0; t + k < n; ++t) s.add(c[t] * c[t + k]);
    gamma[k] = s.value() / static_cast<double>(n);
  }
  return gamma;
}

struct CutoffRule {
  enum class Kind { kConsecutive, kFixed };
  Kind kind = Kind::kConsecutive;
  int run = 3;            // consecutive lags required below the noise band
  double band = 2.0;      // noise band in units of 1/sqrt(n) on the autocorrelation
  std::size_t fixed = 0;  // cutoff lag for kFixed

  static CutoffRule consecutive(int run = 3, double band = 2.0) { return {Kind::kConsecutive, run, band, 0}; }
  static CutoffRule fixed_lag(std::size_t lag) { return {Kind::kFixed, 3, 2.0, lag}; }

  friend bool operator==(const CutoffRule&, const CutoffRule&) = default;
};

/// Last lag kept in the sum. With the consecutive rule it is the lag just
/// before the first run of `run` autocorrelations inside +-band/sqrt(n);
/// falls back to the largest available lag.
inline std::size_t cutoff_lag(const std::vector<double>& gamma, std::size_t n, const CutoffRule& rule) {
  const std::size_t max_lag = gamma.size() - 1;
  if (rule.kind == CutoffRule::Kind::kFixed) return std::min(rule.fixed, max_lag);
  if (gamma[0] <= 0.0) return 0;
  const double noise = rule.band / std::sqrt(static_cast<double>(n));
  int quiet = 0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    quiet = std::abs(gamma[k] / gamma[0]) < noise ? quiet + 1 : 0;
    if (quiet == rule.run) return k - static_cast<std::size_t>(rule.run);
  }
  return max_lag;
}

struct AsymptoticVariance {
  double sigma2 = 0.0;
  std::size_t cutoff = 0;
  bool clipped = false;  // the raw series was negative and was set to zero
};

/// sigma^2 = gamma_0 + 2 sum_{k=1}^{L*} gamma_k.
inline AsymptoticVariance asymptotic_variance(const std::vector<double>& gamma, std::size_t n,
                                              const CutoffRule& rule = {}) {
  if (gamma.empty()) throw StatsError("asymptotic_variance: no autocovariances");
  AsymptoticVariance out;
  out.cutoff = cutoff_lag(gamma, n, rule);
  CompensatedSum s;
  s.add(gamma[0]);
  for (std::size_t k = 1; k <= out.cutoff; ++k) s.add(2.0 * gamma[k]);
  out.sigma2 = s.value();
  if (out.sigma2 < 0.0) {
    out.sigma2 = 0.0;
    out.clipped = true;
  }
  return out;
}

/// Batch-means estimate of sigma^2: batch length times the sample variance
/// of batch means. `batches` = 0 picks floor(sqrt(n)).
inline double batch_means_variance(std::span<const double> x, std::size_t batches = 0) {
  const std::size_t n = x.size();
  if (batches == 0) batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  if (batches < 2) throw StatsError("batch_means_variance: need at least two batches");
  const std::size_t len = n / batches;
  if (len < 1) throw StatsError("batch_means_variance: more batches than samples");
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) means[b] = mean(x.subspan(b * len, len));
  const double m = mean(means);
  CompensatedSum ss;
  for (double v : means) ss.add((v - m) * (v - m));
  return static_cast<double>(len) * ss.value() / static_cast<double>(batches - 1);
}

// ---------------------------------------------------------------------------
// Variance against horizon
// ---------------------------------------------------------------------------

struct VariancePoint {
  double horizon = 0.0;  // events, or model time
  std::size_t windows = 0;
  double variance = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

enum class FitWeighting {
  kOrdinary,         // plain least squares
  kInverseVariance,  // weights windows / horizon^2, the inverse sampling variance of each point
};

inline const char* to_string(FitWeighting w) {
  return w == FitWeighting::kOrdinary ? "ordinary" : "inverse_variance";
}

inline FitWeighting fit_weighting_from_string(const std::string& s) {
  if (s == "ordinary") return FitWeighting::kOrdinary;
  if (s == "inverse_variance") return FitWeighting::kInverseVariance;
  throw StatsError("unknown fit weighting \"" + s + "\"");
}

/// Weighted least squares of variance on horizon; R^2 uses the same weights.
inline LinearFit fit_line(const std::vector<VariancePoint>& pts, FitWeighting weighting) {
  if (pts.size() < 2) throw StatsError("fit_line: need at least two points");
  std::vector<double> w(pts.size(), 1.0);
  if (weighting == FitWeighting::kInverseVariance) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      w[k] = static_cast<double>(pts[k].windows) / (pts[k].horizon * pts[k].horizon);
    }
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    sw += w[k];
    sx += w[k] * pts[k].horizon;
    sy += w[k] * pts[k].variance;
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double dx = pts[k].horizon - mx, dy = pts[k].variance - my;
    sxx += w[k] * dx * dx;
    sxy += w[k] * dx * dy;
    syy += w[k] * dy * dy;
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    double ssr = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double r = pts[k].variance - (f.intercept + f.slope * pts[k].horizon);
      ssr += w[k] * r * r;
    }
    f.r2 = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
  } else {
    f.r2 = 1.0;  // constant data, fitted exactly
  }
  return f;
}

struct VarianceScaling {
  std::vector<VariancePoint> points;
  LinearFit fit;
};

/// Sample variance of x over disjoint windows of each length in `grid`.
inline std::vector<VariancePoint> windowed_variance(std::span<const double> cumulative_path,
                                                    const std::vector<std::size_t>& grid,
                                                    std::size_t min_windows = 30) {
  // cumulative_path[0] is the starting level, cumulative_path[k] after k increments.
  const std::size_t n = cumulative_path.empty() ? 0 : cumulative_path.size() - 1;
  std::vector<VariancePoint> pts;
  for (std::size_t m : grid) {
    if (m == 0) throw StatsError("variance grid contains 0");
    const std::size_t windows = n / m;
    if (windows < min_windows) {
      throw StatsError("variance grid: horizon " + std::to_string(m) + " leaves " + std::to_string(windows) +
                       " disjoint windows (need " + std::to_string(min_windows) + ")");
    }
    std::vector<double> d(windows);
    for (std::size_t w = 0; w < windows; ++w) d[w] = cumulative_path[(w + 1) * m] - cumulative_path[w * m];
    const double mu = mean(d);
    CompensatedSum ss;
    for (double v : d) ss.add((v - mu) * (v - mu));
    pts.push_back(VariancePoint{static_cast<double>(m), windows, ss.value() / static_cast<double>(windows - 1)});
  }
  return pts;
}

/// Event-time variance of the mid price against the horizon, with a linear fit.
inline VarianceScaling variance_scaling(const Trace& tr, const std::vector<std::size_t>& grid,
                                        FitWeighting weighting = FitWeighting::kInverseVariance) {
  std::vector<double> path(tr.size() + 1);
  path[0] = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) path[k + 1] = static_cast<double>(tr.mid[k] - tr.start_mid);
  VarianceScaling out;
  out.points = windowed_variance(path, grid);
  out.fit = fit_line(out.points, weighting);
  return out;
}

/// Log-spaced integer grid from lo to hi with `per_decade` points per decade.
inline std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, int per_decade = 4) {
  std::vector<std::size_t> g;
  const double step = std::pow(10.0, 1.0 / per_decade);
  for (double m = static_cast<double>(lo); m <= static_cast<double>(hi) * (1 + 1e-9); m *= step) {
    const auto v = static_cast<std::size_t>(std::llround(m));
    if (g.empty() || g.back() != v) g.push_back(v);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Rescaled path
// ---------------------------------------------------------------------------

struct PathSample {
  double t = 0.0;
  double value = 0.0;
};

/// P~(t) = (P_floor(nt) - floor(nt) * mean increment) / sqrt(n) in half ticks,
/// sampled at t = 0, dt, ..., t_max.
inline std::vector<PathSample> rescaled_path(const Trace& tr, std::size_t n, double t_max, std::size_t points) {
  if (n == 0 || points == 0) throw StatsError("rescaled_path: n and points must be positive");
  const auto last = static_cast<std::size_t>(std::floor(static_cast<double>(n) * t_max));
  if (last > tr.size()) throw StatsError("rescaled_path: trace shorter than n * t_max");
  const double drift = tr.empty() ? 0.0 : static_cast<double>(tr.mid.back() - tr.start_mid) / static_cast<double>(tr.size());
  std::vector<PathSample> out;
  const double scale = std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j <= points; ++j) {
    const double t = t_max * static_cast<double>(j) / static_cast<double>(points);
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * t));
    const double level = k == 0 ? 0.0 : static_cast<double>(tr.mid[k - 1] - tr.start_mid);
    out.push_back(PathSample{t, (level - static_cast<double>(k) * drift) / scale});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stationary estimators
// ---------------------------------------------------------------------------

struct StationaryEstimates {
  std::vector<double> ask_depth;  // mean shares at ask levels 1..N
  std::vector<double> bid_depth;  // mean shares (magnitudes) at bid levels 1..N
  std::vector<double> spread_histogram;  // index s = spread in ticks, 0..N+1; time weighted
  std::vector<double> spread_histogram_events;  // same, event weighted
};

/// Time averages of the depth profile (from snapshots, each weighted by its
/// holding time) and of the spread (from the event stream).
inline StationaryEstimates stationary_estimators(const Trace& tr, const ModelParams& p) {
  if (tr.empty()) throw StatsError("stationary_estimators: empty trace");
  const int n = tr.frame_size;
  StationaryEstimates out;
  out.ask_depth.assign(static_cast<std::size_t>(n), 0.0);
  out.bid_depth.assign(static_cast<std::size_t>(n), 0.0);
  out.spread_histogram.assign(static_cast<std::size_t>(n) + 2, 0.0);
  out.spread_histogram_events.assign(static_cast<std::size_t>(n) + 2, 0.0);

  // The spread after event k holds until event k+1; the last holding time is
  // unknown and dropped. The starting spread holds until the first event.
  double total_time = 0.0;
  auto add_spread = [&](std::int32_t s, double dt) {
    if (s < 1 || s > n + 1) throw StatsError("stationary_estimators: spread outside 1..N+1");
    out.spread_histogram[static_cast<std::size_t>(s)] += dt;
    total_time += dt;
  };
  add_spread(tr.start_spread, tr.t[0] - tr.start_time);
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) add_spread(tr.spread[k], tr.t[k + 1] - tr.t[k]);
  for (auto& v : out.spread_histogram) v /= total_time;
  for (auto s : tr.spread) out.spread_histogram_events[static_cast<std::size_t>(s)] += 1.0;
  for (auto& v : out.spread_histogram_events) v /= static_cast<double>(tr.size());

  double weight = 0.0;
  for (const auto& snap : tr.snapshots) {
    if (snap.event_index + 1 >= tr.size()) continue;
    const double dt = tr.t[snap.event_index + 1] - tr.t[snap.event_index];
    for (int i = 0; i < n; ++i) {
      out.ask_depth[static_cast<std::size_t>(i)] += dt * static_cast<double>(snap.state.ask[static_cast<std::size_t>(i)] * p.unit);
      out.bid_depth[static_cast<std::size_t>(i)] += dt * static_cast<double>(snap.state.bid[static_cast<std::size_t>(i)] * p.unit);
    }
    weight += dt;
  }
  if (weight > 0.0) {
    for (auto& v : out.ask_depth) v /= weight;
    for (auto& v : out.bid_depth) v /= weight;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Moments, histograms, mixing
// ---------------------------------------------------------------------------

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline Moments moments(std::span<const double> x) {
  Moments m;
  m.count = x.size();
  if (x.size() < 2) throw StatsError("moments: need at least two samples");
  m.mean = mean(x);
  CompensatedSum s2, s3, s4;
  for (double v : x) {
    const double d = v - m.mean;
    s2.add(d * d);
    s3.add(d * d * d);
    s4.add(d * d * d * d);
  }
  const double nn = static_cast<double>(x.size());
  const double m2 = s2.value() / nn;
  m.variance = s2.value() / (nn - 1.0);
  if (m2 > 0.0) {
    m.skewness = (s3.value() / nn) / std::pow(m2, 1.5);
    m.excess_kurtosis = (s4.value() / nn) / (m2 * m2) - 3.0;
  }
  return m;
}

/// Sums of `window` consecutive increments over disjoint blocks.
inline std::vector<double> aggregate(std::span<const double> eta, std::size_t window) {
  if (window < 1) throw StatsError("aggregate: window must be >= 1");
  std::vector<double> out(eta.size() / window);
  for (std::size_t b = 0; b < out.size(); ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += eta[b * window + k];
    out[b] = s;
  }
  return out;
}

/// Skewness and excess kurtosis of aggregated increments.
inline Moments normality_diagnostics(std::span<const double> eta, std::size_t window) {
  return moments(aggregate(eta, window));
}

/// Counts of each integer value.
inline std::map<std::int64_t, std::size_t> value_histogram(std::span<const double> x) {
  std::map<std::int64_t, std::size_t> h;
  for (double v : x) ++h[std::llround(v)];
  return h;
}

struct MixingFit {
  double rho = 0.0;    // fitted decay factor per lag
  double scale = 0.0;  // c in |gamma_k| ~ c rho^k
  double r2 = 0.0;
  std::vector<std::size_t> lags;  // lags used in the fit
};

/// Fits log|gamma_k| = log c + k log rho over lags k >= 1 whose
/// autocorrelation is above `band`/sqrt(n), stopping at the first lag that
/// falls inside the band.
inline MixingFit fit_mixing(const std::vector<double>& gamma, std::size_t n, double band = 3.0) {
  MixingFit f;
  if (gamma.size() < 2 || gamma[0] <= 0.0) throw StatsError("fit_mixing: degenerate autocovariances");
  const double floor = band / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 1; k < gamma.size(); ++k) {
    if (std::abs(gamma[k] / gamma[0]) <= floor) break;
    f.lags.push_back(k);
  }
  // Lag 0 anchors the fit only when the signal dies out within a lag.
  std::vector<double> xs, ys;
  if (f.lags.size() < 2) {
    xs.push_back(0.0);
    ys.push_back(std::log(gamma[0]));
  }
  for (auto k : f.lags) {
    xs.push_back(static_cast<double>(k));
    ys.push_back(std::log(std::abs(gamma[k])));
  }
  const double nn = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= nn;
  my /= nn;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) return f;  // no lag above the noise floor
  const double slope = sxy / sxx;
  f.rho = std::exp(slope);
  f.scale = std::exp(my - slope * mx);
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Physical time
// ---------------------------------------------------------------------------

struct PhysicalTimeVariance {
  std::vector<VariancePoint> points;  // horizons in model time
  LinearFit fit;                      // slope in half-ticks^2 per unit time
  double event_rate = 0.0;            // events per unit time over the trace
};

/// Variance of P_c(t + tau) - P_c(t) over disjoint windows of model time.
/// Only meaningful when the total event rate does not depend on the state.
inline PhysicalTimeVariance physical_time_variance(const Trace& tr, const ModelParams& p,
                                                   const std::vector<double>& tau_grid,
                                                   FitWeighting weighting = FitWeighting::kInverseVariance) {
  if (p.cancel_mode != CancelMode::kConstant) {
    throw StatsError("physical_time_variance: requires constant cancellation rates (state-independent total rate)");
  }
  if (tr.empty()) throw StatsError("physical_time_variance: empty trace");
  PhysicalTimeVariance out;
  const double span_time = tr.t.back() - tr.start_time;
  out.event_rate = static_cast<double>(tr.size()) / span_time;

  for (double tau : tau_grid) {
    if (!(tau > 0.0)) throw StatsError("physical_time_variance: horizons must be positive");
    const auto windows = static_cast<std::size_t>(std::floor(span_time / tau));
    if (windows < 30) {
      throw StatsError("physical_time_variance: horizon " + std::to_string(tau) + " leaves fewer than 30 windows");
    }
    // Mid price at the window edges: the last event at or before the edge.
    std::vector<double> level(windows + 1);
    std::size_t k = 0;
    std::int64_t current = tr.start_mid;
    for (std::size_t w = 0; w <= windows; ++w) {
      const double edge = tr.start_time + tau * static_cast<double>(w);
      while (k < tr.size() && tr.t[k] <= edge) current = tr.mid[k++];
      level[w] = static_cast<double>(current - tr.start_mid);
    }
    std::vector<double> d(windows);
    for (std::size_t w = 0; w < windows; ++w) d[w] = level[w + 1] - level[w];
    const double mu = mean(d);
    CompensatedSum ss;
    for (double v : d) ss.add((v - mu) * (v - mu));
    out.points.push_back(VariancePoint{tau, windows, ss.value() / static_cast<double>(windows - 1)});
  }
  out.fit = fit_line(out.points, weighting);
  return out;
}

// ---------------------------------------------------------------------------
// Full report
// ---------------------------------------------------------------------------

struct AnalysisOptions {
  std::size_t max_lag = 100;
  CutoffRule cutoff;
  std::vector<std::size_t> variance_grid;  // empty: log grid from 10 to n/30
  std::vector<std::size_t> aggregation_windows{1, 100};
  std::size_t batches = 0;  // 0: sqrt(n)
  FitWeighting weighting = FitWeighting::kInverseVariance;
};

struct StatsReport {
  StationaryEstimates stationary;
  std::map<std::int64_t, std::size_t> increment_histogram;
  std::vector<double> autocovariance;
  AsymptoticVariance sigma2_series;
  double sigma2_batch = 0.0;
  VarianceScaling variance;
  std::vector<std::pair<std::size_t, Moments>> aggregated_moments;
  MixingFit mixing;
  double mean_increment = 0.0;
  std::size_t events = 0;
  std::optional<PhysicalTimeVariance> physical;  // constant mode only
  double physical_time_sigma2 = 0.0;             // physical slope, constant mode only
};

/// Log grid from 10 events up to n/50, which leaves at least 50 windows.
inline std::vector<std::size_t> default_variance_grid(std::size_t n) {
  const std::size_t hi = std::max<std::size_t>(n / 50, 1);
  const std::size_t lo = std::min<std::size_t>(10, hi);
  return log_grid(lo, hi, 4);
}

inline StatsReport compute_stats(const Trace& tr, const ModelParams& p, const AnalysisOptions& opt = {}) {
  if (tr.empty()) throw StatsError("compute_stats: no events after burn-in");
  StatsReport r;
  r.events = tr.size();
  const auto eta = increments(tr);
  r.mean_increment = mean(eta);
  r.stationary = stationary_estimators(tr, p);
  r.increment_histogram = value_histogram(eta);
  r.autocovariance = autocovariance(eta, opt.max_lag);
  r.sigma2_series = asymptotic_variance(r.autocovariance, eta.size(), opt.cutoff);
  r.sigma2_batch = batch_means_variance(eta, opt.batches);
  r.variance = variance_scaling(
      tr, opt.variance_grid.empty() ? default_variance_grid(tr.size()) : opt.variance_grid, opt.weighting);
  for (auto w : opt.aggregation_windows) r.aggregated_moments.emplace_back(w, normality_diagnostics(eta, w));
  r.mixing = fit_mixing(r.autocovariance, eta.size());
  if (p.cancel_mode == CancelMode::kConstant) {
    const double rate = static_cast<double>(tr.size()) / (tr.t.back() - tr.start_time);
    const auto grid = opt.variance_grid.empty() ? default_variance_grid(tr.size()) : opt.variance_grid;
    std::vector<double> taus;
    for (auto m : grid) taus.push_back(static_cast<double>(m) / rate);
    r.physical = physical_time_variance(tr, p, taus, opt.weighting);
    r.physical_time_sigma2 = r.physical->fit.slope;
  }
  return r;
}

}  // namespace lobsim
