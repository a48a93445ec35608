#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "lobsim/book.hpp"
#include "lobsim/flow.hpp"
#include "lobsim/generator.hpp"
#include "lobsim/params.hpp"
#include "lobsim/stationary.hpp"
#include "lobsim/stats.hpp"
#include "lobsim/toy.hpp"

namespace lobsim::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back to the same double.
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline constexpr int kStartRow = -1;
inline constexpr int kHaltRow = -2;

inline const char* kTraceHeader = "t_model_time,event_code,mid_half_ticks,spread_ticks";

/// One row per event. The first row (code -1) carries the state at the
/// start of recording; a trailing row with code -2 marks a halted chain.
inline void write_trace_csv(std::ostream& os, const Trace& tr) {
  os << kTraceHeader << '\n';
  os << num(tr.start_time) << ',' << kStartRow << ',' << tr.start_mid << ',' << tr.start_spread << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << num(tr.t[k]) << ',' << tr.code[k] << ',' << tr.mid[k] << ',' << tr.spread[k] << '\n';
  }
  if (tr.halted) {
    const double t = tr.empty() ? tr.start_time : tr.t.back();
    const auto mid = tr.empty() ? tr.start_mid : tr.mid.back();
    const auto spread = tr.empty() ? tr.start_spread : tr.spread.back();
    os << num(t) << ',' << kHaltRow << ',' << mid << ',' << spread << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line) + ": not a number: \"" + s + "\"");
  }
}

inline std::int64_t to_int(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line) + ": not an integer: \"" + s + "\"");
  }
}

}  // namespace detail

/// Reads a trace written by write_trace_csv. frame_size and the digest are
/// not stored in the file and must be filled in by the caller.
inline Trace read_trace_csv(std::istream& is) {
  Trace tr;
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) throw FormatError("trace: missing or unexpected header");
  std::size_t lineno = 1;
  bool started = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 4) throw FormatError("trace: line " + std::to_string(lineno) + ": expected 4 columns");
    const double t = detail::to_double(cells[0], lineno);
    const auto code = detail::to_int(cells[1], lineno);
    const auto mid = detail::to_int(cells[2], lineno);
    const auto spread = detail::to_int(cells[3], lineno);
    if (code == kStartRow) {
      if (started) throw FormatError("trace: line " + std::to_string(lineno) + ": second start row");
      started = true;
      tr.start_time = t;
      tr.start_mid = mid;
      tr.start_spread = static_cast<std::int32_t>(spread);
      continue;
    }
    if (!started) throw FormatError("trace: first data row must be the start row");
    if (code == kHaltRow) {
      tr.halted = true;
      continue;
    }
    if (code < 0) throw FormatError("trace: line " + std::to_string(lineno) + ": negative event code");
    tr.t.push_back(t);
    tr.code.push_back(static_cast<std::int32_t>(code));
    tr.mid.push_back(mid);
    tr.spread.push_back(static_cast<std::int32_t>(spread));
  }
  if (!started) throw FormatError("trace: no start row");
  return tr;
}

inline std::string snapshot_header(int n) {
  std::string h = "event_index,t_model_time";
  for (int i = 1; i <= n; ++i) h += ",ask_" + std::to_string(i) + "_shares";
  for (int i = 1; i <= n; ++i) h += ",bid_" + std::to_string(i) + "_abs_shares";
  return h;
}

/// 2N+2 columns per snapshot: event index, time, ask shares, bid magnitudes.
inline void write_snapshots_csv(std::ostream& os, const Trace& tr, const ModelParams& p) {
  os << snapshot_header(p.frame_size) << '\n';
  for (const auto& s : tr.snapshots) {
    os << s.event_index << ',' << num(s.t);
    for (auto c : s.state.ask) os << ',' << c * p.unit;
    for (auto c : s.state.bid) os << ',' << c * p.unit;
    os << '\n';
  }
}

/// Restores tr.snapshots; the best-ask price is recovered from the trace.
inline void read_snapshots_csv(std::istream& is, Trace& tr, const ModelParams& p) {
  std::string line;
  if (!std::getline(is, line) || line != snapshot_header(p.frame_size)) {
    throw FormatError("snapshots: header does not match frame size " + std::to_string(p.frame_size));
  }
  const auto n = static_cast<std::size_t>(p.frame_size);
  std::size_t lineno = 1;
  tr.snapshots.clear();
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 2 * n + 2) throw FormatError("snapshots: line " + std::to_string(lineno) + ": wrong column count");
    Snapshot s;
    s.event_index = static_cast<std::size_t>(detail::to_int(cells[0], lineno));
    s.t = detail::to_double(cells[1], lineno);
    if (s.event_index >= tr.size()) throw FormatError("snapshots: line " + std::to_string(lineno) + ": event index past trace");
    s.state.ask.resize(n);
    s.state.bid.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = detail::to_int(cells[2 + i], lineno);
      const auto b = detail::to_int(cells[2 + n + i], lineno);
      if (a % p.unit != 0 || b % p.unit != 0) throw FormatError("snapshots: line " + std::to_string(lineno) + ": shares not a multiple of unit");
      s.state.ask[i] = a / p.unit;
      s.state.bid[i] = b / p.unit;
    }
    s.state.ask_price_ticks = (tr.mid[s.event_index] + tr.spread[s.event_index]) / 2;
    tr.snapshots.push_back(std::move(s));
  }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename Writer>
void write_with(const std::filesystem::path& path, Writer&& w) {
  std::ostringstream ss;
  w(ss);
  write_file(path, ss.str());
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

inline void write_depth_profile_csv(std::ostream& os, const StationaryEstimates& e) {
  os << "level_ticks,ask_mean_shares,bid_mean_abs_shares\n";
  for (std::size_t i = 0; i < e.ask_depth.size(); ++i) {
    os << i + 1 << ',' << num(e.ask_depth[i]) << ',' << num(e.bid_depth[i]) << '\n';
  }
}

inline void write_spread_histogram_csv(std::ostream& os, const StationaryEstimates& e) {
  os << "spread_ticks,time_weighted_probability,event_weighted_probability\n";
  for (std::size_t s = 1; s < e.spread_histogram.size(); ++s) {
    os << s << ',' << num(e.spread_histogram[s]) << ',' << num(e.spread_histogram_events[s]) << '\n';
  }
}

inline void write_increment_histogram_csv(std::ostream& os, const std::map<std::int64_t, std::size_t>& h) {
  std::size_t total = 0;
  for (const auto& [k, c] : h) total += c;
  os << "increment_half_ticks,count_events,frequency\n";
  for (const auto& [k, c] : h) {
    os << k << ',' << c << ',' << num(static_cast<double>(c) / static_cast<double>(total)) << '\n';
  }
}

inline void write_autocorrelation_csv(std::ostream& os, const std::vector<double>& gamma) {
  os << "lag_events,autocovariance_half_ticks2,autocorrelation\n";
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    os << k << ',' << num(gamma[k]) << ',' << num(gamma[0] > 0.0 ? gamma[k] / gamma[0] : 0.0) << '\n';
  }
}

inline void write_variance_curve_csv(std::ostream& os, const std::vector<VariancePoint>& pts, const LinearFit& fit,
                                     const std::string& horizon_column) {
  os << horizon_column << ",windows,variance_half_ticks2,fitted_half_ticks2\n";
  for (const auto& pt : pts) {
    os << num(pt.horizon) << ',' << pt.windows << ',' << num(pt.variance) << ','
       << num(fit.intercept + fit.slope * pt.horizon) << '\n';
  }
}

inline nlohmann::ordered_json moments_json(const Moments& m) {
  return {{"count", m.count},
          {"mean", m.mean},
          {"variance", m.variance},
          {"skewness", m.skewness},
          {"excess_kurtosis", m.excess_kurtosis}};
}

inline nlohmann::ordered_json fit_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

inline nlohmann::ordered_json stats_summary_json(const StatsReport& r, const ModelParams& p) {
  nlohmann::ordered_json j;
  j["params_digest"] = params_digest(p);
  j["events"] = r.events;
  j["units"] = "increments in half-ticks; variances in half-ticks^2 per event unless noted";
  j["mean_increment"] = r.mean_increment;
  j["sigma2_series"] = r.sigma2_series.sigma2;
  j["sigma2_cutoff_lag"] = r.sigma2_series.cutoff;
  j["sigma2_clipped"] = r.sigma2_series.clipped;
  j["sigma2_batch_means"] = r.sigma2_batch;
  j["sigma2_regression"] = r.variance.fit.slope;
  j["variance_fit"] = fit_json(r.variance.fit);
  j["mixing"] = {{"rho", r.mixing.rho}, {"scale", r.mixing.scale}, {"r2", r.mixing.r2}, {"lags", r.mixing.lags}};
  nlohmann::ordered_json agg = nlohmann::ordered_json::array();
  for (const auto& [w, m] : r.aggregated_moments) {
    auto e = moments_json(m);
    e["window_events"] = w;
    agg.push_back(e);
  }
  j["aggregated_moments"] = agg;
  if (r.physical) {
    j["physical_time"] = {{"event_rate_per_time", r.physical->event_rate},
                          {"sigma2_per_time", r.physical_time_sigma2},
                          {"ratio_to_event_sigma2", r.sigma2_series.sigma2 > 0.0
                                                        ? r.physical_time_sigma2 / r.sigma2_series.sigma2
                                                        : 0.0},
                          {"fit", fit_json(r.physical->fit)}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Drift reports and stationary distributions
// ---------------------------------------------------------------------------

inline void write_drift_csv(std::ostream& os, const DriftReport& rep) {
  const bool cont = rep.kind == DriftReport::Kind::kContinuous;
  os << "state_digest,phi_shares,log_v," << (cont ? "lv" : "dv") << ',' << (cont ? "lv_over_v" : "dv_over_v") << '\n';
  for (const auto& r : rep.records) {
    os << hex64(r.state) << ',' << r.phi << ',' << num(r.log_v) << ',' << num(r.drift) << ',' << num(r.drift_ratio)
       << '\n';
  }
}

inline nlohmann::ordered_json drift_json(const DriftReport& rep) {
  nlohmann::ordered_json j;
  j["kind"] = rep.kind == DriftReport::Kind::kContinuous ? "continuous" : "embedded";
  j["beta"] = rep.beta;
  j["gamma"] = rep.gamma;
  if (rep.kind == DriftReport::Kind::kEmbedded) j["z"] = rep.z;
  j["threshold_phi_shares"] = rep.threshold;
  j["small_set_size"] = rep.small_set_size;
  j["tail_size"] = rep.tail_size;
  j["states"] = rep.records.size();
  j["verdict"] = rep.pass ? "pass" : "fail";
  return j;
}

inline void write_stationary_csv(std::ostream& os, const StationaryDistribution& d, const ModelParams& p) {
  os << "state_digest,spread_ticks,phi_shares,probability";
  for (int i = 1; i <= d.frame_size; ++i) os << ",ask_" << i << "_shares";
  for (int i = 1; i <= d.frame_size; ++i) os << ",bid_" << i << "_abs_shares";
  os << '\n';
  for (std::size_t k = 0; k < d.states.size(); ++k) {
    const auto& s = d.states[k];
    os << hex64(state_digest(s)) << ',' << spread_ticks(s) << ',' << total_shares(s, p) << ','
       << num(d.probability[k]);
    for (auto c : s.ask) os << ',' << c * p.unit;
    for (auto c : s.bid) os << ',' << c * p.unit;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Toy model
// ---------------------------------------------------------------------------

inline void write_toy_path_csv(std::ostream& os, const toy::ToyPath& path) {
  os << "t_model_time,direction,moved,price\n";
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    os << num(path.t[k]) << ',' << path.direction[k] << ',' << (path.moved[k] ? 1 : 0) << ',' << num(path.price[k])
       << '\n';
  }
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  bool bars = false;
};

/// Minimal line or bar chart with axis extents printed in the corners.
inline std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series) {
  const double w = 640, h = 400, ml = 70, mr = 20, mt = 40, mb = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = 0.0, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y1)) y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << xlabel << "</text>\n";
  os << "<text x=\"14\" y=\"" << h / 2 << "\" transform=\"rotate(-90 14 " << h / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << ylabel << "</text>\n";
  os << "<text x=\"" << ml << "\" y=\"" << h - mb + 16 << "\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(x0)
     << "</text>\n";
  os << "<text x=\"" << w - mr << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
     << fmt(x1) << "</text>\n";
  os << "<text x=\"" << ml - 4 << "\" y=\"" << h - mb << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
     << fmt(y0) << "</text>\n";
  os << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 4 << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
     << fmt(y1) << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 4];
    if (s.bars) {
      const double bw = std::max(1.0, (w - ml - mr) / std::max<double>(1.0, static_cast<double>(s.x.size())) * 0.8);
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double top = py(std::max(s.y[i], 0.0)), base = py(std::max(y0, 0.0));
        os << "<rect x=\"" << px(s.x[i]) - bw / 2 << "\" y=\"" << top << "\" width=\"" << bw << "\" height=\""
           << std::max(0.0, base - top) << "\" fill=\"" << c << "\" fill-opacity=\"0.7\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
      os << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lobsim::io
