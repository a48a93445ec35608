#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "lobsim/book.hpp"
#include "lobsim/flow.hpp"
#include "lobsim/params.hpp"
#include "lobsim/stationary.hpp"
#include "lobsim/stats.hpp"
#include "lobsim/toy.hpp"

namespace lobsim {

/// Invalid configuration. `line` is 0 when no position is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, std::string what, std::size_t line = 0)
      : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) + path + ": " + what),
        path_(std::move(path)),
        line_(line) {}
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

struct SimulationConfig {
  std::uint64_t seed = 1;
  std::size_t n_events = 1'000'000;
  std::size_t burn_in = 100'000;
  std::size_t snapshot_stride = 100;
  std::size_t replicas = 1;
  unsigned threads = 0;
  std::vector<std::int64_t> initial_ask_shares;  // empty: full book
  std::vector<std::int64_t> initial_bid_shares;

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct DriftConfig {
  std::size_t n_visited = 10'000;
  std::size_t n_heavy = 200;
  std::int64_t max_phi = 20'000;
  std::size_t stride = 10;
  std::size_t burn_in = 10'000;
  double z = 1.05;

  friend bool operator==(const DriftConfig&, const DriftConfig&) = default;
};

struct OracleConfig {
  int cap = 5;
  std::size_t max_states = 1'000'000;
  std::size_t n_events = 10'000'000;
  double tolerance = 0.02;

  friend bool operator==(const OracleConfig&, const OracleConfig&) = default;
};

struct ToyConfig {
  double lambda_plus = 1.0;
  double lambda_minus = 1.0;
  double u = 1.0;
  double tick = 1.0;
  std::size_t path_events = 10'000;
  double scaling_n = 10'000;
  std::size_t replicas = 1'000;
  double tolerance = 0.05;

  friend bool operator==(const ToyConfig&, const ToyConfig&) = default;
};

struct RunConfig {
  ModelParams model;
  SimulationConfig simulation;
  AnalysisOptions analysis;
  DriftConfig drift;
  OracleConfig oracle;
  ToyConfig toy;
  std::string output_dir = "out";

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.model == b.model && a.simulation == b.simulation && a.analysis.max_lag == b.analysis.max_lag &&
           a.analysis.cutoff == b.analysis.cutoff && a.analysis.variance_grid == b.analysis.variance_grid &&
           a.analysis.aggregation_windows == b.analysis.aggregation_windows &&
           a.analysis.batches == b.analysis.batches && a.analysis.weighting == b.analysis.weighting &&
           a.drift == b.drift && a.oracle == b.oracle && a.toy == b.toy && a.output_dir == b.output_dir;
  }
};

namespace detail {

using Json = nlohmann::ordered_json;

/// Line of the first occurrence of "key" in the raw document.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

class Section {
 public:
  Section(const Json& j, std::string path, const std::string& text) : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(path_, path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& full, const std::string& what) const {
    throw ConfigError(full, what, line_of_key(text_, key));
  }

  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const Json* v = find(key);
    if (!v) return;
    out = convert<T>(*v, key);
  }

  template <typename T>
  T convert(const Json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
            throw std::invalid_argument("must be non-negative");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      return v.get<T>();
    } catch (const std::invalid_argument& e) {
      fail(key, full(key), e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(key, full(key), e.what());
    }
  }

  /// A list of numbers, or one number repeated `n` times.
  template <typename T>
  void get_vector(const std::string& key, std::vector<T>& out, std::optional<std::size_t> broadcast = std::nullopt) {
    const Json* v = find(key);
    if (!v) return;
    if (v->is_number() && broadcast) {
      out.assign(*broadcast, convert<T>(*v, key));
      return;
    }
    if (!v->is_array()) fail(key, full(key), "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(convert<T>((*v)[i], key));
  }

  Section child(const std::string& key) {
    const Json* v = find(key);
    static const Json empty = Json::object();
    return Section(v ? *v : empty, full(key), text_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(it.key(), full(it.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> seen_;
};

inline std::string param_message(const ParamError& e) {
  const std::string w = e.what();
  const std::string prefix = e.field() + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

inline CutoffRule::Kind cutoff_kind(const std::string& s) {
  if (s == "consecutive") return CutoffRule::Kind::kConsecutive;
  if (s == "fixed") return CutoffRule::Kind::kFixed;
  throw std::invalid_argument("expected \"consecutive\" or \"fixed\"");
}

}  // namespace detail

/// Parses a configuration document. Missing keys take their defaults;
/// unknown keys are rejected; model parameters are fully validated.
inline RunConfig parse_config(const std::string& text) {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<document>", e.what(), detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  RunConfig c;
  detail::Section top(root, "", text);

  {
    auto m = top.child("model");
    auto& p = c.model;
    p = ModelParams::flat(10, 1.0, 1.0, 1.0);
    m.get("frame_size", p.frame_size);
    const auto n = static_cast<std::size_t>(std::max(p.frame_size, 0));
    p.rate_limit_ask.assign(n, 1.0);
    p.rate_limit_bid.assign(n, 1.0);
    p.rate_cancel_ask.assign(n, 1.0);
    p.rate_cancel_bid.assign(n, 1.0);
    m.get("unit", p.unit);
    m.get("tick", p.tick);
    m.get("rate_market_buy", p.rate_market_buy);
    m.get("rate_market_sell", p.rate_market_sell);
    m.get_vector("rate_limit_ask", p.rate_limit_ask, n);
    m.get_vector("rate_limit_bid", p.rate_limit_bid, n);
    m.get_vector("rate_cancel_ask", p.rate_cancel_ask, n);
    m.get_vector("rate_cancel_bid", p.rate_cancel_bid, n);
    m.get("boundary_ask", p.boundary_ask);
    m.get("boundary_bid", p.boundary_bid);
    std::string mode = to_string(p.cancel_mode);
    m.get("cancel_mode", mode);
    try {
      p.cancel_mode = cancel_mode_from_string(mode);
    } catch (const ParamError& e) {
      m.fail("cancel_mode", "model.cancel_mode", detail::param_message(e));
    }
    m.reject_unknown();
    try {
      validate(p);
    } catch (const ParamError& e) {
      const std::string field = e.field().substr(0, e.field().find('['));
      m.fail(field, "model." + e.field(), detail::param_message(e));
    }
  }
  {
    auto s = top.child("simulation");
    auto& sc = c.simulation;
    s.get("seed", sc.seed);
    s.get("n_events", sc.n_events);
    s.get("burn_in", sc.burn_in);
    s.get("snapshot_stride", sc.snapshot_stride);
    s.get("replicas", sc.replicas);
    s.get("threads", sc.threads);
    s.get_vector("initial_ask_shares", sc.initial_ask_shares);
    s.get_vector("initial_bid_shares", sc.initial_bid_shares);
    s.reject_unknown();
    if (sc.replicas < 1) s.fail("replicas", "simulation.replicas", "must be >= 1");
    if (sc.initial_ask_shares.empty() != sc.initial_bid_shares.empty()) {
      s.fail("initial_ask_shares", "simulation.initial_ask_shares", "give both sides of the initial book or neither");
    }
    if (!sc.initial_ask_shares.empty()) {
      const auto n = static_cast<std::size_t>(c.model.frame_size);
      if (sc.initial_ask_shares.size() != n || sc.initial_bid_shares.size() != n) {
        s.fail("initial_ask_shares", "simulation.initial_ask_shares", "expected frame_size entries per side");
      }
      for (auto v : sc.initial_ask_shares) {
        if (v < 0 || v % c.model.unit) s.fail("initial_ask_shares", "simulation.initial_ask_shares", "shares must be non-negative multiples of unit");
      }
      for (auto v : sc.initial_bid_shares) {
        if (v < 0 || v % c.model.unit) s.fail("initial_bid_shares", "simulation.initial_bid_shares", "shares must be non-negative multiples of unit");
      }
    }
  }
  {
    auto a = top.child("analysis");
    auto& ao = c.analysis;
    a.get("max_lag", ao.max_lag);
    a.get_vector("variance_grid", ao.variance_grid);
    a.get_vector("aggregation_windows", ao.aggregation_windows);
    a.get("batches", ao.batches);
    std::string weighting = to_string(ao.weighting);
    a.get("weighting", weighting);
    try {
      ao.weighting = fit_weighting_from_string(weighting);
    } catch (const StatsError& e) {
      a.fail("weighting", "analysis.weighting", e.what());
    }
    {
      auto cut = a.child("cutoff");
      std::string rule = "consecutive";
      cut.get("rule", rule);
      try {
        ao.cutoff.kind = detail::cutoff_kind(rule);
      } catch (const std::invalid_argument& e) {
        cut.fail("rule", "analysis.cutoff.rule", e.what());
      }
      cut.get("run", ao.cutoff.run);
      cut.get("band", ao.cutoff.band);
      cut.get("lag", ao.cutoff.fixed);
      cut.reject_unknown();
      if (ao.cutoff.run < 1) cut.fail("run", "analysis.cutoff.run", "must be >= 1");
      if (!(ao.cutoff.band > 0.0)) cut.fail("band", "analysis.cutoff.band", "must be positive");
    }
    a.reject_unknown();
    if (ao.max_lag < 1) a.fail("max_lag", "analysis.max_lag", "must be >= 1");
    for (auto w : ao.aggregation_windows) {
      if (w < 1) a.fail("aggregation_windows", "analysis.aggregation_windows", "windows must be >= 1");
    }
    for (auto m : ao.variance_grid) {
      if (m < 1) a.fail("variance_grid", "analysis.variance_grid", "horizons must be >= 1");
    }
  }
  {
    auto d = top.child("drift");
    auto& dc = c.drift;
    d.get("n_visited", dc.n_visited);
    d.get("n_heavy", dc.n_heavy);
    d.get("max_phi", dc.max_phi);
    d.get("stride", dc.stride);
    d.get("burn_in", dc.burn_in);
    d.get("z", dc.z);
    d.reject_unknown();
    if (!(dc.z > 1.0)) d.fail("z", "drift.z", "must be > 1");
    if (dc.stride < 1) d.fail("stride", "drift.stride", "must be >= 1");
  }
  {
    auto o = top.child("oracle");
    auto& oc = c.oracle;
    o.get("cap", oc.cap);
    o.get("max_states", oc.max_states);
    o.get("n_events", oc.n_events);
    o.get("tolerance", oc.tolerance);
    o.reject_unknown();
    if (oc.cap < 1) o.fail("cap", "oracle.cap", "must be >= 1");
    if (!(oc.tolerance > 0.0)) o.fail("tolerance", "oracle.tolerance", "must be positive");
  }
  {
    auto t = top.child("toy");
    auto& tc = c.toy;
    t.get("lambda_plus", tc.lambda_plus);
    t.get("lambda_minus", tc.lambda_minus);
    t.get("u", tc.u);
    t.get("tick", tc.tick);
    t.get("path_events", tc.path_events);
    t.get("scaling_n", tc.scaling_n);
    t.get("replicas", tc.replicas);
    t.get("tolerance", tc.tolerance);
    t.reject_unknown();
    toy::ToyParams tp{tc.lambda_plus, tc.lambda_minus, tc.u, tc.tick, 1, 0};
    try {
      tp.validate();
    } catch (const std::invalid_argument& e) {
      t.fail("toy", "toy", e.what());
    }
    if (tc.replicas < 2) t.fail("replicas", "toy.replicas", "must be >= 2");
    if (!(tc.scaling_n >= 1.0)) t.fail("scaling_n", "toy.scaling_n", "must be >= 1");
  }
  top.get("output_dir", c.output_dir);
  top.reject_unknown();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  const auto& p = c.model;
  j["model"] = {{"frame_size", p.frame_size},
                {"unit", p.unit},
                {"tick", p.tick},
                {"rate_market_buy", p.rate_market_buy},
                {"rate_market_sell", p.rate_market_sell},
                {"rate_limit_ask", p.rate_limit_ask},
                {"rate_limit_bid", p.rate_limit_bid},
                {"rate_cancel_ask", p.rate_cancel_ask},
                {"rate_cancel_bid", p.rate_cancel_bid},
                {"boundary_ask", p.boundary_ask},
                {"boundary_bid", p.boundary_bid},
                {"cancel_mode", to_string(p.cancel_mode)}};
  const auto& s = c.simulation;
  j["simulation"] = {{"seed", s.seed},
                     {"n_events", s.n_events},
                     {"burn_in", s.burn_in},
                     {"snapshot_stride", s.snapshot_stride},
                     {"replicas", s.replicas},
                     {"threads", s.threads}};
  if (!s.initial_ask_shares.empty()) {
    j["simulation"]["initial_ask_shares"] = s.initial_ask_shares;
    j["simulation"]["initial_bid_shares"] = s.initial_bid_shares;
  }
  const auto& a = c.analysis;
  j["analysis"] = {{"max_lag", a.max_lag},
                   {"cutoff",
                    {{"rule", a.cutoff.kind == CutoffRule::Kind::kFixed ? "fixed" : "consecutive"},
                     {"run", a.cutoff.run},
                     {"band", a.cutoff.band},
                     {"lag", a.cutoff.fixed}}},
                   {"variance_grid", a.variance_grid},
                   {"aggregation_windows", a.aggregation_windows},
                   {"batches", a.batches},
                   {"weighting", to_string(a.weighting)}};
  const auto& d = c.drift;
  j["drift"] = {{"n_visited", d.n_visited}, {"n_heavy", d.n_heavy}, {"max_phi", d.max_phi},
                {"stride", d.stride},       {"burn_in", d.burn_in},  {"z", d.z}};
  const auto& o = c.oracle;
  j["oracle"] = {{"cap", o.cap}, {"max_states", o.max_states}, {"n_events", o.n_events}, {"tolerance", o.tolerance}};
  const auto& t = c.toy;
  j["toy"] = {{"lambda_plus", t.lambda_plus}, {"lambda_minus", t.lambda_minus}, {"u", t.u},
              {"tick", t.tick},               {"path_events", t.path_events},   {"scaling_n", t.scaling_n},
              {"replicas", t.replicas},       {"tolerance", t.tolerance}};
  j["output_dir"] = c.output_dir;
  return j;
}

inline SimulationOptions simulation_options(const RunConfig& c) {
  SimulationOptions o;
  o.seed = c.simulation.seed;
  o.n_events = c.simulation.n_events;
  o.burn_in = c.simulation.burn_in;
  o.snapshot_stride = c.simulation.snapshot_stride;
  if (!c.simulation.initial_ask_shares.empty()) {
    BookState s;
    for (auto v : c.simulation.initial_ask_shares) s.ask.push_back(v / c.model.unit);
    for (auto v : c.simulation.initial_bid_shares) s.bid.push_back(v / c.model.unit);
    o.initial_state = s;
  }
  return o;
}

inline toy::ToyParams toy_params(const RunConfig& c) {
  toy::ToyParams t;
  t.lambda_plus = c.toy.lambda_plus;
  t.lambda_minus = c.toy.lambda_minus;
  t.u = c.toy.u;
  t.tick = c.toy.tick;
  t.seed = c.simulation.seed;
  t.n_events = c.toy.path_events;
  return t;
}

}  // namespace lobsim
