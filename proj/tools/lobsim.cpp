#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lobsim/lobsim.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace lobsim;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kVerdictFail = 2;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  bool svg = false;
  std::string trace;
  std::string snapshots;
};

/// SHA-1 of "blob <size>\0<content>", the hash git assigns to a file.
std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha1 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

RunConfig load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config", "a config file is required");
  RunConfig c = load_config(f.config);
  if (f.seed) c.simulation.seed = *f.seed;
  if (f.replicas) {
    if (*f.replicas < 1) throw ConfigError("--replicas", "must be >= 1");
    c.simulation.replicas = *f.replicas;
    c.toy.replicas = *f.replicas;
  }
  if (!f.out.empty()) c.output_dir = f.out;
  return c;
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    io::write_file(dir_ / name, content);
    files_.push_back({{"file", name}, {"bytes", content.size()}, {"git_blob_sha1", git_blob_sha1(content)}});
  }
  template <typename W>
  void write_with(const std::string& name, W&& w) {
    std::ostringstream ss;
    w(ss);
    write(name, ss.str());
  }
  const Json& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  Json files_ = Json::array();
};

// ---------------------------------------------------------------------------

int cmd_simulate(const Flags& f) {
  const RunConfig c = load(f);
  const auto& p = c.model;
  SimulationOptions opt = simulation_options(c);
  std::vector<std::uint64_t> seeds{c.simulation.seed};
  if (c.simulation.replicas > 1) seeds = replica_seeds(c.simulation.seed, c.simulation.replicas);
  std::vector<Trace> traces;
  try {
    traces = c.simulation.replicas > 1 ? simulate_replicas(p, seeds, opt, c.simulation.threads)
                                       : std::vector<Trace>{simulate(p, opt)};
  } catch (const std::invalid_argument& e) {
    throw ConfigError("simulation", e.what());
  }

  Outputs out(c.output_dir);
  Json runs = Json::array();
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const std::string prefix = traces.size() > 1 ? "replica_" + std::to_string(r) + "/" : "";
    out.write_with(prefix + "trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, traces[r]); });
    if (c.simulation.snapshot_stride > 0) {
      out.write_with(prefix + "snapshots.csv", [&](std::ostream& os) { io::write_snapshots_csv(os, traces[r], p); });
    }
    runs.push_back({{"seed", seeds[r]}, {"events", traces[r].size()}, {"halted", traces[r].halted}});
  }
  Json manifest;
  manifest["command"] = "simulate";
  manifest["seed"] = c.simulation.seed;
  manifest["params_digest"] = params_digest(p);
  manifest["event_codes"] = "0 M+, 1 M-, 2..N+1 L+, N+2..2N+1 L-, 2N+2..3N+1 C+, 3N+2..4N+1 C-; -1 start row, -2 halt";
  manifest["runs"] = runs;
  manifest["files"] = out.files();
  manifest["config"] = to_json(c);
  io::write_file(out.dir() / "manifest.json", io::dump(manifest));
  std::cout << "simulate: " << traces.size() << " run(s), " << (traces.empty() ? 0 : traces[0].size())
            << " events each, written to " << out.dir().string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

std::string svg_depth(const StationaryEstimates& e) {
  io::Series a, b;
  a.bars = b.bars = true;
  for (std::size_t i = 0; i < e.ask_depth.size(); ++i) {
    a.x.push_back(static_cast<double>(i + 1));
    a.y.push_back(e.ask_depth[i]);
    b.x.push_back(-static_cast<double>(i + 1));
    b.y.push_back(e.bid_depth[i]);
  }
  return io::svg_chart("mean depth profile", "level (ticks; bid negative)", "shares", {a, b});
}

std::string svg_histogram(const std::string& title, const std::string& xlabel, const std::vector<double>& x,
                          const std::vector<double>& y) {
  io::Series s{x, y, true};
  return io::svg_chart(title, xlabel, "probability", {s});
}

int cmd_stats(const Flags& f) {
  const RunConfig c = load(f);
  const auto& p = c.model;
  const fs::path dir = c.output_dir;
  const fs::path trace_path = f.trace.empty() ? dir / "trace.csv" : fs::path(f.trace);
  if (!fs::exists(trace_path)) throw ConfigError("--trace", "trace file not found: " + trace_path.string());
  std::ifstream in(trace_path, std::ios::binary);
  Trace tr = io::read_trace_csv(in);
  tr.frame_size = p.frame_size;
  tr.params_digest = params_digest(p);

  const fs::path manifest_path = trace_path.parent_path() / "manifest.json";
  if (fs::exists(manifest_path)) {
    const auto m = Json::parse(io::read_file(manifest_path));
    if (m.contains("params_digest") && m["params_digest"] != tr.params_digest) {
      throw ConfigError("model", "trace was produced with parameters " + m["params_digest"].get<std::string>() +
                                     ", config has " + tr.params_digest);
    }
  }
  const fs::path snap_path = f.snapshots.empty() ? trace_path.parent_path() / "snapshots.csv" : fs::path(f.snapshots);
  if (fs::exists(snap_path)) {
    std::ifstream sin(snap_path, std::ios::binary);
    io::read_snapshots_csv(sin, tr, p);
  }
  if (tr.empty()) throw ConfigError("--trace", "trace has no events after burn-in");

  const StatsReport r = compute_stats(tr, p, c.analysis);

  Outputs out(dir);
  out.write_with("depth_profile.csv", [&](std::ostream& os) { io::write_depth_profile_csv(os, r.stationary); });
  out.write_with("spread_histogram.csv", [&](std::ostream& os) { io::write_spread_histogram_csv(os, r.stationary); });
  out.write_with("increment_histogram.csv",
                 [&](std::ostream& os) { io::write_increment_histogram_csv(os, r.increment_histogram); });
  out.write_with("autocorrelation.csv", [&](std::ostream& os) { io::write_autocorrelation_csv(os, r.autocovariance); });
  out.write_with("variance_curve.csv", [&](std::ostream& os) {
    io::write_variance_curve_csv(os, r.variance.points, r.variance.fit, "horizon_events");
  });
  if (r.physical) {
    out.write_with("variance_curve_physical.csv", [&](std::ostream& os) {
      io::write_variance_curve_csv(os, r.physical->points, r.physical->fit, "horizon_model_time");
    });
  }
  if (f.svg) {
    out.write("depth_profile.svg", svg_depth(r.stationary));
    std::vector<double> sx, sy;
    for (std::size_t s = 1; s < r.stationary.spread_histogram.size(); ++s) {
      sx.push_back(static_cast<double>(s));
      sy.push_back(r.stationary.spread_histogram[s]);
    }
    out.write("spread_histogram.svg", svg_histogram("spread distribution", "spread (ticks)", sx, sy));
    std::vector<double> ix, iy;
    for (const auto& [k, n] : r.increment_histogram) {
      ix.push_back(static_cast<double>(k));
      iy.push_back(static_cast<double>(n) / static_cast<double>(r.events));
    }
    out.write("increment_histogram.svg", svg_histogram("mid-price increments", "increment (half-ticks)", ix, iy));
    io::Series ac;
    for (std::size_t k = 0; k < r.autocovariance.size(); ++k) {
      ac.x.push_back(static_cast<double>(k));
      ac.y.push_back(r.autocovariance[k] / r.autocovariance[0]);
    }
    out.write("autocorrelation.svg", io::svg_chart("increment autocorrelation", "lag (events)", "rho", {ac}));
    io::Series vc, fit;
    for (const auto& pt : r.variance.points) {
      vc.x.push_back(pt.horizon);
      vc.y.push_back(pt.variance);
      fit.x.push_back(pt.horizon);
      fit.y.push_back(r.variance.fit.intercept + r.variance.fit.slope * pt.horizon);
    }
    out.write("variance_curve.svg",
              io::svg_chart("variance of mid-price change", "horizon (events)", "half-ticks^2", {vc, fit}));
  }
  Json summary = io::stats_summary_json(r, p);
  summary["trace"] = trace_path.filename().string();
  summary["files"] = out.files();
  io::write_file(dir / "stats_summary.json", io::dump(summary));
  std::cout << "stats: sigma2 = " << io::num(r.sigma2_series.sigma2) << " (series), " << io::num(r.sigma2_batch)
            << " (batch means), " << io::num(r.variance.fit.slope) << " (regression, R2 " << io::num(r.variance.fit.r2)
            << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_drift_check(const Flags& f) {
  const RunConfig c = load(f);
  const auto& p = c.model;
  if (p.cancel_mode != CancelMode::kProportional) {
    throw ConfigError("model.cancel_mode", "drift-check needs proportional cancellations; use stability");
  }
  const auto& d = c.drift;
  const auto sample = drift_sample(p, c.simulation.seed, d.n_visited, d.n_heavy, d.max_phi, d.stride, d.burn_in);
  const DriftReport cont = drift_check_continuous(p, sample);
  const DriftReport emb = drift_check_embedded(p, d.z, sample);

  Outputs out(c.output_dir);
  out.write_with("drift_continuous.csv", [&](std::ostream& os) { io::write_drift_csv(os, cont); });
  out.write_with("drift_embedded.csv", [&](std::ostream& os) { io::write_drift_csv(os, emb); });
  Json j;
  j["params_digest"] = params_digest(p);
  j["seed"] = c.simulation.seed;
  j["continuous"] = io::drift_json(cont);
  j["embedded"] = io::drift_json(emb);
  const bool pass = cont.pass && emb.pass;
  j["verdict"] = pass ? "pass" : "fail";
  j["files"] = out.files();
  io::write_file(out.dir() / "drift_summary.json", io::dump(j));
  std::cout << "drift-check: continuous " << (cont.pass ? "pass" : "fail") << " (beta " << io::num(cont.beta)
            << ", gamma " << io::num(cont.gamma) << "), embedded " << (emb.pass ? "pass" : "fail") << " (z "
            << io::num(emb.z) << ", beta " << io::num(emb.beta) << ", A " << emb.threshold << ")\n";
  return pass ? kOk : kVerdictFail;
}

int cmd_stability(const Flags& f) {
  const RunConfig c = load(f);
  const auto& p = c.model;
  Json j;
  j["params_digest"] = params_digest(p);
  j["cancel_mode"] = to_string(p.cancel_mode);
  bool holds = true;
  if (p.cancel_mode == CancelMode::kProportional) {
    j["condition"] = "every per-order cancellation rate is positive";
    j["min_cancel_rate"] = p.min_cancel_rate();
    holds = p.min_cancel_rate() > 0.0;
  } else {
    const auto r = stability_condition(p);
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["margin"] = r.margin;
    if (r.symmetric_margin) j["symmetric_margin"] = *r.symmetric_margin;
    holds = r.holds;
  }
  j["verdict"] = holds ? "pass" : "fail";
  io::write_file(fs::path(c.output_dir) / "stability.json", io::dump(j));
  std::cout << "stability: " << (holds ? "holds" : "violated");
  if (j.contains("margin")) std::cout << ", margin " << io::num(j["margin"].get<double>());
  std::cout << "\n";
  return holds ? kOk : kVerdictFail;
}

int cmd_oracle(const Flags& f) {
  const RunConfig c = load(f);
  const auto& p = c.model;
  TruncationOptions topt;
  topt.cap = c.oracle.cap;
  topt.max_states = c.oracle.max_states;
  StationaryDistribution pi;
  try {
    pi = truncated_stationary(p, topt);
  } catch (const OracleError& e) {
    throw ConfigError("oracle", e.what());
  }
  SimulationOptions opt = simulation_options(c);
  opt.n_events = c.oracle.n_events;
  opt.snapshot_stride = 0;
  const Trace tr = simulate(p, opt);
  const auto est = stationary_estimators(tr, p);
  const auto oracle_spread = pi.spread_marginal();
  const double tv = total_variation(oracle_spread, est.spread_histogram);
  const bool pass = tv <= c.oracle.tolerance;

  Outputs out(c.output_dir);
  out.write_with("stationary.csv", [&](std::ostream& os) { io::write_stationary_csv(os, pi, p); });
  Json j;
  j["params_digest"] = params_digest(p);
  j["seed"] = c.simulation.seed;
  j["cap"] = pi.cap;
  j["states"] = pi.states.size();
  j["residual"] = pi.residual;
  j["boundary_mass"] = pi.boundary_mass;
  j["simulated_events"] = tr.size();
  Json rows = Json::array();
  for (std::size_t s = 1; s < oracle_spread.size(); ++s) {
    rows.push_back({{"spread_ticks", s}, {"oracle", oracle_spread[s]}, {"simulated", est.spread_histogram[s]}});
  }
  j["spread"] = rows;
  j["total_variation"] = tv;
  j["tolerance"] = c.oracle.tolerance;
  j["verdict"] = pass ? "pass" : "fail";
  j["files"] = out.files();
  io::write_file(out.dir() / "oracle_summary.json", io::dump(j));
  std::cout << "oracle: " << pi.states.size() << " states, boundary mass " << io::num(pi.boundary_mass)
            << ", spread TV " << io::num(tv) << " (tolerance " << io::num(c.oracle.tolerance) << ")\n";
  return pass ? kOk : kVerdictFail;
}

int cmd_toy(const Flags& f) {
  const RunConfig c = load(f);
  const auto tp = toy_params(c);
  const auto th = toy::theoretical_moments(tp);
  const auto path = toy::simulate_toy(tp);
  const double horizon = path.t.empty() ? 0.0 : path.t.back();
  double qv = 0.0;
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    if (path.moved[k]) qv += tp.tick * tp.tick;
  }
  const double mu_hat = horizon > 0 ? (path.price.empty() ? 0.0 : path.price.back()) / horizon : 0.0;
  const double sigma2_hat = horizon > 0 ? qv / horizon : 0.0;
  auto rel = [](double est, double ref) { return ref != 0.0 ? (est - ref) / ref : est - ref; };

  Outputs out(c.output_dir);
  out.write_with("toy_path.csv", [&](std::ostream& os) { io::write_toy_path_csv(os, path); });
  Json j;
  j["seed"] = tp.seed;
  j["events"] = path.t.size();
  j["mu_theory"] = th.mu;
  j["sigma2_theory"] = th.sigma * th.sigma;
  j["mu_hat"] = mu_hat;
  j["sigma2_hat"] = sigma2_hat;
  j["mu_error"] = rel(mu_hat, th.mu);
  j["sigma2_relative_error"] = rel(sigma2_hat, th.sigma * th.sigma);

  bool pass = true;
  if (th.sigma > 0.0) {
    const auto fc = toy::fclt_check(tp, c.toy.scaling_n, c.toy.replicas);
    Json pts = Json::array();
    for (const auto& pt : fc.points) {
      pts.push_back({{"t", pt.t}, {"mean", pt.mean}, {"mean_se", pt.mean_se}, {"variance", pt.variance}});
      if (std::abs(pt.mean) > 4.0 * pt.mean_se) pass = false;
    }
    const double var1 = fc.points.back().variance;
    if (std::abs(var1 - 1.0) > c.toy.tolerance) pass = false;
    if (std::abs(fc.increment_correlation) > 4.0 * fc.correlation_se) pass = false;
    j["fclt"] = {{"n", fc.n},
                 {"replicas", fc.replicas},
                 {"points", pts},
                 {"variance_at_1", var1},
                 {"tolerance", c.toy.tolerance},
                 {"increment_correlation", fc.increment_correlation},
                 {"correlation_se", fc.correlation_se}};
  }
  j["verdict"] = pass ? "pass" : "fail";
  j["files"] = out.files();
  io::write_file(out.dir() / "toy_summary.json", io::dump(j));
  std::cout << "toy: mu " << io::num(mu_hat) << " (theory " << io::num(th.mu) << "), sigma2 " << io::num(sigma2_hat)
            << " (theory " << io::num(th.sigma * th.sigma) << "), verdict " << (pass ? "pass" : "fail") << "\n";
  return pass ? kOk : kVerdictFail;
}

void common_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "run configuration (JSON)")->required();
  sub->add_option("--out", f.out, "output directory (overrides output_dir)");
  sub->add_option("--seed", f.seed, "master seed (overrides simulation.seed)");
  sub->add_option("--replicas", f.replicas, "replica count");
  sub->add_flag("--svg", f.svg, "also render SVG charts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lobsim: limit order book simulator and diagnostics"};
  app.require_subcommand(1);
  Flags f;
  auto* sim = app.add_subcommand("simulate", "simulate the book and write traces");
  auto* stats = app.add_subcommand("stats", "price statistics from a trace");
  auto* drift = app.add_subcommand("drift-check", "numerical drift conditions");
  auto* stab = app.add_subcommand("stability", "stability condition for constant cancellations");
  auto* oracle = app.add_subcommand("oracle", "truncated stationary law versus simulation");
  auto* toy = app.add_subcommand("toy", "constant-spread market making model");
  for (auto* s : {sim, stats, drift, stab, oracle, toy}) common_flags(s, f);
  stats->add_option("--trace", f.trace, "trace CSV (default <out>/trace.csv)");
  stats->add_option("--snapshots", f.snapshots, "snapshot CSV (default next to the trace)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*sim) return cmd_simulate(f);
    if (*stats) return cmd_stats(f);
    if (*drift) return cmd_drift_check(f);
    if (*stab) return cmd_stability(f);
    if (*oracle) return cmd_oracle(f);
    if (*toy) return cmd_toy(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParamError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const io::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
