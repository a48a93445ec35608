#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace lobsim;

namespace {

const char* kMinimal = R"({
  "model": {
    "frame_size": 3,
    "rate_limit_ask": [1.0, 0.5, 0.25],
    "cancel_mode": "constant"
  },
  "simulation": { "seed": 42, "n_events": 1000 }
})";

std::size_t error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.model.frame_size, 3);
  EXPECT_EQ(c.model.rate_limit_ask, (std::vector<double>{1.0, 0.5, 0.25}));
  EXPECT_EQ(c.model.rate_limit_bid, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(c.model.cancel_mode, CancelMode::kConstant);
  EXPECT_EQ(c.simulation.seed, 42u);
  EXPECT_EQ(c.simulation.burn_in, 100'000u);
  EXPECT_EQ(c.analysis.max_lag, 100u);
}

TEST(Config, RoundTrip) {
  auto c = parse_config(kMinimal);
  c.analysis.variance_grid = {10, 100, 1000};
  c.analysis.cutoff = CutoffRule::fixed_lag(7);
  c.simulation.initial_ask_shares = {0, 2, 1};
  c.simulation.initial_bid_shares = {0, 1, 0};
  c.model.tick = 0.1;
  c.toy.u = 1.0 / 3.0;
  const auto text = to_json(c).dump(2);
  const auto back = parse_config(text);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(to_json(back).dump(2), text);
}

TEST(Config, UnknownKeysRejectedWithLine) {
  EXPECT_EQ(error_line("{\n  \"model\": {\n    \"frame_size\": 2,\n    \"rate_markt_buy\": 1\n  }\n}"), 4u);
  EXPECT_EQ(error_line("{\n\"simulation\": {},\n\"extra\": 1\n}"), 3u);
}

TEST(Config, NegativeRateNamesField) {
  const std::string text = "{\n  \"model\": {\n    \"frame_size\": 2,\n    \"rate_cancel_bid\": [1, -1]\n  }\n}";
  try {
    parse_config(text);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("rate_cancel_bid[2]"), std::string::npos);
  }
}

TEST(Config, TypeAndSyntaxErrors) {
  EXPECT_EQ(error_line("{\n\"simulation\": {\"seed\": \"x\"}\n}"), 2u);
  EXPECT_EQ(error_line("{\n\"simulation\": {\"n_events\": -5}\n}"), 2u);
  EXPECT_EQ(error_line("{\n\"model\": {\n}\n,}"), 4u);
  EXPECT_THROW(parse_config("{\"model\": {\"cancel_mode\": \"sometimes\"}}"), ConfigError);
  EXPECT_THROW(parse_config("{\"analysis\": {\"cutoff\": {\"rule\": \"magic\"}}}"), ConfigError);
  EXPECT_THROW(parse_config("{\"toy\": {\"u\": 2}}"), ConfigError);
  EXPECT_THROW(parse_config("{\"model\": {\"frame_size\": 2, \"rate_cancel_ask\": 0}}"), ConfigError);
}

TEST(Io, TraceRoundTrip) {
  const auto p = ModelParams::flat(3, 1, 1, 1, 2);
  SimulationOptions o;
  o.seed = 5;
  o.n_events = 5000;
  o.burn_in = 100;
  o.snapshot_stride = 50;
  const auto tr = simulate(p, o);
  std::stringstream ss;
  io::write_trace_csv(ss, tr);
  auto back = io::read_trace_csv(ss);
  std::stringstream snaps;
  io::write_snapshots_csv(snaps, tr, p);
  io::read_snapshots_csv(snaps, back, p);
  back.frame_size = tr.frame_size;
  back.params_digest = tr.params_digest;
  back.seed = tr.seed;
  EXPECT_EQ(back, tr);
}

TEST(Io, HaltedTraceKeepsMarker) {
  Trace tr;
  tr.start_time = 1.5;
  tr.start_mid = 10;
  tr.start_spread = 2;
  tr.halted = true;
  std::stringstream ss;
  io::write_trace_csv(ss, tr);
  const auto back = io::read_trace_csv(ss);
  EXPECT_TRUE(back.halted);
  EXPECT_TRUE(back.empty());
  EXPECT_EQ(back.start_mid, 10);
}

TEST(Io, MalformedTraceRejected) {
  std::stringstream a("t,code\n");
  EXPECT_THROW(io::read_trace_csv(a), io::FormatError);
  std::stringstream b("t_model_time,event_code,mid_half_ticks,spread_ticks\n1.0,3,2,1\n");
  EXPECT_THROW(io::read_trace_csv(b), io::FormatError);
  std::stringstream c("t_model_time,event_code,mid_half_ticks,spread_ticks\n1.0,-1,2,1\n2.0,x,2,1\n");
  EXPECT_THROW(io::read_trace_csv(c), io::FormatError);
}

TEST(Io, NumbersRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567}) EXPECT_EQ(std::stod(io::num(x)), x);
}
