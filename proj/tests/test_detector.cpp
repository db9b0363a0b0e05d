#include <doctest.h>

#include <cmath>
#include <random>

#include "swgsim/detector.hpp"
#include "swgsim/errors.hpp"
#include "swgsim/stats.hpp"

using namespace swg;

namespace {

DetectorParams params_223k() {
  DetectorParams p;
  p.temperature_k = 223.0;
  p.pde = 0.10;
  p.dcr = {65.18452117343911, 10.592199273977958};
  p.gate_width = {1.9209256219835212e-10, 1.0824837089880885e-10};
  p.traps = {20.0, 4e-7, 0.17};
  return p;
}

DetectorParams trapless_223k() {
  DetectorParams p = params_223k();
  p.traps = {0.0, 1e-6, 0.0};
  return p;
}

}  // namespace

TEST_CASE("per-gate dark probability matches the calibrated operating point") {
  const auto p = params_223k();
  CHECK(p.dcr.at(0.10) == doctest::Approx(188.0).epsilon(1e-9));
  GateClock clock;
  PhotonSource source;
  EngineState state;
  const auto gp = per_gate_probabilities(p, clock, source, state, 0);
  CHECK(gp.dark == doctest::Approx(1.504e-7).epsilon(1e-3));
  CHECK(gp.photon == doctest::Approx(1.0 - std::exp(-0.10)).epsilon(1e-12));
  CHECK(per_gate_probabilities(p, clock, source, state, 1).photon == 0.0);
}

TEST_CASE("photon probability vanishes with the source off") {
  const auto p = params_223k();
  GateClock clock;
  PhotonSource source;
  source.mu = 0.0;
  EngineState state;
  for (std::uint64_t g : {0ull, 1ull, 2000ull, 12345ull}) {
    CHECK(per_gate_probabilities(p, clock, source, state, g).photon == 0.0);
  }
}

TEST_CASE("gate transmission halves at half the configured width") {
  auto p = params_223k();
  const double width = p.gate_width.at(p.pde);
  GateClock clock;
  PhotonSource source;
  EngineState state;
  const auto centered = per_gate_probabilities(p, clock, source, state, 0);
  const auto shifted = per_gate_probabilities(
      p, set_delay(clock, 0.5 * width), source, state, 0);
  const double eta_centered = -std::log(1.0 - centered.photon) / source.mu;
  const double eta_shifted = -std::log(1.0 - shifted.photon) / source.mu;
  CHECK(eta_centered == doctest::Approx(p.pde).epsilon(1e-12));
  CHECK(eta_shifted == doctest::Approx(0.5 * p.pde).epsilon(1e-9));
}

TEST_CASE("set_delay is a pure clock update with range checking") {
  GateClock clock;
  const auto same = set_delay(clock, 0.0);
  CHECK(same.phase_offset_s == 0.0);
  const auto half = set_delay(clock, 0.5 * clock.period_s());
  CHECK(half.phase_offset_s == doctest::Approx(4e-10));
  CHECK(clock.phase_offset_s == 0.0);
  CHECK_THROWS_AS(set_delay(clock, clock.period_s()), std::invalid_argument);
  CHECK_THROWS_AS(set_delay(clock, -1e-12), std::invalid_argument);
}

TEST_CASE("trap population decays exponentially and refills on avalanches") {
  auto p = params_223k();
  p.traps.tau_detrap_s = 1e-6;
  GateClock clock;  // 0.8 ns period
  EngineState st;
  st.trap_population = 10.0;
  st = trap_update(st, 0, false, p, clock);
  CHECK(st.trap_population == doctest::Approx(10.0 * std::exp(-0.0008)).epsilon(1e-12));
  CHECK(st.trap_population == doctest::Approx(9.992003).epsilon(1e-6));

  EngineState empty;
  empty = trap_update(empty, 0, true, p, clock);
  CHECK(empty.trap_population == doctest::Approx(p.traps.n_fill).epsilon(1e-12));
}

TEST_CASE("per-gate probabilities stay in [0,1] across fuzzed configurations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> logu(-3.0, 3.0);
  GateClock clock;
  for (int i = 0; i < 10000; ++i) {
    DetectorParams p;
    p.pde = u01(rng);
    p.dcr = {std::pow(10.0, logu(rng) + 2.0), 12.0 * u01(rng)};
    p.gate_width = {0.0, (0.05 + 0.9 * u01(rng)) * clock.period_s()};
    p.traps = {200.0 * u01(rng), std::pow(10.0, logu(rng) - 7.0), u01(rng)};
    PhotonSource src;
    src.mu = 3.0 * u01(rng);
    EngineState st;
    st.trap_population = 1e4 * u01(rng);
    const auto clk = set_delay(clock, u01(rng) * clock.period_s() * 0.999);
    const auto gp = per_gate_probabilities(p, clk, src, st, i % 4000);
    for (double v : {gp.photon, gp.dark, gp.afterpulse}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("dark rate over one second matches the model within Poisson bounds") {
  const auto p = trapless_223k();
  GateClock clock;
  PhotonSource off;
  off.mu = 0.0;
  HoldOffPolicy ho{100e-9};
  const auto res = run_sequence(p, clock, off, ho, 1'250'000'000ULL, 99);
  const double expected = 188.0;
  const double sigma = std::sqrt(expected);
  CHECK(std::fabs(static_cast<double>(res.counts.recorded.total()) - expected) <
        3.0 * sigma);
  CHECK(res.counts.recorded.photon == 0);
  CHECK(res.counts.recorded.afterpulse == 0);
}

TEST_CASE("infinite hold-off records at most one event") {
  auto p = params_223k();
  p.dcr.dcr0_cps = 1e7;  // plenty of avalanches
  GateClock clock;
  PhotonSource off;
  off.mu = 0.0;
  HoldOffPolicy forever{1.0};  // 1 s >> run length
  for (auto mode : {EngineMode::fast, EngineMode::exact_loop}) {
    RunOptions opts;
    opts.mode = mode;
    const auto res = run_sequence(p, clock, off, forever, 1'000'000, 5, opts);
    CHECK(res.counts.recorded.total() <= 1);
    CHECK(res.counts.unrecorded.total() > 100);
  }
}

TEST_CASE("identical seeds reproduce identical event streams") {
  const auto p = params_223k();
  GateClock clock;
  PhotonSource src;
  HoldOffPolicy ho{100e-9};
  for (auto mode : {EngineMode::fast, EngineMode::exact_loop}) {
    RunOptions opts;
    opts.mode = mode;
    opts.record_events = true;
    const auto a = run_sequence(p, clock, src, ho, 2'000'000, 1234, opts);
    const auto b = run_sequence(p, clock, src, ho, 2'000'000, 1234, opts);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].gate_index == b.events[i].gate_index);
      CHECK(a.events[i].t_s == b.events[i].t_s);
      CHECK(a.events[i].cause == b.events[i].cause);
      CHECK(a.events[i].recorded == b.events[i].recorded);
    }
  }
}

TEST_CASE("count-off suppression relabels but never prevents avalanches") {
  // Trap model zeroed and the naive loop draws one uniform per gate, so the
  // avalanche sequence is a pure function of the seed, independent of the
  // hold-off setting.
  auto p = trapless_223k();
  p.dcr.dcr0_cps *= 100.0;
  GateClock clock;
  PhotonSource src;
  RunOptions opts;
  opts.mode = EngineMode::exact_loop;
  opts.record_events = true;

  std::vector<std::uint64_t> gates_ref;
  std::uint64_t total_ref = 0;
  for (double holdoff_s : {0.0, 1e-7, 1e-6, 1e-5}) {
    const auto res =
        run_sequence(p, clock, src, HoldOffPolicy{holdoff_s}, 3'000'000, 77, opts);
    std::vector<std::uint64_t> gates;
    for (const auto& e : res.events) gates.push_back(e.gate_index);
    const std::uint64_t total =
        res.counts.recorded.total() + res.counts.unrecorded.total();
    if (gates_ref.empty()) {
      gates_ref = gates;
      total_ref = total;
    } else {
      CHECK(gates == gates_ref);
      CHECK(total == total_ref);
    }
  }
}

TEST_CASE("skip-sampling matches the naive loop distributionally") {
  GateClock clock;
  HoldOffPolicy ho{100e-9};

  struct GuardConfig {
    const char* name;
    DetectorParams params;
    PhotonSource source;
  };
  std::vector<GuardConfig> configs;
  {  // dark-only geometric stretch
    auto p = trapless_223k();
    p.dcr.dcr0_cps = 4e4;
    PhotonSource off;
    off.mu = 0.0;
    configs.push_back({"dark-only", p, off});
  }
  {  // source pulses handled gate-by-gate
    auto p = trapless_223k();
    PhotonSource src;
    src.mu = 0.3;
    configs.push_back({"source", p, src});
  }
  {  // trap-tail thinning
    auto p = params_223k();
    p.dcr.dcr0_cps = 2e4;
    p.traps = {20.0, 2e-7, 0.5};
    PhotonSource src;
    src.mu = 0.5;
    configs.push_back({"traps", p, src});
  }
  {  // hold-off flagging active
    auto p = params_223k();
    p.dcr.dcr0_cps = 5e4;
    p.traps = {40.0, 4e-7, 0.6};
    PhotonSource src;
    src.mu = 1.0;
    configs.push_back({"holdoff", p, src});
  }

  for (const auto& cfg : configs) {
    CAPTURE(cfg.name);
    std::vector<double> fast, naive;
    for (int s = 0; s < 100; ++s) {
      RunOptions f, n;
      f.mode = EngineMode::fast;
      n.mode = EngineMode::exact_loop;
      fast.push_back(static_cast<double>(
          run_sequence(cfg.params, clock, cfg.source, ho, 1'000'000, 10'000 + s, f)
              .counts.recorded.total()));
      naive.push_back(static_cast<double>(
          run_sequence(cfg.params, clock, cfg.source, ho, 1'000'000, 90'000 + s, n)
              .counts.recorded.total()));
    }
    const auto ks = ks_two_sample(fast, naive);
    CHECK(ks.p_value > 0.01);
  }
}

TEST_CASE("integer-trap validation mode agrees with the expected-value mode") {
  auto p = params_223k();
  p.traps = {20.0, 2e-7, 0.5};
  p.dcr.dcr0_cps = 2e4;
  GateClock clock;
  PhotonSource src;
  src.mu = 0.5;
  HoldOffPolicy ho{100e-9};

  RunOptions exact;
  exact.mode = EngineMode::exact_loop;
  exact.integer_traps = true;
  RunOptions expected;
  expected.mode = EngineMode::exact_loop;

  std::vector<double> a, b;
  for (int s = 0; s < 60; ++s) {
    a.push_back(static_cast<double>(
        run_sequence(p, clock, src, ho, 500'000, 300 + s, exact).counts.recorded.total()));
    b.push_back(static_cast<double>(
        run_sequence(p, clock, src, ho, 500'000, 700 + s, expected).counts.recorded.total()));
  }
  const auto ks = ks_two_sample(a, b);
  CHECK(ks.p_value > 0.01);

  RunOptions bad;
  bad.mode = EngineMode::fast;
  bad.integer_traps = true;
  CHECK_THROWS_AS(run_sequence(p, clock, src, ho, 1000, 1, bad), std::invalid_argument);
}

TEST_CASE("event sink streams exactly the recorded event list") {
  const auto p = params_223k();
  GateClock clock;
  PhotonSource src;
  HoldOffPolicy ho{100e-9};
  std::vector<EventRecord> streamed;
  RunOptions opts;
  opts.record_events = true;
  opts.event_sink = [&](const EventRecord& e) { streamed.push_back(e); };
  const auto res = run_sequence(p, clock, src, ho, 2'000'000, 55, opts);
  REQUIRE(streamed.size() == res.events.size());
  for (std::size_t i = 0; i < streamed.size(); ++i) {
    CHECK(streamed[i].gate_index == res.events[i].gate_index);
    CHECK(streamed[i].recorded == res.events[i].recorded);
  }
  // Event times sit on the gate crest.
  for (const auto& e : res.events) {
    CHECK(e.t_s == doctest::Approx((e.gate_index + 0.25) / clock.gate_freq_hz));
  }
}

TEST_CASE("event buffer overflow raises the documented error") {
  auto p = params_223k();
  p.dcr.dcr0_cps = 1e7;
  GateClock clock;
  PhotonSource off;
  off.mu = 0.0;
  RunOptions opts;
  opts.record_events = true;
  opts.event_cap = 10;
  CHECK_THROWS_AS(
      run_sequence(p, clock, off, HoldOffPolicy{0.0}, 10'000'000, 3, opts),
      event_buffer_overflow_error);
}

TEST_CASE("parameter validation rejects out-of-range fields") {
  GateClock clock;
  DetectorParams p = params_223k();
  p.pde = 1.5;
  CHECK_THROWS_AS(p.validate(clock.gate_freq_hz), std::invalid_argument);
  p = params_223k();
  p.gate_width.b_s = 1e-9;  // equals the gate period: invalid
  CHECK_THROWS_AS(p.validate(clock.gate_freq_hz), std::invalid_argument);
  p = params_223k();
  p.traps.p_trigger = 1.5;
  CHECK_THROWS_AS(p.validate(clock.gate_freq_hz), std::invalid_argument);
}
