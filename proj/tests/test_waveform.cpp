#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "swgsim/waveform.hpp"

using namespace swg;

namespace {

const ChainConfig& spec_chain() {
  static const ChainConfig chain = default_chain();
  return chain;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("no-signal trace equals the analytic feed-through residual") {
  const auto& chain = spec_chain();
  const auto trace = simulate_gate_waveform(chain, {}, 2e-6, 0.0, 1);
  CHECK(trace.sample_rate_hz >= 10.0 * chain.gate_freq_hz);
  const double predicted = predicted_feedthrough_rms(chain);
  CHECK(rms(trace.samples) == doctest::Approx(predicted).epsilon(1e-6));
}

TEST_CASE("single avalanche clears the residual by well over 10x") {
  const auto& chain = spec_chain();
  const double T = 1.0 / chain.gate_freq_hz;
  const double t_inj = 1000 * T + 0.25 * T;
  const auto trace =
      simulate_gate_waveform(chain, std::vector<double>{t_inj}, 2e-6, 0.0, 1);
  const double peak = *std::max_element(trace.samples.begin(), trace.samples.end());
  CHECK(peak / predicted_feedthrough_rms(chain) > 10.0);

  const auto events = discriminate(trace, 0.5 * peak, chain);
  REQUIRE(events.size() == 1);
  CHECK(std::fabs(events[0] - t_inj) <= T);
}

TEST_CASE("threshold above the trace maximum yields no events") {
  const auto& chain = spec_chain();
  const double T = 1.0 / chain.gate_freq_hz;
  const auto trace = simulate_gate_waveform(
      chain, std::vector<double>{500 * T + 0.25 * T}, 1e-6, 0.0, 2);
  const double peak = *std::max_element(trace.samples.begin(), trace.samples.end());
  CHECK(discriminate(trace, 2.0 * peak, chain).empty());
}

TEST_CASE("two avalanches ten gate periods apart give two events") {
  const auto& chain = spec_chain();
  const double T = 1.0 / chain.gate_freq_hz;
  const double t0 = 800 * T + 0.25 * T;
  const auto trace = simulate_gate_waveform(
      chain, std::vector<double>{t0, t0 + 10 * T}, 2e-6, 0.0, 3);
  const double peak = *std::max_element(trace.samples.begin(), trace.samples.end());
  const auto events = discriminate(trace, 0.5 * peak, chain);
  CHECK(events.size() == 2);
}

TEST_CASE("noiseless discrimination recovers every injected avalanche") {
  const auto& chain = spec_chain();
  const double T = 1.0 / chain.gate_freq_hz;
  std::vector<double> times;
  for (int k = 0; k < 20; ++k) times.push_back((100 + 40 * k) * T + 0.25 * T);
  const auto trace = simulate_gate_waveform(chain, times, 2e-6, 0.0, 4);
  const double peak = *std::max_element(trace.samples.begin(), trace.samples.end());
  const auto events = discriminate(trace, 0.5 * peak, chain);
  REQUIRE(events.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::fabs(events[i] - times[i]) <= T);
  }
}

TEST_CASE("identical seed and inputs give a bit-identical trace") {
  const auto& chain = spec_chain();
  const double T = 1.0 / chain.gate_freq_hz;
  const std::vector<double> times{300 * T + 0.25 * T};
  const auto a = simulate_gate_waveform(chain, times, 1e-6, 1e-3, 42);
  const auto b = simulate_gate_waveform(chain, times, 1e-6, 1e-3, 42);
  CHECK(a.samples == b.samples);
  const auto c = simulate_gate_waveform(chain, times, 1e-6, 1e-3, 43);
  CHECK(a.samples != c.samples);
}

TEST_CASE("precondition violations are rejected") {
  const auto& chain = spec_chain();
  CHECK_THROWS_AS(simulate_gate_waveform(chain, {}, 20e-6, 0.0, 1),
                  std::invalid_argument);
  std::vector<double> outside{3e-6};
  CHECK_THROWS_AS(simulate_gate_waveform(chain, outside, 2e-6, 0.0, 1),
                  std::invalid_argument);
  const auto trace = simulate_gate_waveform(chain, {}, 1e-6, 0.0, 1);
  CHECK_THROWS_AS(discriminate(trace, 0.0, chain), std::invalid_argument);
}
