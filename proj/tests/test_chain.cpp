#include <doctest.h>

#include <cmath>
#include <vector>

#include "swgsim/chain.hpp"

using namespace swg;

namespace {

// Unity pass-through "filter": H(s) = 1.
FilterDesign unity_filter() {
  FilterDesign d;
  d.order = 0;
  d.sections.push_back(BiquadSection{});
  d.dc_gain_db = 0.0;
  return d;
}

}  // namespace

TEST_CASE("all-pass chain is 0 dB at every frequency") {
  ChainConfig c;
  c.lpf = unity_filter();
  c.amp_gain_db = 0.0;
  c.coupling_corner_hz = 0.0;
  std::vector<double> freqs;
  for (int i = 1; i <= 100; ++i) freqs.push_back(i * 3e7);
  const auto s21 = frequency_response(c, freqs);
  for (double m : s21.mag_db) CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("default chain hits the published gain and rejection") {
  const auto chain = default_chain();
  CHECK(chain_mag_db(chain, 100e6) > 39.0);
  CHECK(chain_mag_db(chain, 100e6) < 41.0);
  CHECK(chain_mag_db(chain, 1.25e9) <= -80.0);
}

TEST_CASE("cascade dB additivity is exact") {
  const auto chain = default_chain();
  ChainConfig bare = chain;
  bare.amp_gain_db = 0.0;
  bare.coupling_corner_hz = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double f = i * 1.25e6;
    const double single = bare.lpf.mag_db(f);
    CHECK(std::fabs(chain_mag_db(bare, f) - 2.0 * single) < 1e-9);
  }
}

TEST_CASE("s21 curve mirrors the requested grid") {
  const auto chain = default_chain();
  std::vector<double> freqs{1e6, 1e8, 1e9, 1.25e9, 2e9};
  const auto s21 = frequency_response(chain, freqs);
  REQUIRE(s21.freqs_hz.size() == s21.mag_db.size());
  REQUIRE(s21.freqs_hz.size() == freqs.size());
  for (std::size_t i = 1; i < s21.freqs_hz.size(); ++i) {
    CHECK(s21.freqs_hz[i] > s21.freqs_hz[i - 1]);
  }
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    CHECK(s21.mag_db[i] == chain_mag_db(chain, freqs[i]));
  }
}

TEST_CASE("frequency grid must be ascending and positive") {
  const auto chain = default_chain();
  std::vector<double> bad1{1e9, 1e8};
  CHECK_THROWS_AS(frequency_response(chain, bad1), std::invalid_argument);
  std::vector<double> bad2{0.0, 1e8};
  CHECK_THROWS_AS(frequency_response(chain, bad2), std::invalid_argument);
}

TEST_CASE("group delay is positive through the passband") {
  const auto chain = default_chain();
  for (double f : {5e7, 1e8, 3e8, 6e8}) {
    CHECK(chain_group_delay(chain, f) > 0.0);
  }
}
