#include "swgsim/chain.hpp"

#include <cmath>
#include <stdexcept>

namespace swg {

namespace {

std::complex<double> coupling_response(const ChainConfig& chain, double freq_hz) {
  if (chain.coupling_corner_hz <= 0.0) return {1.0, 0.0};
  const std::complex<double> jr(0.0, freq_hz / chain.coupling_corner_hz);
  return jr / (1.0 + jr);
}

}  // namespace

void ChainConfig::validate() const {
  if (!(gate_freq_hz > 0.0)) {
    throw std::invalid_argument("ChainConfig.gate_freq_hz must be > 0");
  }
  if (!std::isfinite(amp_gain_db)) {
    throw std::invalid_argument("ChainConfig.amp_gain_db must be finite");
  }
  if (lpf.sections.empty()) {
    throw std::invalid_argument("ChainConfig.lpf has no sections");
  }
}

ChainConfig default_chain() {
  ChainConfig c;
  c.lpf = synth_lowpass(FilterSpec{});
  return c;
}

double chain_mag_db(const ChainConfig& chain, double freq_hz) {
  double db = 2.0 * chain.lpf.mag_db(freq_hz) + chain.amp_gain_db;
  if (chain.coupling_corner_hz > 0.0) {
    const double m = std::abs(coupling_response(chain, freq_hz));
    db += 20.0 * std::log10(std::max(m, 1e-300));
  }
  return db;
}

std::complex<double> chain_response(const ChainConfig& chain, double freq_hz) {
  const std::complex<double> lpf = chain.lpf.response(freq_hz);
  const double amp = std::pow(10.0, chain.amp_gain_db / 20.0);
  return lpf * lpf * amp * coupling_response(chain, freq_hz);
}

double chain_group_delay(const ChainConfig& chain, double freq_hz) {
  const double df = std::max(freq_hz * 1e-5, 1.0);
  const auto h1 = chain_response(chain, freq_hz - df);
  const auto h2 = chain_response(chain, freq_hz + df);
  const double dphi = std::arg(h2 / h1);  // unwrapped over the small step
  return -dphi / (2.0 * std::acos(-1.0) * 2.0 * df);
}

S21Curve frequency_response(const ChainConfig& chain, std::span<const double> freqs_hz) {
  chain.validate();
  double prev = 0.0;
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    if (!(freqs_hz[i] > 0.0)) {
      throw std::invalid_argument("frequency_response: freqs must be positive");
    }
    if (i > 0 && !(freqs_hz[i] > prev)) {
      throw std::invalid_argument("frequency_response: freqs must be ascending");
    }
    prev = freqs_hz[i];
  }
  S21Curve out;
  out.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
  out.mag_db.reserve(freqs_hz.size());
  for (double f : freqs_hz) out.mag_db.push_back(chain_mag_db(chain, f));
  return out;
}

}  // namespace swg
