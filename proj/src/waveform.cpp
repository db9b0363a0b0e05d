#include "swgsim/waveform.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "swgsim/rng.hpp"

namespace swg {

namespace {

constexpr int kSamplesPerGate = 16;  // 20 GS/s at 1.25 GHz, >= 10x gate rate
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// In-place real FFT filter: X(f) *= H(f) on the r2c spectrum.
void apply_chain_spectrum(std::vector<double>& x, double sample_rate,
                          const ChainConfig& chain) {
  const std::size_t n = x.size();
  const std::size_t nbins = n / 2 + 1;
  std::vector<std::complex<double>> spec(nbins);

  fftw_plan fwd, inv;
  {
    // FFTW planning is not thread-safe; execution is.
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), x.data(),
                               reinterpret_cast<fftw_complex*>(spec.data()),
                               FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n),
                               reinterpret_cast<fftw_complex*>(spec.data()),
                               x.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (std::size_t m = 0; m < nbins; ++m) {
    const double f = static_cast<double>(m) * sample_rate / static_cast<double>(n);
    spec[m] *= chain_response(chain, f);
  }
  fftw_execute(inv);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : x) v *= scale;
}

double avalanche_shape_peak(const AvalancheShape& a) {
  // Peak of (1 - exp(-t/rise)) * exp(-t/decay) at t* = rise*ln(1 + decay/rise).
  const double t = a.rise_s * std::log1p(a.decay_s / a.rise_s);
  return (1.0 - std::exp(-t / a.rise_s)) * std::exp(-t / a.decay_s);
}

// Feed-through tone amplitudes at f_g and 2 f_g (volts at the chain input).
// i(t) = C(V) dV/dt with V = (Vpp/2) sin(w t) gives
//   i = c0 (Vpp/2) w [cos(wt) + (beta/4) sin(2wt)].
void feedthrough_amplitudes(const ChainConfig& chain, double& a1, double& a2) {
  const double w = kTwoPi * chain.gate_freq_hz;
  a1 = chain.feedthrough.c0_farad * chain.feedthrough.input_impedance_ohm *
       0.5 * chain.gate_amplitude_vpp * w;
  a2 = a1 * chain.feedthrough.beta / 4.0;
}

}  // namespace

double predicted_feedthrough_rms(const ChainConfig& chain) {
  double a1, a2;
  feedthrough_amplitudes(chain, a1, a2);
  const double g1 = std::abs(chain_response(chain, chain.gate_freq_hz));
  const double g2 = std::abs(chain_response(chain, 2.0 * chain.gate_freq_hz));
  const double r1 = a1 * g1;
  const double r2 = a2 * g2;
  return std::sqrt(0.5 * (r1 * r1 + r2 * r2));
}

WaveformTrace simulate_gate_waveform(const ChainConfig& chain,
                                     std::span<const double> avalanche_times_s,
                                     double duration_s, double noise_rms_v,
                                     std::uint64_t seed) {
  chain.validate();
  if (!(duration_s > 0.0) || duration_s > 10e-6) {
    throw std::invalid_argument(
        "simulate_gate_waveform: duration must be in (0, 10 us]");
  }
  for (double t : avalanche_times_s) {
    if (t < 0.0 || t > duration_s) {
      throw std::invalid_argument(
          "simulate_gate_waveform: avalanche time outside [0, duration]");
    }
  }

  const double fg = chain.gate_freq_hz;
  const std::uint64_t n_gates =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(duration_s * fg - 1e-9)));
  const std::size_t n = static_cast<std::size_t>(n_gates) * kSamplesPerGate;
  const double fs = fg * kSamplesPerGate;
  const double dt = 1.0 / fs;

  WaveformTrace trace;
  trace.sample_rate_hz = fs;
  trace.t0_s = 0.0;
  trace.samples.assign(n, 0.0);

  double a1, a2;
  feedthrough_amplitudes(chain, a1, a2);
  const double w = kTwoPi * fg;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * dt;
    trace.samples[i] = a1 * std::cos(w * t) + a2 * std::sin(2.0 * w * t);
  }

  // Avalanche current pulses, active only while the gate is open (sin > 0).
  const double amp = chain.avalanche.amplitude_v / avalanche_shape_peak(chain.avalanche);
  for (double t0 : avalanche_times_s) {
    const std::size_t i0 = static_cast<std::size_t>(t0 * fs);
    const std::size_t tail =
        static_cast<std::size_t>((6.0 * chain.avalanche.decay_s) * fs) + 2;
    for (std::size_t i = i0; i < std::min(n, i0 + tail); ++i) {
      const double t = i * dt;
      const double tau = t - t0;
      if (tau < 0.0) continue;
      if (std::sin(w * t) <= 0.0) continue;  // outside the active half-cycle
      trace.samples[i] += amp * (1.0 - std::exp(-tau / chain.avalanche.rise_s)) *
                          std::exp(-tau / chain.avalanche.decay_s);
    }
  }

  if (noise_rms_v > 0.0) {
    Rng rng(seed);
    for (double& v : trace.samples) v += noise_rms_v * rng.normal();
  }

  apply_chain_spectrum(trace.samples, fs, chain);
  return trace;
}

std::vector<double> discriminate(const WaveformTrace& trace, double threshold_v,
                                 const ChainConfig& chain) {
  if (!(threshold_v > 0.0)) {
    throw std::invalid_argument("discriminate: threshold must be > 0");
  }
  const double fg = chain.gate_freq_hz;
  const double period = 1.0 / fg;
  const double latency = chain_group_delay(chain, 0.25 * fg);
  const double dt = 1.0 / trace.sample_rate_hz;

  std::vector<double> events;
  std::int64_t last_gate = -1;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    if (!(trace.samples[i - 1] < threshold_v && trace.samples[i] >= threshold_v)) {
      continue;
    }
    const double frac = (threshold_v - trace.samples[i - 1]) /
                        (trace.samples[i] - trace.samples[i - 1]);
    const double t_cross = trace.t0_s + (static_cast<double>(i - 1) + frac) * dt;
    const double t = t_cross - latency;
    if (t < 0.0) continue;
    const auto gate = static_cast<std::int64_t>(t * fg);
    if (gate == last_gate) continue;  // one event per gate period
    const double phase = t - static_cast<double>(gate) * period;
    if (phase > 0.5 * period) continue;  // outside the gate-synced window
    events.push_back(t);
    last_gate = gate;
  }
  return events;
}

}  // namespace swg
