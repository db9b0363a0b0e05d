#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swgsim/chain.hpp"

namespace swg {

struct WaveformTrace {
  double sample_rate_hz = 0.0;
  double t0_s = 0.0;
  std::vector<double> samples;

  double duration_s() const {
    return samples.empty() ? 0.0 : static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Short-trace inspection tool: gate feed-through plus injected avalanche
// pulses plus white noise, pushed through the full chain by multiplying the
// trace's discrete spectrum with the chain response. The trace length is
// snapped to a whole number of gate periods so the feed-through tones sit
// exactly on DFT bins; filtering is circular, which only matters for pulse
// tails within ~1 ns of the trace end.
//
// Preconditions: duration_s <= 10 us, avalanche times within [0, duration].
// Deterministic for a fixed seed.
WaveformTrace simulate_gate_waveform(const ChainConfig& chain,
                                     std::span<const double> avalanche_times_s,
                                     double duration_s, double noise_rms_v,
                                     std::uint64_t seed);

// Rising-edge threshold crossings, reported on the injection timeline (the
// chain's nominal latency is backed out, the phase-shifter adjustment of the
// real coincidence stage). Keeps at most one event per gate period and drops
// crossings whose corrected time falls outside the active half-cycle.
std::vector<double> discriminate(const WaveformTrace& trace, double threshold_v,
                                 const ChainConfig& chain);

// Residual feed-through RMS predicted from the S21 values at the gate
// fundamental and second harmonic; the analytic oracle for the simulated
// no-avalanche, no-noise trace.
double predicted_feedthrough_rms(const ChainConfig& chain);

}  // namespace swg
