#pragma once

#include <complex>
#include <span>
#include <vector>

#include "swgsim/filter.hpp"

namespace swg {

// Capacitive feed-through of the gate drive into the readout input.
// C(V) = c0 * (1 + beta * V / Vpp); the weak voltage dependence is what
// puts a second harmonic on top of the fundamental.
struct FeedthroughModel {
  double c0_farad = 1e-12;
  double beta = 0.1;
  double input_impedance_ohm = 50.0;
};

// Single-sided exponential avalanche pulse at the readout input.
struct AvalancheShape {
  double amplitude_v = 1.5e-3;
  double rise_s = 30e-12;
  double decay_s = 200e-12;
};

struct ChainConfig {
  FilterDesign lpf;  // applied twice in cascade
  double amp_gain_db = 40.0;
  double gate_freq_hz = 1.25e9;
  double gate_amplitude_vpp = 11.0;
  double bias_voltage_v = 70.0;
  double coupling_corner_hz = 1e6;  // AC-coupling high-pass corner; <= 0 disables
  FeedthroughModel feedthrough;
  AvalancheShape avalanche;

  void validate() const;
};

struct S21Curve {
  std::vector<double> freqs_hz;
  std::vector<double> mag_db;
};

// Spec-compliant default chain: synthesized elliptic LPF pair plus 40 dB amp.
ChainConfig default_chain();

// Cascade magnitude at one frequency, exact dB additivity:
//   2*|LPF|_dB + amp_gain_db + |coupling|_dB.
double chain_mag_db(const ChainConfig& chain, double freq_hz);

// Complex response (magnitude and phase) of the same cascade; used for
// time-domain filtering of traces.
std::complex<double> chain_response(const ChainConfig& chain, double freq_hz);

// Group delay -d(phase)/d(omega) by central difference.
double chain_group_delay(const ChainConfig& chain, double freq_hz);

S21Curve frequency_response(const ChainConfig& chain, std::span<const double> freqs_hz);

}  // namespace swg
