#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swgsim/rng.hpp"

namespace swg {

enum class Cause : std::uint8_t { photon, dark, afterpulse };

std::string to_string(Cause c);

// DCR(eta) = dcr0 * exp(k_pde * eta), cps.
struct DcrModel {
  double dcr0_cps = 0.0;
  double k_pde = 0.0;
  double at(double pde) const { return dcr0_cps * std::exp(k_pde * pde); }
};

// Effective gating width, dt(eta) = a * eta + b, seconds.
struct GateWidthModel {
  double a_s_per_pde = 0.0;
  double b_s = 0.0;
  double at(double pde) const { return a_s_per_pde * pde + b_s; }
};

// Single-exponential detrapping afterpulse model. An avalanche fills n_fill
// traps on average; releases decay with tau_detrap_s; a carrier released
// inside an active gate window triggers with probability
// p_trigger * eta^kTriggerPdeExponent (see detector.cpp for the exponent).
struct TrapModel {
  double n_fill = 0.0;
  double tau_detrap_s = 1e-6;
  double p_trigger = 0.0;
};

struct DetectorParams {
  double temperature_k = 223.0;
  double pde = 0.10;
  DcrModel dcr;
  GateWidthModel gate_width;
  TrapModel traps;

  void validate(double gate_freq_hz) const;
};

struct GateClock {
  double gate_freq_hz = 1.25e9;
  std::uint64_t gate_index = 0;
  double phase_offset_s = 0.0;  // delay between source pulses and gates

  double period_s() const { return 1.0 / gate_freq_hz; }
  void validate() const;
};

struct PhotonSource {
  double rep_rate_hz = 625e3;
  double mu = 1.0;          // mean photon number per pulse
  double pulse_sigma_s = 0.0;

  void validate() const;
};

// Count-off hold-off: the detector keeps gating; avalanches during the
// hold-off window occur and refill traps but are not recorded.
struct HoldOffPolicy {
  double holdoff_s = 100e-9;

  void validate() const;
};

struct EventRecord {
  std::uint64_t gate_index;
  double t_s;
  Cause cause;      // ground-truth simulator label
  bool recorded;    // false when suppressed by hold-off
};

struct EngineState {
  double trap_population = 0.0;
  std::uint64_t holdoff_until_gate = 0;
  Rng rng{0};
};

struct GateProbabilities {
  double photon = 0.0;
  double dark = 0.0;
  double afterpulse = 0.0;
};

struct CauseCounts {
  std::uint64_t photon = 0;
  std::uint64_t dark = 0;
  std::uint64_t afterpulse = 0;
  std::uint64_t total() const { return photon + dark + afterpulse; }
};

struct RunCounts {
  std::uint64_t n_gates = 0;
  CauseCounts recorded;
  CauseCounts unrecorded;
};

struct RunResult {
  RunCounts counts;
  std::vector<EventRecord> events;  // populated only when requested
};

enum class EngineMode {
  fast,       // geometric skip-sampling with exact thinning
  exact_loop  // naive per-gate loop, one uniform per gate
};

struct RunOptions {
  EngineMode mode = EngineMode::fast;
  bool record_events = false;
  std::size_t event_cap = 50'000'000;
  bool integer_traps = false;  // exact Poisson-fill / binomial-release traps
  // Streaming sink for recorded and unrecorded events; called in gate order.
  std::function<void(const EventRecord&)> event_sink;
};

// Per-gate avalanche probabilities given the state entering `gate_index`.
GateProbabilities per_gate_probabilities(const DetectorParams& params,
                                         const GateClock& clock,
                                         const PhotonSource& source,
                                         const EngineState& state,
                                         std::uint64_t gate_index);

// One gate of trap dynamics: exponential decay, plus n_fill on avalanche.
EngineState trap_update(EngineState state, std::uint64_t gate_index,
                        bool avalanche_occurred, const DetectorParams& params,
                        const GateClock& clock);

GateClock set_delay(GateClock clock, double phase_offset_s);

// Simulates exactly n_gates gates starting at clock.gate_index.
// Deterministic for fixed (inputs, seed); the two engine modes are
// distribution-identical.
RunResult run_sequence(const DetectorParams& params, const GateClock& clock,
                       const PhotonSource& source, const HoldOffPolicy& holdoff,
                       std::uint64_t n_gates, std::uint64_t seed,
                       const RunOptions& options = {});

void write_events_ndjson(const std::vector<EventRecord>& events,
                         const std::string& path);

}  // namespace swg
