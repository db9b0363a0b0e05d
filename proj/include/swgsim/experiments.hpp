#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "swgsim/detector.hpp"

namespace swg {

struct DelayScanConfig {
  int n_points = 81;
  std::uint64_t gates_per_point = 250'000'000;
  EngineMode mode = EngineMode::fast;
};

struct DelayScanResult {
  std::vector<double> delays_s;
  std::vector<double> count_rates_cps;
  double fwhm_s = 0.0;
  double peak_delay_s = 0.0;
  double baseline_cps = 0.0;
};

// Scans the pulse-to-gate delay across one full gate period and extracts the
// effective gating width as the FWHM of the baseline-subtracted count curve
// (linear interpolation at half maximum). The scan grid is offset by half a
// period so the peak lands mid-scan.
DelayScanResult delay_scan(const DetectorParams& params, const GateClock& clock,
                           const PhotonSource& source, const HoldOffPolicy& holdoff,
                           const DelayScanConfig& cfg, std::uint64_t seed);

struct DcrPdePoint {
  double pde = 0.0;
  double dcr_cps = 0.0;
  double dcr_per_gate = 0.0;
  double duty_cycle = 0.0;
  double dcr_normalized_cps = 0.0;
};

// Dark-count rate versus PDE with the source off; duty-cycle-normalized
// values use dt(pde) from the gate-width model.
std::vector<DcrPdePoint> dcr_pde_curve(const DetectorParams& params,
                                       const GateClock& clock,
                                       std::span<const double> pde_grid,
                                       std::uint64_t gates_per_point,
                                       std::uint64_t seed,
                                       EngineMode mode = EngineMode::fast);

struct Histogram {
  double bin_width_s = 0.0;
  double origin_s = 0.0;
  std::vector<std::uint64_t> counts;
};

struct AfterpulseConfig {
  double acquisition_s = 100.0;
  EngineMode mode = EngineMode::fast;
  double bin_width_s = 1.6e-9;
  double window_s = 16e-6;
  int peak_halfwidth_bins = 3;   // bins within +-3 of a pulse time are photon peaks
  double tail_fraction = 0.10;   // baseline from the last 10% of the window
  double min_photon_counts = 1000.0;
};

struct AfterpulseResult {
  double p_ap = 0.0;
  double p_ap_per_gate = 0.0;
  double window_s = 0.0;
  double photon_counts = 0.0;      // baseline-subtracted peak sum
  double afterpulse_counts = 0.0;  // clamped baseline-subtracted non-peak sum
  double dcr_baseline_per_bin = 0.0;
  std::uint64_t recorded_events = 0;
};

// Histograms recorded events folded over window_s relative to the pulse
// train, subtracts the uniform baseline estimated from the window tail, and
// sums photon and afterpulse counts.
std::pair<Histogram, AfterpulseResult> afterpulse_measurement(
    const DetectorParams& params, const GateClock& clock, const PhotonSource& source,
    const HoldOffPolicy& holdoff, const AfterpulseConfig& cfg, std::uint64_t seed);

struct PapPoint {
  double temperature_k = 0.0;
  double pde = 0.0;
  double p_ap = 0.0;
  double p_ap_per_gate = 0.0;
};

std::vector<PapPoint> pap_vs_pde_curve(std::span<const DetectorParams> presets,
                                       const GateClock& clock, const PhotonSource& source,
                                       const HoldOffPolicy& holdoff,
                                       std::span<const double> pde_grid,
                                       const AfterpulseConfig& cfg, std::uint64_t seed);

struct StabilityConfig {
  int total_minutes = 60;
  EngineMode mode = EngineMode::fast;
  double integration_s = 10.0;
  int rescan_period_min = 10;
  bool rescan_enabled = true;
  double drift_s_per_hour = 0.0;  // slow phase drift; 0 disables
  DelayScanConfig scan{33, 100'000'000};
};

struct StabilitySeries {
  std::vector<int> t_min;
  std::vector<std::uint64_t> counts_10s;
  std::vector<int> rescan_marks;
  double rsd_excluding_rescans = 0.0;
};

// Minute-by-minute acquisition with a periodic delay re-scan, mirroring the
// long-term stability protocol at simulation speed.
StabilitySeries stability_run(const DetectorParams& params, const GateClock& clock,
                              const PhotonSource& source, const HoldOffPolicy& holdoff,
                              const StabilityConfig& cfg, std::uint64_t seed);

// Least-squares fit of (dcr0, k_pde) in log space; exact through two points.
DcrModel calibrate_dcr(std::span<const std::pair<double, double>> pde_dcr_targets);

// Linear fit of the gate-width model through (pde, dt) pairs.
GateWidthModel fit_gate_width(std::span<const std::pair<double, double>> pde_width_pairs);

struct TrapCalibrationTarget {
  double pde = 0.0;
  double holdoff_s = 100e-9;
  double p_ap = 0.0;
};

struct TrapCalibrationConfig {
  std::vector<double> tau_grid_s{2e-7, 4e-7, 8e-7, 1.6e-6};
  AfterpulseConfig measure{20.0, EngineMode::fast, 1.6e-9, 16e-6, 3, 0.10, 1000.0};
  double tolerance_rel = 0.15;
  double n_fill = 20.0;
  int bisect_iters = 18;
};

// Grid-search over detrapping times, then a monotone 1-D solve of the
// n_fill * p_trigger product against simulated afterpulse measurements.
TrapModel calibrate_traps(const DetectorParams& base, const GateClock& clock,
                          const PhotonSource& source,
                          std::span<const TrapCalibrationTarget> targets,
                          const TrapCalibrationConfig& cfg, std::uint64_t seed);

}  // namespace swg
