#include "swgsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "swgsim/errors.hpp"
#include "swgsim/stats.hpp"

namespace swg {

namespace {

double wrap_phase(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  return r;
}

double run_rate_cps(const DetectorParams& params, const GateClock& clock,
                    const PhotonSource& source, const HoldOffPolicy& holdoff,
                    std::uint64_t n_gates, std::uint64_t seed, EngineMode mode) {
  RunOptions opts;
  opts.mode = mode;
  const auto res = run_sequence(params, clock, source, holdoff, n_gates, seed, opts);
  const double duration = static_cast<double>(n_gates) / clock.gate_freq_hz;
  return static_cast<double>(res.counts.recorded.total()) / duration;
}

// Index of the scan peak refined by a parabolic fit through the three
// points around the argmax (circular grid).
double refined_peak_delay(const std::vector<double>& delays,
                          const std::vector<double>& rates, double period) {
  const std::size_t n = rates.size();
  const std::size_t j =
      static_cast<std::size_t>(std::max_element(rates.begin(), rates.end()) - rates.begin());
  const double rm = rates[(j + n - 1) % n];
  const double r0 = rates[j];
  const double rp = rates[(j + 1) % n];
  const double denom = rm - 2.0 * r0 + rp;
  double offset = 0.0;
  if (denom < 0.0) offset = 0.5 * (rm - rp) / denom;
  offset = std::clamp(offset, -0.5, 0.5);
  const double step = delays.size() > 1 ? delays[1] - delays[0] : period;
  return wrap_phase(delays[j] + offset * step, period);
}

}  // namespace

DelayScanResult delay_scan(const DetectorParams& params, const GateClock& clock,
                           const PhotonSource& source, const HoldOffPolicy& holdoff,
                           const DelayScanConfig& cfg, std::uint64_t seed) {
  if (cfg.n_points < 16) {
    throw std::invalid_argument("delay_scan: n_points must be >= 16");
  }
  if (cfg.gates_per_point < 1) {
    throw std::invalid_argument("delay_scan: gates_per_point must be >= 1");
  }
  const double period = clock.period_s();
  const double step = period / cfg.n_points;

  DelayScanResult out;
  out.delays_s.reserve(cfg.n_points);
  out.count_rates_cps.reserve(cfg.n_points);
  for (int i = 0; i < cfg.n_points; ++i) {
    const double d = i * step;
    // Offset by half a period so the response peak sits mid-scan.
    const GateClock shifted =
        set_delay(clock, wrap_phase(d + 0.5 * period, period));
    out.delays_s.push_back(d);
    out.count_rates_cps.push_back(run_rate_cps(params, shifted, source, holdoff,
                                               cfg.gates_per_point,
                                               derive_seed(seed, i), cfg.mode));
  }

  // Baseline from the lowest quartile of points (delays far from the peak).
  std::vector<double> sorted = out.count_rates_cps;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t nq = std::max<std::size_t>(1, sorted.size() / 4);
  out.baseline_cps =
      std::accumulate(sorted.begin(), sorted.begin() + nq, 0.0) / nq;

  const double duration = static_cast<double>(cfg.gates_per_point) / clock.gate_freq_hz;
  const auto peak_it =
      std::max_element(out.count_rates_cps.begin(), out.count_rates_cps.end());
  const double peak = *peak_it;
  const double excess_counts = (peak - out.baseline_cps) * duration;
  const double floor_counts =
      5.0 * std::sqrt(std::max(out.baseline_cps * duration, 1.0));
  if (excess_counts < std::max(25.0, floor_counts)) {
    throw no_peak_error(
        "delay_scan: no peak above the noise floor (mu*eta too small for "
        "gates_per_point)");
  }

  const std::size_t jp =
      static_cast<std::size_t>(peak_it - out.count_rates_cps.begin());
  const double half = out.baseline_cps + 0.5 * (peak - out.baseline_cps);
  const auto& r = out.count_rates_cps;

  double left = out.delays_s[jp];
  for (std::size_t j = jp; j-- > 0;) {
    if (r[j] <= half) {
      left = out.delays_s[j] +
             step * (half - r[j]) / (r[j + 1] - r[j]);
      break;
    }
    if (j == 0) {
      throw no_peak_error("delay_scan: half-maximum not bracketed on the left");
    }
  }
  double right = out.delays_s[jp];
  for (std::size_t j = jp + 1; j < r.size(); ++j) {
    if (r[j] <= half) {
      right = out.delays_s[j - 1] +
              step * (r[j - 1] - half) / (r[j - 1] - r[j]);
      break;
    }
    if (j + 1 == r.size()) {
      throw no_peak_error("delay_scan: half-maximum not bracketed on the right");
    }
  }

  out.fwhm_s = right - left;
  out.peak_delay_s = refined_peak_delay(out.delays_s, out.count_rates_cps, period);
  return out;
}

std::vector<DcrPdePoint> dcr_pde_curve(const DetectorParams& params,
                                       const GateClock& clock,
                                       std::span<const double> pde_grid,
                                       std::uint64_t gates_per_point,
                                       std::uint64_t seed, EngineMode mode) {
  PhotonSource off;
  off.mu = 0.0;
  // DCR is characterized with a long hold-off so afterpulses of dark counts
  // do not contaminate the rate; the count-off loss is rate * holdoff,
  // sub-percent at every measured operating point.
  HoldOffPolicy holdoff{10e-6};

  std::vector<DcrPdePoint> out;
  out.reserve(pde_grid.size());
  const double duration = static_cast<double>(gates_per_point) / clock.gate_freq_hz;
  for (std::size_t i = 0; i < pde_grid.size(); ++i) {
    DetectorParams p = params;
    p.pde = pde_grid[i];
    RunOptions opts;
    opts.mode = mode;
    const auto res =
        run_sequence(p, clock, off, holdoff, gates_per_point, derive_seed(seed, i), opts);
    DcrPdePoint pt;
    pt.pde = p.pde;
    pt.dcr_cps = static_cast<double>(res.counts.recorded.total()) / duration;
    pt.dcr_per_gate = pt.dcr_cps / clock.gate_freq_hz;
    pt.duty_cycle = p.gate_width.at(p.pde) * clock.gate_freq_hz;
    pt.dcr_normalized_cps = pt.dcr_cps / pt.duty_cycle;
    out.push_back(pt);
  }
  return out;
}

std::pair<Histogram, AfterpulseResult> afterpulse_measurement(
    const DetectorParams& params, const GateClock& clock, const PhotonSource& source,
    const HoldOffPolicy& holdoff, const AfterpulseConfig& cfg, std::uint64_t seed) {
  if (!(cfg.window_s > 0.0) || !(cfg.bin_width_s > 0.0)) {
    throw std::invalid_argument("afterpulse_measurement: window and bin width must be > 0");
  }
  const auto nbins = static_cast<std::size_t>(
      std::llround(cfg.window_s / cfg.bin_width_s));
  if (nbins < 8) {
    throw std::invalid_argument("afterpulse_measurement: window too short for binning");
  }
  const double fg = clock.gate_freq_hz;
  const auto window_gates = static_cast<std::uint64_t>(std::llround(cfg.window_s * fg));
  const auto n_gates = static_cast<std::uint64_t>(std::llround(cfg.acquisition_s * fg));
  const double gates_per_bin = cfg.bin_width_s * fg;

  Histogram hist;
  hist.bin_width_s = cfg.bin_width_s;
  hist.origin_s = 0.0;
  hist.counts.assign(nbins, 0);
  std::uint64_t recorded = 0;

  RunOptions opts;
  opts.mode = cfg.mode;
  opts.event_sink = [&](const EventRecord& e) {
    if (!e.recorded) return;
    ++recorded;
    const std::uint64_t fold = e.gate_index % window_gates;
    auto b = static_cast<std::size_t>(static_cast<double>(fold) / gates_per_bin);
    if (b >= nbins) b = nbins - 1;
    ++hist.counts[b];
  };
  run_sequence(params, clock, source, holdoff, n_gates, seed, opts);

  // Photon-peak bins: within +-peak_halfwidth of each pulse time, circular.
  std::vector<char> is_peak(nbins, 0);
  const double stride = fg / source.rep_rate_hz;
  for (std::uint64_t n = 0;; ++n) {
    const auto pg = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(n) * stride));
    if (pg >= window_gates) break;
    const auto center = static_cast<std::int64_t>(
        static_cast<double>(pg) / gates_per_bin);
    for (int d = -cfg.peak_halfwidth_bins; d <= cfg.peak_halfwidth_bins; ++d) {
      const auto b = static_cast<std::size_t>(
          ((center + d) % static_cast<std::int64_t>(nbins) + nbins) % nbins);
      is_peak[b] = 1;
    }
  }

  const auto tail_start = static_cast<std::size_t>(
      std::ceil((1.0 - cfg.tail_fraction) * static_cast<double>(nbins)));
  double tail_sum = 0.0;
  std::size_t tail_n = 0;
  for (std::size_t b = tail_start; b < nbins; ++b) {
    if (is_peak[b]) continue;
    tail_sum += static_cast<double>(hist.counts[b]);
    ++tail_n;
  }
  if (tail_n == 0) {
    for (std::size_t b = 0; b < nbins; ++b) {
      if (is_peak[b]) continue;
      tail_sum += static_cast<double>(hist.counts[b]);
      ++tail_n;
    }
  }
  const double baseline = tail_n > 0 ? tail_sum / static_cast<double>(tail_n) : 0.0;

  double ap = 0.0, ph = 0.0;
  for (std::size_t b = 0; b < nbins; ++b) {
    const double c = static_cast<double>(hist.counts[b]);
    if (is_peak[b]) {
      ph += c - baseline;
    } else {
      ap += std::max(c - baseline, 0.0);
    }
  }
  if (ph < cfg.min_photon_counts) {
    throw insufficient_statistics_error(
        "afterpulse_measurement: photon counts " + std::to_string(ph) +
        " below " + std::to_string(cfg.min_photon_counts));
  }

  const auto ho_gates = static_cast<std::uint64_t>(std::llround(holdoff.holdoff_s * fg));
  const double denom_gates = static_cast<double>(
      window_gates > ho_gates ? window_gates - ho_gates : 1);

  AfterpulseResult res;
  res.p_ap = ap / ph;
  res.p_ap_per_gate = res.p_ap / denom_gates;
  res.window_s = cfg.window_s;
  res.photon_counts = ph;
  res.afterpulse_counts = ap;
  res.dcr_baseline_per_bin = baseline;
  res.recorded_events = recorded;
  return {std::move(hist), res};
}

std::vector<PapPoint> pap_vs_pde_curve(std::span<const DetectorParams> presets,
                                       const GateClock& clock, const PhotonSource& source,
                                       const HoldOffPolicy& holdoff,
                                       std::span<const double> pde_grid,
                                       const AfterpulseConfig& cfg, std::uint64_t seed) {
  std::vector<PapPoint> out;
  out.reserve(presets.size() * pde_grid.size());
  std::uint64_t idx = 0;
  for (const auto& preset : presets) {
    for (double pde : pde_grid) {
      DetectorParams p = preset;
      p.pde = pde;
      const auto [hist, res] =
          afterpulse_measurement(p, clock, source, holdoff, cfg, derive_seed(seed, idx));
      out.push_back({p.temperature_k, pde, res.p_ap, res.p_ap_per_gate});
      ++idx;
    }
  }
  return out;
}

StabilitySeries stability_run(const DetectorParams& params, const GateClock& clock,
                              const PhotonSource& source, const HoldOffPolicy& holdoff,
                              const StabilityConfig& cfg, std::uint64_t seed) {
  if (cfg.total_minutes < 20) {
    throw std::invalid_argument("stability_run: total_minutes must be >= 20");
  }
  const double period = clock.period_s();
  const double drift_per_s = cfg.drift_s_per_hour / 3600.0;
  const auto gates_per_sample = static_cast<std::uint64_t>(
      std::llround(cfg.integration_s * clock.gate_freq_hz));

  StabilitySeries out;
  double knob = 0.0;  // phase-shifter setting; drift accumulates on top

  for (int m = 0; m < cfg.total_minutes; ++m) {
    const double t_sim = 60.0 * m;
    const bool rescan = cfg.rescan_enabled && cfg.rescan_period_min > 0 &&
                        m % cfg.rescan_period_min == 0;
    if (rescan) {
      out.rescan_marks.push_back(m);
      try {
        // Full-range scan of the phase shifter; the drift rides on top of
        // every trial setting exactly as it does on the acquisitions.
        GateClock drifted = clock;
        drifted.phase_offset_s = wrap_phase(drift_per_s * t_sim, period);
        const auto scan = delay_scan(params, drifted, source, holdoff, cfg.scan,
                                     derive_seed(seed, 1000 + m));
        // The scan's grid is offset by half a period; map the refined peak
        // delay back to the shifter setting that centres the gate.
        knob = wrap_phase(scan.peak_delay_s + 0.5 * period, period);
      } catch (const no_peak_error&) {
        // Zero-rate detector: leave the knob where it is.
      }
    }
    GateClock run_clock = clock;
    run_clock.phase_offset_s =
        wrap_phase(knob + drift_per_s * t_sim, period);
    RunOptions opts;
    opts.mode = cfg.mode;
    const auto res = run_sequence(params, run_clock, source, holdoff,
                                  gates_per_sample, derive_seed(seed, m), opts);
    out.t_min.push_back(m);
    out.counts_10s.push_back(res.counts.recorded.total());
  }

  std::vector<double> kept;
  for (std::size_t i = 0; i < out.counts_10s.size(); ++i) {
    const bool marked =
        std::find(out.rescan_marks.begin(), out.rescan_marks.end(),
                  out.t_min[i]) != out.rescan_marks.end();
    if (!marked) kept.push_back(static_cast<double>(out.counts_10s[i]));
  }
  out.rsd_excluding_rescans = rsd(kept);
  return out;
}

DcrModel calibrate_dcr(std::span<const std::pair<double, double>> targets) {
  if (targets.size() < 2) {
    throw std::invalid_argument("calibrate_dcr: need at least 2 targets");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(targets.size());
  for (const auto& [pde, dcr] : targets) {
    if (!(dcr > 0.0)) {
      throw std::invalid_argument("calibrate_dcr: target rates must be > 0");
    }
    const double y = std::log(dcr);
    sx += pde;
    sy += y;
    sxx += pde * pde;
    sxy += pde * y;
  }
  const double det = n * sxx - sx * sx;
  if (std::fabs(det) < 1e-12 * std::max(1.0, n * sxx)) {
    throw degenerate_fit_error("calibrate_dcr: identical pde values");
  }
  DcrModel m;
  m.k_pde = (n * sxy - sx * sy) / det;
  m.dcr0_cps = std::exp((sy - m.k_pde * sx) / n);
  return m;
}

GateWidthModel fit_gate_width(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) {
    throw std::invalid_argument("fit_gate_width: need at least 2 pairs");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(pairs.size());
  for (const auto& [pde, width] : pairs) {
    sx += pde;
    sy += width;
    sxx += pde * pde;
    sxy += pde * width;
  }
  const double det = n * sxx - sx * sx;
  if (std::fabs(det) < 1e-12 * std::max(1.0, n * sxx)) {
    throw degenerate_fit_error("fit_gate_width: identical pde values");
  }
  GateWidthModel m;
  m.a_s_per_pde = (n * sxy - sx * sy) / det;
  m.b_s = (sy - m.a_s_per_pde * sx) / n;
  return m;
}

TrapModel calibrate_traps(const DetectorParams& base, const GateClock& clock,
                          const PhotonSource& source,
                          std::span<const TrapCalibrationTarget> targets,
                          const TrapCalibrationConfig& cfg, std::uint64_t seed) {
  if (targets.empty()) {
    throw std::invalid_argument("calibrate_traps: need at least 1 target");
  }
  if (cfg.tau_grid_s.empty()) {
    throw std::invalid_argument("calibrate_traps: tau grid is empty");
  }

  const bool all_zero =
      std::all_of(targets.begin(), targets.end(),
                  [](const TrapCalibrationTarget& t) { return t.p_ap == 0.0; });
  if (all_zero) {
    return TrapModel{0.0, cfg.tau_grid_s.front(), 0.0};
  }
  for (const auto& t : targets) {
    if (!(t.p_ap > 0.0)) {
      throw std::invalid_argument(
          "calibrate_traps: mixing zero and non-zero p_ap targets");
    }
  }

  const auto measure = [&](double tau, double product,
                           const TrapCalibrationTarget& target,
                           std::uint64_t eval_seed) {
    DetectorParams p = base;
    p.pde = target.pde;
    p.traps.n_fill = cfg.n_fill;
    p.traps.tau_detrap_s = tau;
    p.traps.p_trigger = std::min(1.0, product / cfg.n_fill);
    const HoldOffPolicy ho{target.holdoff_s};
    const auto [hist, res] =
        afterpulse_measurement(p, clock, source, ho, cfg.measure, eval_seed);
    return res.p_ap;
  };

  double best_residual = std::numeric_limits<double>::infinity();
  TrapModel best{};
  for (std::size_t ti = 0; ti < cfg.tau_grid_s.size(); ++ti) {
    const double tau = cfg.tau_grid_s[ti];
    // Mean log residual is monotone in the product; bisect it to zero.
    const auto objective = [&](double product) {
      double g = 0.0;
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const double m = measure(tau, product, targets[k],
                                 derive_seed(seed, ti * 97 + k));
        g += std::log(std::max(m, 1e-9) / targets[k].p_ap);
      }
      return g / static_cast<double>(targets.size());
    };

    double lo = 1e-4, hi = cfg.n_fill;
    double glo = objective(lo), ghi = objective(hi);
    double product;
    if (glo >= 0.0) {
      product = lo;
    } else if (ghi <= 0.0) {
      product = hi;
    } else {
      for (int it = 0; it < cfg.bisect_iters; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double gm = objective(mid);
        (gm < 0.0 ? lo : hi) = mid;
      }
      product = std::sqrt(lo * hi);
    }

    double residual = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const double m = measure(tau, product, targets[k],
                               derive_seed(seed, 5000 + ti * 97 + k));
      residual = std::max(residual, std::fabs(m / targets[k].p_ap - 1.0));
    }
    if (residual < best_residual) {
      best_residual = residual;
      best = TrapModel{cfg.n_fill, tau, std::min(1.0, product / cfg.n_fill)};
    }
  }

  if (best_residual > cfg.tolerance_rel) {
    throw unreachable_target_error(
        "calibrate_traps: best residual " + std::to_string(best_residual) +
        " exceeds tolerance " + std::to_string(cfg.tolerance_rel) +
        " (trap model cannot reach the targets)",
        best_residual);
  }
  return best;
}

}  // namespace swg
