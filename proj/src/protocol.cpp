#include "swgsim/protocol.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "swgsim/errors.hpp"
#include "swgsim/output.hpp"
#include "swgsim/version.hpp"
#include "swgsim/waveform.hpp"

namespace swg {

namespace {

Preset resolve_preset(const RunConfig& cfg, const std::string& path) {
  Preset p = load_preset(path);
  if (cfg.pde) p.detector.pde = *cfg.pde;
  if (cfg.holdoff_ns) {
    p.holdoff.holdoff_s = *cfg.holdoff_ns * 1e-9;
    p.has_holdoff = true;
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("resolved config invalid: ") + e.what());
  }
  return p;
}

std::uint64_t resolve_gates(const RunConfig& cfg, double gate_freq_hz,
                            double default_seconds) {
  if (cfg.gates) return *cfg.gates;
  const double seconds = cfg.seconds.value_or(default_seconds);
  return static_cast<std::uint64_t>(std::llround(seconds * gate_freq_hz));
}

EngineMode mode_of(const RunConfig& cfg) {
  return cfg.exact_engine ? EngineMode::exact_loop : EngineMode::fast;
}

void require_holdoff(const Preset& p, const RunConfig& cfg) {
  if (!p.has_holdoff && !cfg.holdoff_ns) {
    throw config_error(
        "protocol '" + to_string(cfg.protocol) +
        "' requires a hold-off: add a [holdoff] section to the preset or pass "
        "holdoff_ns");
  }
}

void do_s21(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const Preset p = resolve_preset(cfg, cfg.preset_paths.front());
  const ChainConfig chain = p.chain.build();
  const int n = cfg.points.value_or(3001);
  const double fmax = 2.0 * p.chain.filter_spec.stopband_freq_hz;
  const double fmin = 1e6;
  std::vector<double> freqs;
  freqs.reserve(n);
  for (int i = 0; i < n; ++i) {
    freqs.push_back(fmin + (fmax - fmin) * static_cast<double>(i) / (n - 1));
  }
  stage.add("s21.csv", s21_csv(frequency_response(chain, freqs)));
  manifest.per_point_seeds = {};
}

void do_trace(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const Preset p = resolve_preset(cfg, cfg.preset_paths.front());
  const ChainConfig chain = p.chain.build();
  const double duration = cfg.seconds.value_or(2e-6);
  const int n_av = cfg.points.value_or(1);
  const double period = 1.0 / chain.gate_freq_hz;
  std::vector<double> times;
  for (int i = 1; i <= n_av; ++i) {
    const double t = duration * static_cast<double>(i) / (n_av + 1);
    const double gate = std::floor(t / period);
    times.push_back((gate + 0.25) * period);  // snap to the gate crest
  }
  const double noise_rms = 1e-4;
  const auto trace =
      simulate_gate_waveform(chain, times, duration, noise_rms, cfg.seed);
  stage.add("trace.csv", trace_csv(trace));
  stage.add("trace_meta.json", trace_meta_json(chain, cfg.seed));
  manifest.per_point_seeds = {cfg.seed};
}

void do_delay_scan(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const Preset p = resolve_preset(cfg, cfg.preset_paths.front());
  DelayScanConfig sc;
  sc.n_points = cfg.points.value_or(81);
  sc.gates_per_point = resolve_gates(cfg, p.clock.gate_freq_hz, 0.2);
  sc.mode = mode_of(cfg);
  const auto result =
      delay_scan(p.detector, p.clock, p.source, p.holdoff, sc, cfg.seed);
  stage.add("delay_scan.csv", delay_scan_csv(result));
  for (int i = 0; i < sc.n_points; ++i) {
    manifest.per_point_seeds.push_back(derive_seed(cfg.seed, i));
  }
}

void do_dcr_curve(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const Preset p = resolve_preset(cfg, cfg.preset_paths.front());
  std::vector<double> grid;
  if (cfg.pde) {
    grid.push_back(*cfg.pde);
  } else {
    for (double x = 0.05; x < 0.30 + 1e-9; x += 0.025) grid.push_back(x);
  }
  const std::uint64_t gates = resolve_gates(cfg, p.clock.gate_freq_hz, 10.0);
  const auto points =
      dcr_pde_curve(p.detector, p.clock, grid, gates, cfg.seed, mode_of(cfg));
  stage.add("dcr_curve.csv", dcr_curve_csv(points));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    manifest.per_point_seeds.push_back(derive_seed(cfg.seed, i));
  }
}

void do_afterpulse(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const Preset p = resolve_preset(cfg, cfg.preset_paths.front());
  require_holdoff(p, cfg);
  AfterpulseConfig ac;
  ac.acquisition_s = cfg.seconds.value_or(100.0);
  ac.mode = mode_of(cfg);
  const auto [hist, result] = afterpulse_measurement(p.detector, p.clock, p.source,
                                                     p.holdoff, ac, cfg.seed);
  stage.add("histogram.csv", histogram_csv(hist));
  stage.add("afterpulse.csv", afterpulse_csv(result));
  manifest.per_point_seeds = {cfg.seed};
}

void do_pap_curve(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  std::vector<DetectorParams> presets;
  Preset first{};
  for (std::size_t i = 0; i < cfg.preset_paths.size(); ++i) {
    Preset p = resolve_preset(cfg, cfg.preset_paths[i]);
    require_holdoff(p, cfg);
    if (i == 0) first = p;
    presets.push_back(p.detector);
  }
  std::vector<double> grid;
  if (cfg.pde) {
    grid.push_back(*cfg.pde);
  } else {
    grid = {0.10, 0.15, 0.20, 0.25, 0.275};
  }
  AfterpulseConfig ac;
  ac.acquisition_s = cfg.seconds.value_or(60.0);
  ac.mode = mode_of(cfg);
  const auto points = pap_vs_pde_curve(presets, first.clock, first.source,
                                       first.holdoff, grid, ac, cfg.seed);
  stage.add("pap_curve.csv", pap_curve_csv(points));
  for (std::size_t i = 0; i < presets.size() * grid.size(); ++i) {
    manifest.per_point_seeds.push_back(derive_seed(cfg.seed, i));
  }
}

void do_stability(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const Preset p = resolve_preset(cfg, cfg.preset_paths.front());
  StabilityConfig sc;
  sc.total_minutes = cfg.minutes.value_or(60);
  sc.rescan_enabled = !cfg.no_rescan;
  sc.drift_s_per_hour = cfg.drift_ps_per_hour.value_or(0.0) * 1e-12;
  sc.mode = mode_of(cfg);
  sc.scan.mode = mode_of(cfg);
  const auto series =
      stability_run(p.detector, p.clock, p.source, p.holdoff, sc, cfg.seed);
  stage.add("stability.csv", stability_csv(series));
  for (int m = 0; m < sc.total_minutes; ++m) {
    manifest.per_point_seeds.push_back(derive_seed(cfg.seed, m));
  }
}

void do_calibrate(const RunConfig& cfg, OutputStager& stage, RunManifest& manifest) {
  const CalibrationSpec spec = load_calibration_spec(cfg.calibrate_targets_path);
  for (const auto& temp : spec.temperatures) {
    Preset p = spec.base;
    p.detector.temperature_k = temp.temperature_k;
    p.detector.pde = temp.default_pde;
    p.detector.dcr = calibrate_dcr(temp.dcr_targets);
    p.detector.gate_width = fit_gate_width(temp.gate_width_points);
    if (!temp.pap_targets.empty()) {
      TrapCalibrationConfig tc;
      tc.tau_grid_s = spec.tau_grid_s;
      tc.measure.acquisition_s = spec.acquisition_s;
      p.detector.traps = calibrate_traps(p.detector, p.clock, p.source,
                                         temp.pap_targets, tc, cfg.seed);
    } else {
      p.detector.traps = TrapModel{0.0, 1e-6, 0.0};
    }
    p.validate();
    char name[64];
    std::snprintf(name, sizeof name, "preset_%.0fK", temp.temperature_k);
    stage.add(name, preset_to_ini(p));
  }
  manifest.per_point_seeds = {cfg.seed};
}

}  // namespace

int run_protocol(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    config.validate();
    OutputStager stage(config.output_dir);
    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.protocol = config.protocol;
    manifest.config = config;
    manifest.master_seed = config.seed;

    switch (config.protocol) {
      case Protocol::s21: do_s21(config, stage, manifest); break;
      case Protocol::trace: do_trace(config, stage, manifest); break;
      case Protocol::delay_scan: do_delay_scan(config, stage, manifest); break;
      case Protocol::dcr_curve: do_dcr_curve(config, stage, manifest); break;
      case Protocol::afterpulse: do_afterpulse(config, stage, manifest); break;
      case Protocol::pap_curve: do_pap_curve(config, stage, manifest); break;
      case Protocol::stability: do_stability(config, stage, manifest); break;
      case Protocol::calibrate: do_calibrate(config, stage, manifest); break;
    }

    manifest.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stage.add("manifest.json", manifest_json(manifest));
    for (const auto& path : stage.commit()) {
      std::cout << path << "\n";
    }
    return 0;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace swg
