#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "swgsim/protocol.hpp"
#include "swgsim/version.hpp"

namespace {

std::string default_output_dir() {
  if (const char* env = std::getenv("SWGSIM_OUT")) return env;
  return "out";
}

struct CommonFlags {
  std::vector<std::string> presets;
  std::string out = default_output_dir();
  std::uint64_t seed = 1;
  bool exact = false;
  bool fast = false;
  std::optional<double> pde;
  std::optional<double> holdoff_ns;
  std::optional<double> seconds;
  std::optional<std::uint64_t> gates;
  std::optional<int> points;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool multi_preset = false) {
  auto* preset = cmd->add_option("--preset", f.presets,
                                 multi_preset ? "Preset file(s)" : "Preset file");
  preset->required();
  if (!multi_preset) preset->expected(1);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_flag("--exact", f.exact, "Force the naive per-gate engine");
  cmd->add_flag("--fast", f.fast, "Use the skip-sampling engine (default)");
  cmd->add_option("--pde", f.pde, "Override detection efficiency");
  cmd->add_option("--holdoff-ns", f.holdoff_ns, "Override hold-off time [ns]");
  cmd->add_option("--seconds", f.seconds, "Acquisition length [s]");
  cmd->add_option("--gates", f.gates, "Acquisition length [gates]");
  cmd->add_option("--points", f.points, "Grid size");
}

swg::RunConfig to_config(swg::Protocol protocol, const CommonFlags& f) {
  swg::RunConfig c;
  c.protocol = protocol;
  c.preset_paths = f.presets;
  c.output_dir = f.out;
  c.seed = f.seed;
  c.exact_engine = f.exact;
  c.pde = f.pde;
  c.holdoff_ns = f.holdoff_ns;
  c.seconds = f.seconds;
  c.gates = f.gates;
  c.points = f.points;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(swg::kToolVersion) +
               " - sine-wave-gated single-photon detector simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", swg::kToolVersion);

  CommonFlags s21f, tracef, scanf_, dcrf, apf, papf, stabf;
  auto* s21 = app.add_subcommand("s21", "Readout-chain frequency response");
  add_common(s21, s21f);
  auto* trace = app.add_subcommand("trace", "Gated waveform trace with injected avalanches");
  add_common(trace, tracef);
  auto* scan = app.add_subcommand("delay-scan", "Effective gating width via delay scan");
  add_common(scan, scanf_);
  auto* dcr = app.add_subcommand("dcr-curve", "Dark count rate versus PDE");
  add_common(dcr, dcrf);
  auto* ap = app.add_subcommand("afterpulse", "Afterpulse histogram and probability");
  add_common(ap, apf);
  auto* pap = app.add_subcommand("pap-curve", "Afterpulse probability versus PDE");
  add_common(pap, papf, /*multi_preset=*/true);
  auto* stab = app.add_subcommand("stability", "Long-run stability protocol");
  add_common(stab, stabf);
  std::optional<double> drift;
  std::optional<int> minutes;
  bool no_rescan = false;
  stab->add_option("--drift-ps-per-hour", drift, "Injected phase drift");
  stab->add_option("--minutes", minutes, "Simulated minutes (>= 20)");
  stab->add_flag("--no-rescan", no_rescan, "Disable the 10-minute delay re-scan");

  auto* cal = app.add_subcommand("calibrate", "Fit presets to target operating points");
  std::string targets;
  std::string cal_out = default_output_dir();
  std::uint64_t cal_seed = 1;
  cal->add_option("--targets", targets, "Calibration targets file")->required();
  cal->add_option("--out", cal_out, "Output directory");
  cal->add_option("--seed", cal_seed, "Master seed");

  auto* runc = app.add_subcommand("run", "Run a protocol described by a config file");
  std::string config_path;
  runc->add_option("--config", config_path, "Run-config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (runc->parsed()) {
      return swg::run_protocol(swg::load_config(config_path));
    }
    if (cal->parsed()) {
      swg::RunConfig c;
      c.protocol = swg::Protocol::calibrate;
      c.calibrate_targets_path = targets;
      c.output_dir = cal_out;
      c.seed = cal_seed;
      return swg::run_protocol(c);
    }
    if (s21->parsed()) return swg::run_protocol(to_config(swg::Protocol::s21, s21f));
    if (trace->parsed()) return swg::run_protocol(to_config(swg::Protocol::trace, tracef));
    if (scan->parsed()) {
      return swg::run_protocol(to_config(swg::Protocol::delay_scan, scanf_));
    }
    if (dcr->parsed()) return swg::run_protocol(to_config(swg::Protocol::dcr_curve, dcrf));
    if (ap->parsed()) return swg::run_protocol(to_config(swg::Protocol::afterpulse, apf));
    if (pap->parsed()) return swg::run_protocol(to_config(swg::Protocol::pap_curve, papf));
    if (stab->parsed()) {
      auto c = to_config(swg::Protocol::stability, stabf);
      c.drift_ps_per_hour = drift;
      c.minutes = minutes;
      c.no_rescan = no_rescan;
      return swg::run_protocol(c);
    }
  } catch (const swg::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
