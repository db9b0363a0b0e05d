#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swgsim/chain.hpp"
#include "swgsim/detector.hpp"
#include "swgsim/experiments.hpp"

namespace swg {

// Flat key-value text with one [section] per module; '#' and ';' start
// comments. Grammar documented in the README. Unknown keys are errors so
// typos cannot silently change a run.
class IniFile {
 public:
  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text, const std::string& origin);

  bool has_section(const std::string& section) const;
  bool has_key(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;

  std::string get_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  std::uint64_t get_uint(const std::string& section, const std::string& key) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

  std::optional<std::string> find(const std::string& section, const std::string& key) const;

  // config_error listing every key that was never read.
  void fail_on_unused() const;

  // "<origin>:<line>" anchor for a key, for validation messages.
  std::string where(const std::string& section, const std::string& key) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::vector<std::string> section_order_;
};

// Chain settings as stored in presets; build() synthesizes the LPF.
struct ChainSettings {
  FilterSpec filter_spec;
  FilterFamily family = FilterFamily::elliptic;
  double amp_gain_db = 40.0;
  double coupling_corner_hz = 1e6;
  double gate_amplitude_vpp = 11.0;
  double bias_voltage_v = 70.0;
  FeedthroughModel feedthrough;
  AvalancheShape avalanche;

  ChainConfig build() const;
};

struct Preset {
  DetectorParams detector;
  GateClock clock;
  PhotonSource source;
  HoldOffPolicy holdoff;
  ChainSettings chain;
  bool has_holdoff = false;
  std::string origin;

  void validate() const;
};

Preset load_preset(const std::string& path);
std::string preset_to_ini(const Preset& preset);
void save_preset(const Preset& preset, const std::string& path);

enum class Protocol {
  s21,
  trace,
  delay_scan,
  dcr_curve,
  afterpulse,
  pap_curve,
  stability,
  calibrate,
};

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);  // config_error on unknown

struct RunConfig {
  Protocol protocol = Protocol::dcr_curve;
  std::vector<std::string> preset_paths;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  bool exact_engine = false;

  std::optional<double> pde;
  std::optional<double> holdoff_ns;
  std::optional<double> seconds;
  std::optional<std::uint64_t> gates;
  std::optional<int> points;
  std::optional<double> drift_ps_per_hour;
  std::optional<int> minutes;
  bool no_rescan = false;

  std::string calibrate_targets_path;  // calibrate protocol only

  bool operator==(const RunConfig&) const = default;

  // Invariant checks with offending key and bound in the message.
  void validate() const;
};

RunConfig load_config(const std::string& path);
std::string config_to_ini(const RunConfig& config);
void save_config(const RunConfig& config, const std::string& path);

// Calibration input: paper operating points per temperature.
struct CalibrationTemperature {
  double temperature_k = 0.0;
  double default_pde = 0.10;
  std::vector<std::pair<double, double>> dcr_targets;        // (pde, cps)
  std::vector<std::pair<double, double>> gate_width_points;  // (pde, seconds)
  std::vector<TrapCalibrationTarget> pap_targets;
};

struct CalibrationSpec {
  Preset base;  // clock/source/holdoff/chain template for generated presets
  std::vector<double> tau_grid_s;
  double acquisition_s = 20.0;
  std::vector<CalibrationTemperature> temperatures;
};

CalibrationSpec load_calibration_spec(const std::string& path);

}  // namespace swg
