#include "swgsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "swgsim/errors.hpp"

namespace swg {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_char(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error(where + ": '" + text + "' is not a number");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

IniFile IniFile::parse_string(const std::string& text, const std::string& origin) {
  IniFile f;
  f.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw config_error(origin + ":" + std::to_string(lineno) +
                           ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!f.data_.count(section)) f.section_order_.push_back(section);
      f.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (section.empty()) {
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": key '" + key + "' outside any [section]");
    }
    if (f.data_[section].count(key)) {
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": duplicate key '" + key + "' in [" + section + "]");
    }
    f.data_[section][key] = Entry{value, lineno, false};
  }
  return f;
}

bool IniFile::has_section(const std::string& section) const {
  return data_.count(section) != 0;
}

bool IniFile::has_key(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) != 0;
}

std::vector<std::string> IniFile::sections() const { return section_order_; }

std::string IniFile::where(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it != data_.end()) {
    auto jt = it->second.find(key);
    if (jt != it->second.end()) {
      return origin_ + ":" + std::to_string(jt->second.line);
    }
  }
  return origin_;
}

std::optional<std::string> IniFile::find(const std::string& section,
                                         const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end()) return std::nullopt;
  auto jt = it->second.find(key);
  if (jt == it->second.end()) return std::nullopt;
  jt->second.used = true;
  return jt->second.value;
}

std::string IniFile::get_string(const std::string& section, const std::string& key) const {
  auto v = find(section, key);
  if (!v) {
    throw config_error(origin_ + ": missing key '" + key + "' in [" + section + "]");
  }
  return *v;
}

double IniFile::get_double(const std::string& section, const std::string& key) const {
  return parse_double(get_string(section, key), where(section, key));
}

std::uint64_t IniFile::get_uint(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error(where(section, key) + ": '" + s + "' is not a non-negative integer");
  }
}

std::vector<double> IniFile::get_doubles(const std::string& section,
                                         const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split_ws(get_string(section, key))) {
    out.push_back(parse_double(tok, where(section, key)));
  }
  return out;
}

void IniFile::fail_on_unused() const {
  for (const auto& [section, entries] : data_) {
    for (const auto& [key, e] : entries) {
      if (!e.used) {
        throw config_error(origin_ + ":" + std::to_string(e.line) +
                           ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
}

ChainConfig ChainSettings::build() const {
  ChainConfig c;
  c.lpf = synth_lowpass(filter_spec, family);
  c.amp_gain_db = amp_gain_db;
  c.coupling_corner_hz = coupling_corner_hz;
  c.gate_amplitude_vpp = gate_amplitude_vpp;
  c.bias_voltage_v = bias_voltage_v;
  c.feedthrough = feedthrough;
  c.avalanche = avalanche;
  return c;
}

void Preset::validate() const {
  clock.validate();
  detector.validate(clock.gate_freq_hz);
  source.validate();
  holdoff.validate();
  chain.filter_spec.validate();
}

namespace {

void read_chain(const IniFile& ini, ChainSettings& ch) {
  if (!ini.has_section("chain")) return;
  const auto d = [&](const char* key, double& slot) {
    if (auto v = ini.find("chain", key)) slot = parse_double(*v, ini.where("chain", key));
  };
  d("passband_edge_hz", ch.filter_spec.passband_edge_hz);
  d("stopband_freq_hz", ch.filter_spec.stopband_freq_hz);
  d("min_stopband_atten_db", ch.filter_spec.min_stopband_atten_db);
  d("max_passband_ripple_db", ch.filter_spec.max_passband_ripple_db);
  if (auto v = ini.find("chain", "max_order")) {
    ch.filter_spec.max_order =
        static_cast<int>(parse_double(*v, ini.where("chain", "max_order")));
  }
  if (auto v = ini.find("chain", "family")) {
    try {
      ch.family = filter_family_from_string(*v);
    } catch (const std::invalid_argument& e) {
      throw config_error(ini.where("chain", "family") + ": " + e.what());
    }
  }
  d("amp_gain_db", ch.amp_gain_db);
  d("coupling_corner_hz", ch.coupling_corner_hz);
  d("gate_amplitude_vpp", ch.gate_amplitude_vpp);
  d("bias_voltage_v", ch.bias_voltage_v);
  d("feedthrough_c0_f", ch.feedthrough.c0_farad);
  d("feedthrough_beta", ch.feedthrough.beta);
  d("input_impedance_ohm", ch.feedthrough.input_impedance_ohm);
  d("avalanche_amplitude_v", ch.avalanche.amplitude_v);
  d("avalanche_rise_s", ch.avalanche.rise_s);
  d("avalanche_decay_s", ch.avalanche.decay_s);
}

Preset preset_from_ini(const IniFile& ini, const std::string& origin) {
  Preset p;
  p.origin = origin;
  p.detector.temperature_k = ini.get_double("detector", "temperature_k");
  p.detector.pde = ini.get_double("detector", "pde");
  p.detector.dcr.dcr0_cps = ini.get_double("dcr", "dcr0_cps");
  p.detector.dcr.k_pde = ini.get_double("dcr", "k_pde");
  p.detector.gate_width.a_s_per_pde = ini.get_double("gate_width", "a_s_per_pde");
  p.detector.gate_width.b_s = ini.get_double("gate_width", "b_s");
  if (ini.has_section("traps")) {
    p.detector.traps.n_fill = ini.get_double("traps", "n_fill");
    p.detector.traps.tau_detrap_s = ini.get_double("traps", "tau_detrap_s");
    p.detector.traps.p_trigger = ini.get_double("traps", "p_trigger");
  }
  p.clock.gate_freq_hz = ini.get_double("gate", "gate_freq_hz");
  if (ini.has_key("gate", "phase_offset_s")) {
    p.clock.phase_offset_s = ini.get_double("gate", "phase_offset_s");
  }
  if (ini.has_section("source")) {
    p.source.rep_rate_hz = ini.get_double("source", "rep_rate_hz");
    p.source.mu = ini.get_double("source", "mu");
    if (ini.has_key("source", "pulse_sigma_s")) {
      p.source.pulse_sigma_s = ini.get_double("source", "pulse_sigma_s");
    }
  }
  if (ini.has_section("holdoff")) {
    p.holdoff.holdoff_s = ini.get_double("holdoff", "holdoff_s");
    p.has_holdoff = true;
  }
  read_chain(ini, p.chain);
  ini.fail_on_unused();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(origin + ": " + e.what());
  }
  return p;
}

}  // namespace

Preset load_preset(const std::string& path) {
  return preset_from_ini(IniFile::parse_file(path), path);
}

std::string preset_to_ini(const Preset& p) {
  std::ostringstream out;
  out << "# swgsim detector preset (" << p.detector.temperature_k << " K)\n";
  out << "\n[detector]\n";
  out << "temperature_k = " << fmt(p.detector.temperature_k) << "\n";
  out << "pde = " << fmt(p.detector.pde) << "\n";
  out << "\n[dcr]\n";
  out << "dcr0_cps = " << fmt(p.detector.dcr.dcr0_cps) << "\n";
  out << "k_pde = " << fmt(p.detector.dcr.k_pde) << "\n";
  out << "\n[gate_width]\n";
  out << "a_s_per_pde = " << fmt(p.detector.gate_width.a_s_per_pde) << "\n";
  out << "b_s = " << fmt(p.detector.gate_width.b_s) << "\n";
  out << "\n[traps]\n";
  out << "n_fill = " << fmt(p.detector.traps.n_fill) << "\n";
  out << "tau_detrap_s = " << fmt(p.detector.traps.tau_detrap_s) << "\n";
  out << "p_trigger = " << fmt(p.detector.traps.p_trigger) << "\n";
  out << "\n[gate]\n";
  out << "gate_freq_hz = " << fmt(p.clock.gate_freq_hz) << "\n";
  out << "phase_offset_s = " << fmt(p.clock.phase_offset_s) << "\n";
  out << "\n[source]\n";
  out << "rep_rate_hz = " << fmt(p.source.rep_rate_hz) << "\n";
  out << "mu = " << fmt(p.source.mu) << "\n";
  out << "pulse_sigma_s = " << fmt(p.source.pulse_sigma_s) << "\n";
  if (p.has_holdoff) {
    out << "\n[holdoff]\n";
    out << "holdoff_s = " << fmt(p.holdoff.holdoff_s) << "\n";
  }
  out << "\n[chain]\n";
  out << "passband_edge_hz = " << fmt(p.chain.filter_spec.passband_edge_hz) << "\n";
  out << "stopband_freq_hz = " << fmt(p.chain.filter_spec.stopband_freq_hz) << "\n";
  out << "min_stopband_atten_db = " << fmt(p.chain.filter_spec.min_stopband_atten_db) << "\n";
  out << "max_passband_ripple_db = " << fmt(p.chain.filter_spec.max_passband_ripple_db) << "\n";
  out << "max_order = " << p.chain.filter_spec.max_order << "\n";
  out << "family = " << to_string(p.chain.family) << "\n";
  out << "amp_gain_db = " << fmt(p.chain.amp_gain_db) << "\n";
  out << "coupling_corner_hz = " << fmt(p.chain.coupling_corner_hz) << "\n";
  out << "gate_amplitude_vpp = " << fmt(p.chain.gate_amplitude_vpp) << "\n";
  out << "bias_voltage_v = " << fmt(p.chain.bias_voltage_v) << "\n";
  out << "feedthrough_c0_f = " << fmt(p.chain.feedthrough.c0_farad) << "\n";
  out << "feedthrough_beta = " << fmt(p.chain.feedthrough.beta) << "\n";
  out << "input_impedance_ohm = " << fmt(p.chain.feedthrough.input_impedance_ohm) << "\n";
  out << "avalanche_amplitude_v = " << fmt(p.chain.avalanche.amplitude_v) << "\n";
  out << "avalanche_rise_s = " << fmt(p.chain.avalanche.rise_s) << "\n";
  out << "avalanche_decay_s = " << fmt(p.chain.avalanche.decay_s) << "\n";
  return out.str();
}

void save_preset(const Preset& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write preset '" + path + "'");
  out << preset_to_ini(p);
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::s21: return "s21";
    case Protocol::trace: return "trace";
    case Protocol::delay_scan: return "delay-scan";
    case Protocol::dcr_curve: return "dcr-curve";
    case Protocol::afterpulse: return "afterpulse";
    case Protocol::pap_curve: return "pap-curve";
    case Protocol::stability: return "stability";
    case Protocol::calibrate: return "calibrate";
  }
  return "?";
}

Protocol protocol_from_string(const std::string& s) {
  for (Protocol p : {Protocol::s21, Protocol::trace, Protocol::delay_scan,
                     Protocol::dcr_curve, Protocol::afterpulse, Protocol::pap_curve,
                     Protocol::stability, Protocol::calibrate}) {
    if (to_string(p) == s) return p;
  }
  throw config_error("unknown protocol '" + s + "'");
}

void RunConfig::validate() const {
  if (protocol == Protocol::calibrate) {
    if (calibrate_targets_path.empty()) {
      throw config_error("calibrate protocol requires a targets file (key 'targets')");
    }
  } else if (preset_paths.empty()) {
    throw config_error("protocol '" + to_string(protocol) + "' requires key 'preset'");
  }
  if (pde && !(*pde >= 0.0 && *pde <= 1.0)) {
    throw config_error("override 'pde' = " + fmt(*pde) + " outside [0, 1]");
  }
  if (holdoff_ns && !(*holdoff_ns >= 0.0)) {
    throw config_error("override 'holdoff_ns' = " + fmt(*holdoff_ns) + " must be >= 0");
  }
  if (seconds && !(*seconds > 0.0)) {
    throw config_error("override 'seconds' = " + fmt(*seconds) + " must be > 0");
  }
  if (gates && *gates < 1) {
    throw config_error("override 'gates' must be >= 1");
  }
  if (points && *points < 2) {
    throw config_error("override 'points' = " + std::to_string(*points) + " must be >= 2");
  }
  if (minutes && *minutes < 20) {
    throw config_error("override 'minutes' = " + std::to_string(*minutes) +
                       " must be >= 20");
  }
}

RunConfig load_config(const std::string& path) {
  const IniFile ini = IniFile::parse_file(path);
  RunConfig c;
  try {
    c.protocol = protocol_from_string(ini.get_string("run", "protocol"));
  } catch (const config_error& e) {
    throw config_error(ini.where("run", "protocol") + ": " + e.what());
  }
  if (auto v = ini.find("run", "preset")) {
    for (auto& tok : split_ws(*v)) c.preset_paths.push_back(tok);
  }
  if (auto v = ini.find("run", "output_dir")) c.output_dir = *v;
  if (ini.has_key("run", "seed")) c.seed = ini.get_uint("run", "seed");
  if (auto v = ini.find("run", "engine")) {
    if (*v == "exact") {
      c.exact_engine = true;
    } else if (*v != "fast") {
      throw config_error(ini.where("run", "engine") + ": engine must be fast|exact");
    }
  }
  if (auto v = ini.find("run", "targets")) c.calibrate_targets_path = *v;

  const char* sec = "overrides";
  if (ini.has_key(sec, "pde")) c.pde = ini.get_double(sec, "pde");
  if (ini.has_key(sec, "holdoff_ns")) c.holdoff_ns = ini.get_double(sec, "holdoff_ns");
  if (ini.has_key(sec, "seconds")) c.seconds = ini.get_double(sec, "seconds");
  if (ini.has_key(sec, "gates")) c.gates = ini.get_uint(sec, "gates");
  if (ini.has_key(sec, "points")) {
    c.points = static_cast<int>(ini.get_uint(sec, "points"));
  }
  if (ini.has_key(sec, "drift_ps_per_hour")) {
    c.drift_ps_per_hour = ini.get_double(sec, "drift_ps_per_hour");
  }
  if (ini.has_key(sec, "minutes")) {
    c.minutes = static_cast<int>(ini.get_uint(sec, "minutes"));
  }
  if (auto v = ini.find(sec, "no_rescan")) {
    c.no_rescan = (*v == "true" || *v == "1");
  }
  ini.fail_on_unused();
  c.validate();
  return c;
}

std::string config_to_ini(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "protocol = " << to_string(c.protocol) << "\n";
  if (!c.preset_paths.empty()) {
    out << "preset =";
    for (const auto& p : c.preset_paths) out << " " << p;
    out << "\n";
  }
  out << "output_dir = " << c.output_dir << "\n";
  out << "seed = " << c.seed << "\n";
  out << "engine = " << (c.exact_engine ? "exact" : "fast") << "\n";
  if (!c.calibrate_targets_path.empty()) {
    out << "targets = " << c.calibrate_targets_path << "\n";
  }
  out << "\n[overrides]\n";
  if (c.pde) out << "pde = " << fmt(*c.pde) << "\n";
  if (c.holdoff_ns) out << "holdoff_ns = " << fmt(*c.holdoff_ns) << "\n";
  if (c.seconds) out << "seconds = " << fmt(*c.seconds) << "\n";
  if (c.gates) out << "gates = " << *c.gates << "\n";
  if (c.points) out << "points = " << *c.points << "\n";
  if (c.drift_ps_per_hour) out << "drift_ps_per_hour = " << fmt(*c.drift_ps_per_hour) << "\n";
  if (c.minutes) out << "minutes = " << *c.minutes << "\n";
  if (c.no_rescan) out << "no_rescan = true\n";
  return out.str();
}

void save_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config '" + path + "'");
  out << config_to_ini(config);
}

CalibrationSpec load_calibration_spec(const std::string& path) {
  const IniFile ini = IniFile::parse_file(path);
  CalibrationSpec spec;
  if (auto v = ini.find("base", "preset")) {
    spec.base = load_preset(*v);
  } else {
    spec.base.chain = ChainSettings{};
    spec.base.has_holdoff = true;
  }
  if (ini.has_key("base", "holdoff_s")) {
    spec.base.holdoff.holdoff_s = ini.get_double("base", "holdoff_s");
    spec.base.has_holdoff = true;
  }
  spec.tau_grid_s = ini.get_doubles("calibrate", "tau_grid_s");
  if (ini.has_key("calibrate", "acquisition_s")) {
    spec.acquisition_s = ini.get_double("calibrate", "acquisition_s");
  }

  const auto parse_pairs = [&](const std::string& sec, const std::string& key) {
    std::vector<std::pair<double, double>> out;
    for (const auto& tok : split_ws(ini.get_string(sec, key))) {
      const auto parts = split_char(tok, ':');
      if (parts.size() != 2) {
        throw config_error(ini.where(sec, key) + ": expected pde:value, got '" + tok + "'");
      }
      out.emplace_back(parse_double(parts[0], ini.where(sec, key)),
                       parse_double(parts[1], ini.where(sec, key)));
    }
    return out;
  };

  for (const auto& sec : ini.sections()) {
    if (sec.rfind("temp:", 0) != 0) continue;
    CalibrationTemperature t;
    t.temperature_k = parse_double(sec.substr(5), path + " [" + sec + "]");
    if (ini.has_key(sec, "pde")) t.default_pde = ini.get_double(sec, "pde");
    t.dcr_targets = parse_pairs(sec, "dcr");
    t.gate_width_points = parse_pairs(sec, "gate_width");
    if (ini.has_key(sec, "pap")) {
      for (const auto& tok : split_ws(ini.get_string(sec, "pap"))) {
        const auto parts = split_char(tok, ':');
        if (parts.size() != 3) {
          throw config_error(ini.where(sec, "pap") +
                             ": expected pde:holdoff_s:p_ap, got '" + tok + "'");
        }
        TrapCalibrationTarget tg;
        tg.pde = parse_double(parts[0], ini.where(sec, "pap"));
        tg.holdoff_s = parse_double(parts[1], ini.where(sec, "pap"));
        tg.p_ap = parse_double(parts[2], ini.where(sec, "pap"));
        t.pap_targets.push_back(tg);
      }
    }
    spec.temperatures.push_back(std::move(t));
  }
  if (spec.temperatures.empty()) {
    throw config_error(path + ": no [temp:<kelvin>] sections");
  }
  ini.fail_on_unused();
  return spec;
}

}  // namespace swg
