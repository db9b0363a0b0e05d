#include "swgsim/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace swg {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string s21_csv(const S21Curve& curve) {
  std::ostringstream out;
  out << "freq_hz,mag_db\n";
  for (std::size_t i = 0; i < curve.freqs_hz.size(); ++i) {
    out << num(curve.freqs_hz[i]) << "," << num(curve.mag_db[i]) << "\n";
  }
  return out.str();
}

std::string trace_csv(const WaveformTrace& trace) {
  std::ostringstream out;
  out << "t_s,v\n";
  const double dt = trace.sample_rate_hz > 0.0 ? 1.0 / trace.sample_rate_hz : 0.0;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    out << num(trace.t0_s + static_cast<double>(i) * dt) << ","
        << num(trace.samples[i]) << "\n";
  }
  return out.str();
}

std::string trace_meta_json(const ChainConfig& chain, std::uint64_t seed) {
  nlohmann::json j;
  j["seed"] = seed;
  j["gate_freq_hz"] = chain.gate_freq_hz;
  j["gate_amplitude_vpp"] = chain.gate_amplitude_vpp;
  j["bias_voltage_v"] = chain.bias_voltage_v;
  j["amp_gain_db"] = chain.amp_gain_db;
  j["coupling_corner_hz"] = chain.coupling_corner_hz;
  j["lpf"] = {{"family", to_string(chain.lpf.family)},
              {"order", chain.lpf.order},
              {"dc_gain_db", chain.lpf.dc_gain_db}};
  auto sections = nlohmann::json::array();
  for (const auto& s : chain.lpf.sections) {
    sections.push_back({{"b", {s.b0, s.b1, s.b2}}, {"a", {1.0, s.a1, s.a2}}});
  }
  j["lpf"]["sections"] = sections;
  j["feedthrough"] = {{"c0_farad", chain.feedthrough.c0_farad},
                      {"beta", chain.feedthrough.beta},
                      {"input_impedance_ohm", chain.feedthrough.input_impedance_ohm}};
  j["avalanche"] = {{"amplitude_v", chain.avalanche.amplitude_v},
                    {"rise_s", chain.avalanche.rise_s},
                    {"decay_s", chain.avalanche.decay_s}};
  return j.dump(2) + "\n";
}

std::string delay_scan_csv(const DelayScanResult& result) {
  std::ostringstream out;
  out << "# fwhm_s=" << num(result.fwhm_s) << "\n";
  out << "delay_s,count_rate_cps\n";
  for (std::size_t i = 0; i < result.delays_s.size(); ++i) {
    out << num(result.delays_s[i]) << "," << num(result.count_rates_cps[i]) << "\n";
  }
  return out.str();
}

std::string dcr_curve_csv(const std::vector<DcrPdePoint>& points) {
  std::ostringstream out;
  out << "pde,dcr_cps,dcr_per_gate,duty_cycle,dcr_normalized_cps\n";
  for (const auto& p : points) {
    out << num(p.pde) << "," << num(p.dcr_cps) << "," << num(p.dcr_per_gate) << ","
        << num(p.duty_cycle) << "," << num(p.dcr_normalized_cps) << "\n";
  }
  return out.str();
}

std::string histogram_csv(const Histogram& hist) {
  std::ostringstream out;
  out << "bin_start_s,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << num(hist.origin_s + static_cast<double>(i) * hist.bin_width_s) << ","
        << hist.counts[i] << "\n";
  }
  return out.str();
}

std::string afterpulse_csv(const AfterpulseResult& r) {
  std::ostringstream out;
  out << "p_ap,p_ap_per_gate,window_s,photon_counts,afterpulse_counts,"
         "dcr_baseline_per_bin,recorded_events\n";
  out << num(r.p_ap) << "," << num(r.p_ap_per_gate) << "," << num(r.window_s) << ","
      << num(r.photon_counts) << "," << num(r.afterpulse_counts) << ","
      << num(r.dcr_baseline_per_bin) << "," << r.recorded_events << "\n";
  return out.str();
}

std::string pap_curve_csv(const std::vector<PapPoint>& points) {
  std::ostringstream out;
  out << "temperature_k,pde,p_ap,p_ap_per_gate\n";
  for (const auto& p : points) {
    out << num(p.temperature_k) << "," << num(p.pde) << "," << num(p.p_ap) << ","
        << num(p.p_ap_per_gate) << "\n";
  }
  return out.str();
}

std::string stability_csv(const StabilitySeries& series) {
  std::ostringstream out;
  out << "# rsd_excluding_rescans=" << num(series.rsd_excluding_rescans) << "\n";
  out << "t_min,counts_10s,is_rescan\n";
  for (std::size_t i = 0; i < series.t_min.size(); ++i) {
    const bool mark = std::find(series.rescan_marks.begin(), series.rescan_marks.end(),
                                series.t_min[i]) != series.rescan_marks.end();
    out << series.t_min[i] << "," << series.counts_10s[i] << "," << (mark ? 1 : 0)
        << "\n";
  }
  return out.str();
}

std::string config_hash(const std::string& serialized) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialized) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_json(const RunManifest& m) {
  const std::string serialized = config_to_ini(m.config);
  nlohmann::json j;
  j["tool_version"] = m.tool_version;
  j["protocol"] = to_string(m.protocol);
  j["config_ini"] = serialized;
  j["config_hash"] = config_hash(serialized);
  j["master_seed"] = m.master_seed;
  j["per_point_seeds"] = m.per_point_seeds;
  j["wall_clock_s"] = m.wall_clock_s;
  return j.dump(2) + "\n";
}

OutputStager::OutputStager(std::string output_dir) : dir_(std::move(output_dir)) {}

void OutputStager::add(const std::string& filename, std::string content) {
  files_.emplace_back(filename, std::move(content));
}

std::vector<std::string> OutputStager::commit() {
  namespace fs = std::filesystem;
  fs::create_directories(dir_);
  std::vector<fs::path> temps;
  std::vector<std::string> finals;
  try {
    for (const auto& [name, content] : files_) {
      const fs::path tmp = fs::path(dir_) / (name + ".tmp");
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
      out << content;
      out.close();
      if (!out) throw std::runtime_error("short write to " + tmp.string());
      temps.push_back(tmp);
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      const fs::path dst = fs::path(dir_) / files_[i].first;
      fs::rename(temps[i], dst);
      finals.push_back(dst.string());
    }
  } catch (...) {
    for (const auto& t : temps) {
      std::error_code ec;
      fs::remove(t, ec);
    }
    throw;
  }
  return finals;
}

}  // namespace swg
