#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "swgsim/chain.hpp"
#include "swgsim/config.hpp"
#include "swgsim/experiments.hpp"
#include "swgsim/waveform.hpp"

namespace swg {

// CSV texts, deterministic bytes for identical inputs (12 significant digits).
std::string s21_csv(const S21Curve& curve);
std::string trace_csv(const WaveformTrace& trace);
std::string trace_meta_json(const ChainConfig& chain, std::uint64_t seed);
std::string delay_scan_csv(const DelayScanResult& result);
std::string dcr_curve_csv(const std::vector<DcrPdePoint>& points);
std::string histogram_csv(const Histogram& hist);
std::string afterpulse_csv(const AfterpulseResult& result);
std::string pap_curve_csv(const std::vector<PapPoint>& points);
std::string stability_csv(const StabilitySeries& series);

// FNV-1a hash of a serialized config, hex string.
std::string config_hash(const std::string& serialized);

struct RunManifest {
  std::string tool_version;
  Protocol protocol = Protocol::dcr_curve;
  RunConfig config;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> per_point_seeds;
  double wall_clock_s = 0.0;
};

std::string manifest_json(const RunManifest& manifest);

// Collects (relative path -> content) pairs and commits them all by writing
// to temp files and renaming, so a failed protocol leaves nothing behind.
class OutputStager {
 public:
  explicit OutputStager(std::string output_dir);
  void add(const std::string& filename, std::string content);
  std::vector<std::string> commit();  // returns final paths

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace swg
