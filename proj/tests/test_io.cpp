#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swgsim/config.hpp"
#include "swgsim/errors.hpp"
#include "swgsim/output.hpp"
#include "swgsim/protocol.hpp"

using namespace swg;
namespace fs = std::filesystem;

namespace {

const std::string kPresetDir = std::string(SWGSIM_SOURCE_DIR) + "/presets";

fs::path temp_dir(const char* tag) {
  const auto dir = fs::temp_directory_path() / (std::string("swgsim_test_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Preset make_preset() {
  Preset p;
  p.detector.temperature_k = 223.0;
  p.detector.pde = 0.10;
  p.detector.dcr = {65.18452117343911, 10.592199273977958};
  p.detector.gate_width = {1.9209256219835212e-10, 1.0824837089880885e-10};
  p.detector.traps = {20.0, 4e-7, 0.17};
  p.has_holdoff = true;
  return p;
}

}  // namespace

TEST_CASE("ini parsing anchors errors to file and line") {
  CHECK_THROWS_WITH_AS(IniFile::parse_string("[a]\nnokey\n", "f.ini"),
                       doctest::Contains("f.ini:2"), config_error);
  CHECK_THROWS_WITH_AS(IniFile::parse_string("x = 1\n", "f.ini"),
                       doctest::Contains("outside any [section]"), config_error);
  const auto ini = IniFile::parse_string("[a]\nx = nope\n", "f.ini");
  CHECK_THROWS_WITH_AS(ini.get_double("a", "x"), doctest::Contains("f.ini:2"),
                       config_error);
}

TEST_CASE("unknown keys are rejected") {
  const auto ini = IniFile::parse_string("[a]\nx = 1\ntypo = 2\n", "f.ini");
  (void)ini.get_double("a", "x");
  CHECK_THROWS_WITH_AS(ini.fail_on_unused(), doctest::Contains("typo"), config_error);
}

TEST_CASE("preset files round-trip through save and load") {
  const auto dir = temp_dir("preset_rt");
  const Preset p = make_preset();
  const auto path = (dir / "preset_223K").string();
  save_preset(p, path);
  const Preset q = load_preset(path);
  CHECK(q.detector.temperature_k == p.detector.temperature_k);
  CHECK(q.detector.pde == p.detector.pde);
  CHECK(q.detector.dcr.dcr0_cps == p.detector.dcr.dcr0_cps);
  CHECK(q.detector.dcr.k_pde == p.detector.dcr.k_pde);
  CHECK(q.detector.gate_width.a_s_per_pde == p.detector.gate_width.a_s_per_pde);
  CHECK(q.detector.gate_width.b_s == p.detector.gate_width.b_s);
  CHECK(q.detector.traps.n_fill == p.detector.traps.n_fill);
  CHECK(q.detector.traps.tau_detrap_s == p.detector.traps.tau_detrap_s);
  CHECK(q.detector.traps.p_trigger == p.detector.traps.p_trigger);
  CHECK(q.clock.gate_freq_hz == p.clock.gate_freq_hz);
  CHECK(q.source.rep_rate_hz == p.source.rep_rate_hz);
  CHECK(q.has_holdoff);
  CHECK(q.holdoff.holdoff_s == p.holdoff.holdoff_s);
  CHECK(q.chain.filter_spec.max_order == p.chain.filter_spec.max_order);
}

TEST_CASE("preset validation names the offending key") {
  const auto dir = temp_dir("preset_bad");
  Preset p = make_preset();
  p.detector.pde = 1.5;
  const auto path = (dir / "bad").string();
  save_preset(p, path);
  CHECK_THROWS_WITH_AS(load_preset(path), doctest::Contains("pde"), config_error);
}

TEST_CASE("run config round-trips exactly") {
  const auto dir = temp_dir("cfg_rt");
  RunConfig c;
  c.protocol = Protocol::afterpulse;
  c.preset_paths = {kPresetDir + "/preset_223K"};
  c.output_dir = (dir / "out").string();
  c.seed = 987654321;
  c.exact_engine = true;
  c.pde = 0.12;
  c.holdoff_ns = 250.0;
  c.seconds = 3.5;
  c.points = 41;
  const auto path = (dir / "run.ini").string();
  save_config(c, path);
  const RunConfig d = load_config(path);
  CHECK(d == c);
}

TEST_CASE("run config validation names key and bound") {
  RunConfig c;
  c.protocol = Protocol::dcr_curve;
  c.preset_paths = {"x"};
  c.pde = 1.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("pde"), config_error);
  c.pde = 0.5;
  c.seconds = -1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("seconds"), config_error);
  RunConfig missing;
  missing.protocol = Protocol::afterpulse;
  CHECK_THROWS_WITH_AS(missing.validate(), doctest::Contains("preset"), config_error);
  CHECK_THROWS_AS(protocol_from_string("frobnicate"), config_error);
}

TEST_CASE("csv emitters follow the documented formats") {
  DelayScanResult scan;
  scan.fwhm_s = 127e-12;
  scan.delays_s = {0.0, 1e-11};
  scan.count_rates_cps = {10.0, 20.0};
  const auto csv = delay_scan_csv(scan);
  CHECK(csv.find("# fwhm_s=1.27e-10\n") == 0);
  CHECK(csv.find("delay_s,count_rate_cps\n") != std::string::npos);

  DelayScanResult empty;
  empty.fwhm_s = 0.0;
  const auto lines = delay_scan_csv(empty);
  CHECK(lines == "# fwhm_s=0\ndelay_s,count_rate_cps\n");

  CHECK(dcr_curve_csv({}) == "pde,dcr_cps,dcr_per_gate,duty_cycle,dcr_normalized_cps\n");

  Histogram h;
  h.bin_width_s = 1.6e-9;
  h.counts = {3, 0, 1};
  const auto hcsv = histogram_csv(h);
  CHECK(hcsv == "bin_start_s,count\n0,3\n1.6e-09,0\n3.2e-09,1\n");
}

TEST_CASE("config hash is stable and content-sensitive") {
  const auto h1 = config_hash("abc");
  CHECK(h1 == config_hash("abc"));
  CHECK(h1 != config_hash("abd"));
  CHECK(h1.size() == 16);
}

TEST_CASE("dcr-curve protocol writes csv plus manifest atomically") {
  const auto dir = temp_dir("proto_dcr");
  RunConfig c;
  c.protocol = Protocol::dcr_curve;
  c.preset_paths = {kPresetDir + "/preset_223K"};
  c.output_dir = (dir / "out").string();
  c.seed = 42;
  c.pde = 0.10;
  c.gates = 50'000'000;
  REQUIRE(run_protocol(c) == 0);
  CHECK(fs::exists(dir / "out" / "dcr_curve.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  const auto manifest = read_file(dir / "out" / "manifest.json");
  CHECK(manifest.find("\"protocol\": \"dcr-curve\"") != std::string::npos);
  CHECK(manifest.find("\"master_seed\": 42") != std::string::npos);
  // No stray temp files after a successful commit.
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    CHECK(e.path().extension() != ".tmp");
  }

  const auto first = read_file(dir / "out" / "dcr_curve.csv");
  REQUIRE(run_protocol(c) == 0);
  CHECK(read_file(dir / "out" / "dcr_curve.csv") == first);  // seeded byte identity
}

TEST_CASE("missing preset file fails with config exit code and no outputs") {
  const auto dir = temp_dir("proto_fail");
  RunConfig c;
  c.protocol = Protocol::dcr_curve;
  c.preset_paths = {(dir / "nope").string()};
  c.output_dir = (dir / "out").string();
  CHECK(run_protocol(c) == 2);
  CHECK((!fs::exists(dir / "out") || fs::is_empty(dir / "out")));
}

TEST_CASE("afterpulse protocol demands a hold-off") {
  const auto dir = temp_dir("proto_ap");
  Preset p = make_preset();
  p.has_holdoff = false;
  const auto preset_path = (dir / "no_holdoff").string();
  save_preset(p, preset_path);
  RunConfig c;
  c.protocol = Protocol::afterpulse;
  c.preset_paths = {preset_path};
  c.output_dir = (dir / "out").string();
  CHECK(run_protocol(c) == 2);  // config error names the missing hold-off
  c.holdoff_ns = 100.0;
  c.seconds = 2.0;
  REQUIRE(run_protocol(c) == 0);
  CHECK(fs::exists(dir / "out" / "histogram.csv"));
  CHECK(fs::exists(dir / "out" / "afterpulse.csv"));
}

TEST_CASE("s21 protocol emits the documented export format") {
  const auto dir = temp_dir("proto_s21");
  RunConfig c;
  c.protocol = Protocol::s21;
  c.preset_paths = {kPresetDir + "/preset_223K"};
  c.output_dir = (dir / "out").string();
  c.points = 101;
  REQUIRE(run_protocol(c) == 0);
  const auto csv = read_file(dir / "out" / "s21.csv");
  CHECK(csv.rfind("freq_hz,mag_db\n", 0) == 0);
  // header + 101 rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);
}

TEST_CASE("event stream export is newline-delimited json") {
  const auto dir = temp_dir("ndjson");
  std::vector<EventRecord> events{{5, 4.2e-9, Cause::dark, true},
                                  {9, 7.4e-9, Cause::afterpulse, false}};
  const auto path = (dir / "events.ndjson").string();
  write_events_ndjson(events, path);
  const auto text = read_file(path);
  CHECK(text ==
        "{\"gate_index\":5,\"t_s\":4.2e-09,\"cause\":\"dark\",\"recorded\":true}\n"
        "{\"gate_index\":9,\"t_s\":7.4e-09,\"cause\":\"afterpulse\",\"recorded\":false}\n");
}
