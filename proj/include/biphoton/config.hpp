#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "biphoton/csv.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/source.hpp"
#include "biphoton/timetags.hpp"

namespace biphoton {

// Scalar description of the source, mirroring SourceConfig but with the
// envelope given symbolically so it can live in a text file.
struct SourceSpec {
  double phi_rad = 3.141592653589793;
  std::string envelope = "single";  // "single" or "gaussian"
  int envelope_bins = 41;
  double envelope_span_nm = 40.0;
  double center_wavelength_nm = 810.0;
  double envelope_fwhm_nm = 20.0;
  double cw_ccw_delay_fs = 0.0;
  double crystal_delay_fs = 0.0;
  double coherence_time_fs = coherence_time_from_bandwidth_fs(20.0, 810.0);
  double phase_c0_rad = 0.0;
  double phase_c1_rad_per_nm = 0.0;
  double phase_c2_rad_per_nm2 = 0.0;
  double filter_bandwidth_nm = 0.0;  // 0 disables the passband filter
};

struct ScanConfig {
  int steps = 36;
  std::int64_t histogram_bin_ps = 50;
};

struct MetricsConfig {
  double pump_power_mw = 0.1;
  double analysis_bandwidth_nm = 3.0;
};

struct StabilityConfig {
  int blocks = 0;  // 0 disables the monitoring series
  double block_s = 60.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  SourceSpec source;
  DetectionConfig detection;
  ScanConfig scan;
  MetricsConfig metrics;
  StabilityConfig stability;
};

inline SpectralEnvelope build_envelope(const SourceSpec& spec) {
  if (spec.envelope == "single") {
    return SpectralEnvelope::single_bin(spec.center_wavelength_nm);
  }
  if (spec.envelope == "gaussian") {
    return SpectralEnvelope::gaussian(spec.envelope_bins, spec.envelope_span_nm,
                                      spec.center_wavelength_nm, spec.envelope_fwhm_nm);
  }
  throw ConfigInvalid("unknown envelope kind: " + spec.envelope);
}

inline SourceConfig build_source_config(const SourceSpec& spec) {
  SourceConfig cfg;
  cfg.phi_rad = spec.phi_rad;
  cfg.envelope_c1 = build_envelope(spec);
  cfg.envelope_c2 = cfg.envelope_c1;
  cfg.cw_ccw_delay_fs = spec.cw_ccw_delay_fs;
  cfg.crystal_delay_fs = spec.crystal_delay_fs;
  cfg.coherence_time_fs = spec.coherence_time_fs;
  cfg.phase_profile_coeffs = std::array<double, 3>{
      spec.phase_c0_rad, spec.phase_c1_rad_per_nm, spec.phase_c2_rad_per_nm2};
  return cfg;
}

inline void validate(const RunConfig& cfg) {
  try {
    build_envelope(cfg.source);
    if (!(cfg.source.coherence_time_fs > 0.0)) {
      throw ConfigInvalid("coherence_time_fs must be positive");
    }
    if (cfg.source.filter_bandwidth_nm < 0.0) {
      throw ConfigInvalid("filter_bandwidth_nm must be non-negative");
    }
    validate(cfg.detection);
    if (cfg.scan.steps < 8) throw ConfigInvalid("scan steps must be at least 8");
    if (cfg.scan.histogram_bin_ps <= 0) {
      throw ConfigInvalid("histogram_bin_ps must be positive");
    }
    if (!(cfg.metrics.pump_power_mw > 0.0)) {
      throw ConfigInvalid("pump_power_mw must be positive");
    }
    if (!(cfg.metrics.analysis_bandwidth_nm > 0.0)) {
      throw ConfigInvalid("analysis_bandwidth_nm must be positive");
    }
    if (cfg.stability.blocks < 0) throw ConfigInvalid("stability blocks must be >= 0");
    if (!(cfg.stability.block_s > 0.0)) {
      throw ConfigInvalid("stability block_s must be positive");
    }
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const Error& e) {
    // Domain errors raised while building pieces of an invalid config are
    // configuration errors from the caller's point of view.
    throw ConfigInvalid(e.what());
  }
}

namespace config_detail {

using Section = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> sections;
  std::string current;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigInvalid("line " + std::to_string(line_no) + ": malformed section header");
      }
      current = trim(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigInvalid("line " + std::to_string(line_no) + ": empty key or value");
    }
    if (!sections[current].emplace(key, value).second) {
      throw ConfigInvalid("line " + std::to_string(line_no) + ": duplicate key " + key);
    }
  }
  return sections;
}

// Typed extraction; each take_* consumes the key so leftovers can be
// reported as unknown.
inline double take_double(Section& s, const std::string& key, double fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0') {
    throw ConfigInvalid("key " + key + ": not a number: " + it->second);
  }
  s.erase(it);
  return v;
}

inline std::int64_t take_int(Section& s, const std::string& key, std::int64_t fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0') {
    throw ConfigInvalid("key " + key + ": not an integer: " + it->second);
  }
  s.erase(it);
  return v;
}

inline std::uint64_t take_uint(Section& s, const std::string& key, std::uint64_t fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0' || it->second.front() == '-') {
    throw ConfigInvalid("key " + key + ": not an unsigned integer: " + it->second);
  }
  s.erase(it);
  return v;
}

inline std::string take_string(Section& s, const std::string& key, std::string fallback) {
  const auto it = s.find(key);
  if (it == s.end()) return fallback;
  const std::string& raw = it->second;
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
    throw ConfigInvalid("key " + key + ": expected a quoted string, got " + raw);
  }
  std::string v = raw.substr(1, raw.size() - 2);
  s.erase(it);
  return v;
}

inline void expect_empty(const std::map<std::string, Section>& sections,
                         const std::string& known_sections) {
  for (const auto& [name, body] : sections) {
    if (known_sections.find("|" + name + "|") == std::string::npos) {
      throw ConfigInvalid("unknown section: [" + name + "]");
    }
    if (!body.empty()) {
      throw ConfigInvalid("unknown key in [" + name + "]: " + body.begin()->first);
    }
  }
}

}  // namespace config_detail

inline RunConfig parse_run_config(const std::string& text) {
  using namespace config_detail;
  auto sections = parse_sections(text);
  RunConfig cfg;

  auto& top = sections[""];
  cfg.seed = take_uint(top, "seed", cfg.seed);

  auto& src = sections["source"];
  cfg.source.phi_rad = take_double(src, "phi_rad", cfg.source.phi_rad);
  cfg.source.envelope = take_string(src, "envelope", cfg.source.envelope);
  cfg.source.envelope_bins =
      static_cast<int>(take_int(src, "envelope_bins", cfg.source.envelope_bins));
  cfg.source.envelope_span_nm =
      take_double(src, "envelope_span_nm", cfg.source.envelope_span_nm);
  cfg.source.center_wavelength_nm =
      take_double(src, "center_wavelength_nm", cfg.source.center_wavelength_nm);
  cfg.source.envelope_fwhm_nm =
      take_double(src, "envelope_fwhm_nm", cfg.source.envelope_fwhm_nm);
  cfg.source.cw_ccw_delay_fs =
      take_double(src, "cw_ccw_delay_fs", cfg.source.cw_ccw_delay_fs);
  cfg.source.crystal_delay_fs =
      take_double(src, "crystal_delay_fs", cfg.source.crystal_delay_fs);
  cfg.source.coherence_time_fs =
      take_double(src, "coherence_time_fs", cfg.source.coherence_time_fs);
  cfg.source.phase_c0_rad = take_double(src, "phase_c0_rad", cfg.source.phase_c0_rad);
  cfg.source.phase_c1_rad_per_nm =
      take_double(src, "phase_c1_rad_per_nm", cfg.source.phase_c1_rad_per_nm);
  cfg.source.phase_c2_rad_per_nm2 =
      take_double(src, "phase_c2_rad_per_nm2", cfg.source.phase_c2_rad_per_nm2);
  cfg.source.filter_bandwidth_nm =
      take_double(src, "filter_bandwidth_nm", cfg.source.filter_bandwidth_nm);

  auto& det = sections["detection"];
  cfg.detection.coincidence_window_ns =
      take_double(det, "coincidence_window_ns", cfg.detection.coincidence_window_ns);
  cfg.detection.singles_rate_signal_cps =
      take_double(det, "singles_rate_signal_cps", cfg.detection.singles_rate_signal_cps);
  cfg.detection.singles_rate_idler_cps =
      take_double(det, "singles_rate_idler_cps", cfg.detection.singles_rate_idler_cps);
  cfg.detection.pair_rate_cps =
      take_double(det, "pair_rate_cps", cfg.detection.pair_rate_cps);
  cfg.detection.detector_jitter_ps =
      take_double(det, "detector_jitter_ps", cfg.detection.detector_jitter_ps);
  cfg.detection.duration_s = take_double(det, "duration_s", cfg.detection.duration_s);
  cfg.detection.seed = cfg.seed;

  auto& scan = sections["scan"];
  cfg.scan.steps = static_cast<int>(take_int(scan, "steps", cfg.scan.steps));
  cfg.scan.histogram_bin_ps =
      take_int(scan, "histogram_bin_ps", cfg.scan.histogram_bin_ps);

  auto& met = sections["metrics"];
  cfg.metrics.pump_power_mw =
      take_double(met, "pump_power_mw", cfg.metrics.pump_power_mw);
  cfg.metrics.analysis_bandwidth_nm =
      take_double(met, "analysis_bandwidth_nm", cfg.metrics.analysis_bandwidth_nm);

  auto& stab = sections["stability"];
  cfg.stability.blocks = static_cast<int>(take_int(stab, "blocks", cfg.stability.blocks));
  cfg.stability.block_s = take_double(stab, "block_s", cfg.stability.block_s);

  expect_empty(sections, "||source|detection|scan|metrics|stability|");
  validate(cfg);
  return cfg;
}

// Canonical text form: every key, fixed order, shortest round-trip numbers.
// parse(serialize(cfg)) reproduces cfg exactly.
inline std::string serialize_run_config(const RunConfig& cfg) {
  std::string out;
  auto kv = [&](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  kv("seed", std::to_string(cfg.seed));
  out += "\n[source]\n";
  kv("phi_rad", format_double(cfg.source.phi_rad));
  kv("envelope", "\"" + cfg.source.envelope + "\"");
  kv("envelope_bins", std::to_string(cfg.source.envelope_bins));
  kv("envelope_span_nm", format_double(cfg.source.envelope_span_nm));
  kv("center_wavelength_nm", format_double(cfg.source.center_wavelength_nm));
  kv("envelope_fwhm_nm", format_double(cfg.source.envelope_fwhm_nm));
  kv("cw_ccw_delay_fs", format_double(cfg.source.cw_ccw_delay_fs));
  kv("crystal_delay_fs", format_double(cfg.source.crystal_delay_fs));
  kv("coherence_time_fs", format_double(cfg.source.coherence_time_fs));
  kv("phase_c0_rad", format_double(cfg.source.phase_c0_rad));
  kv("phase_c1_rad_per_nm", format_double(cfg.source.phase_c1_rad_per_nm));
  kv("phase_c2_rad_per_nm2", format_double(cfg.source.phase_c2_rad_per_nm2));
  kv("filter_bandwidth_nm", format_double(cfg.source.filter_bandwidth_nm));
  out += "\n[detection]\n";
  kv("coincidence_window_ns", format_double(cfg.detection.coincidence_window_ns));
  kv("singles_rate_signal_cps", format_double(cfg.detection.singles_rate_signal_cps));
  kv("singles_rate_idler_cps", format_double(cfg.detection.singles_rate_idler_cps));
  kv("pair_rate_cps", format_double(cfg.detection.pair_rate_cps));
  kv("detector_jitter_ps", format_double(cfg.detection.detector_jitter_ps));
  kv("duration_s", format_double(cfg.detection.duration_s));
  out += "\n[scan]\n";
  kv("steps", std::to_string(cfg.scan.steps));
  kv("histogram_bin_ps", std::to_string(cfg.scan.histogram_bin_ps));
  out += "\n[metrics]\n";
  kv("pump_power_mw", format_double(cfg.metrics.pump_power_mw));
  kv("analysis_bandwidth_nm", format_double(cfg.metrics.analysis_bandwidth_nm));
  out += "\n[stability]\n";
  kv("blocks", std::to_string(cfg.stability.blocks));
  kv("block_s", format_double(cfg.stability.block_s));
  return out;
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

}  // namespace biphoton
