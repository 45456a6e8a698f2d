#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "biphoton/correlator.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/metrics.hpp"
#include "biphoton/polarization.hpp"

namespace biphoton {

// Shortest decimal string that parses back to exactly the same double.
// Deterministic, locale-independent, so emitted files are bit-stable.
inline std::string format_double(double x) {
  if (x == static_cast<double>(static_cast<long long>(x)) &&
      (x != 0.0 || !std::signbit(x)) && std::abs(x) < 1e15) {
    return std::to_string(static_cast<long long>(x));
  }
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open for writing: " + path);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw IoFailure("failed writing: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open for reading: " + path);
  std::string body((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  if (f.bad()) throw IoFailure("failed reading: " + path);
  return body;
}

inline std::string fringe_csv(const FringeCurve& curve) {
  std::string out = "theta_rad,probability\n";
  for (const auto& p : curve) {
    out += format_double(p.theta2_rad);
    out += ',';
    out += format_double(p.probability);
    out += '\n';
  }
  return out;
}

inline std::string histogram_csv(const DelayHistogram& hist) {
  std::string out = "delay_ps,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out += std::to_string(hist.left_edge_ps(i));
    out += ',';
    out += std::to_string(hist.counts[i]);
    out += '\n';
  }
  return out;
}

inline std::string stability_csv(const std::vector<StabilitySample>& samples) {
  std::string out = "time_s,coincidences,v_ad_correlated,v_ad_anticorrelated\n";
  for (const auto& s : samples) {
    out += format_double(s.time_s);
    out += ',';
    out += format_double(s.coincidences);
    out += ',';
    out += format_double(s.v_ad_correlated);
    out += ',';
    out += format_double(s.v_ad_anticorrelated);
    out += '\n';
  }
  return out;
}

// Name/value metric rows rendered as CSV and as an aligned text table.
struct MetricRow {
  std::string name;
  double value = 0.0;
};

inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "metric,value\n";
  for (const auto& r : rows) {
    out += r.name;
    out += ',';
    out += format_double(r.value);
    out += '\n';
  }
  return out;
}

inline std::string metrics_table(const std::vector<MetricRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out;
  for (const auto& r : rows) {
    out += r.name;
    out.append(width - r.name.size() + 2, ' ');
    out += format_double(r.value);
    out += '\n';
  }
  return out;
}

}  // namespace biphoton
