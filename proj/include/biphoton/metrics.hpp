#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "biphoton/errors.hpp"

namespace biphoton {

// Fidelity lower bound from the two fringe visibilities: the mean of the
// conditional visibility in the H/V basis and the visibility in the A/D
// basis. Equals 1 only for a perfect pair in both bases.
inline double fidelity_bound(double v_hv, double v_ad) {
  if (!(v_hv >= 0.0 && v_hv <= 1.0) || !(v_ad >= 0.0 && v_ad <= 1.0)) {
    throw OutOfRange("visibilities must lie in [0, 1]");
  }
  return (v_hv + v_ad) / 2.0;
}

// Concurrence lower bound from a fidelity lower bound: max(0, 2F - 1).
// Zero at or below the separable threshold F = 1/2.
inline double concurrence_bound(double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw OutOfRange("fidelity must lie in [0, 1]");
  }
  return std::max(0.0, 2.0 * fidelity - 1.0);
}

// Brightness and heralding figures of merit. Heralding is reported in the
// asymmetric form (pairs over the larger singles rate) and the symmetric
// geometric-mean form.
struct RateReport {
  double pair_rate_norm_cps_per_mw = 0.0;
  double spectral_brightness_cps_per_mw_nm = 0.0;
  double heralding = 0.0;
  double heralding_symmetric = 0.0;
};

inline RateReport rate_metrics(double pair_rate_cps, double signal_rate_cps,
                               double idler_rate_cps, double pump_power_mw,
                               double bandwidth_nm) {
  if (!(pump_power_mw > 0.0)) throw NonpositivePower("pump power must be positive");
  if (!(bandwidth_nm > 0.0)) throw OutOfRange("bandwidth must be positive");
  if (pair_rate_cps < 0.0 || signal_rate_cps < 0.0 || idler_rate_cps < 0.0) {
    throw OutOfRange("rates must be non-negative");
  }
  if (pair_rate_cps > std::min(signal_rate_cps, idler_rate_cps)) {
    throw RateInconsistent("pair rate cannot exceed either singles rate");
  }
  RateReport report;
  report.pair_rate_norm_cps_per_mw = pair_rate_cps / pump_power_mw;
  report.spectral_brightness_cps_per_mw_nm =
      report.pair_rate_norm_cps_per_mw / bandwidth_nm;
  const double larger = std::max(signal_rate_cps, idler_rate_cps);
  report.heralding = larger > 0.0 ? pair_rate_cps / larger : 0.0;
  report.heralding_symmetric =
      signal_rate_cps > 0.0 && idler_rate_cps > 0.0
          ? pair_rate_cps / std::sqrt(signal_rate_cps * idler_rate_cps)
          : 0.0;
  return report;
}

// One long-run monitoring sample: a coincidence count plus the two A/D
// fringe-setting visibilities estimated over that interval.
struct StabilitySample {
  double time_s = 0.0;
  double coincidences = 0.0;
  double v_ad_correlated = 0.0;
  double v_ad_anticorrelated = 0.0;
};

struct ColumnStats {
  double mean = 0.0;
  double stddev = 0.0;          // sample standard deviation
  double slope_per_hour = 0.0;  // least-squares linear trend
};

struct StabilityReport {
  ColumnStats coincidences;
  ColumnStats v_ad_correlated;
  ColumnStats v_ad_anticorrelated;
};

// Per-column mean, sample standard deviation, and least-squares drift of a
// time-ordered monitoring series.
inline StabilityReport stability_stats(const std::vector<StabilitySample>& samples) {
  if (samples.size() < 2) throw TooFewSamples("need at least 2 stability samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].time_s > samples[i - 1].time_s)) {
      throw UnsortedStream("stability timestamps must strictly increase");
    }
  }
  const auto n = static_cast<double>(samples.size());
  double mean_t = 0.0;
  for (const auto& s : samples) mean_t += s.time_s;
  mean_t /= n;

  auto column = [&](double StabilitySample::* field) {
    ColumnStats stats;
    for (const auto& s : samples) stats.mean += s.*field;
    stats.mean /= n;
    double ss = 0.0;
    double st_cross = 0.0;
    double st_tt = 0.0;
    for (const auto& s : samples) {
      const double dx = s.*field - stats.mean;
      const double dt = s.time_s - mean_t;
      ss += dx * dx;
      st_cross += dt * dx;
      st_tt += dt * dt;
    }
    stats.stddev = std::sqrt(ss / (n - 1.0));
    stats.slope_per_hour = st_cross / st_tt * 3600.0;
    return stats;
  };
  StabilityReport report;
  report.coincidences = column(&StabilitySample::coincidences);
  report.v_ad_correlated = column(&StabilitySample::v_ad_correlated);
  report.v_ad_anticorrelated = column(&StabilitySample::v_ad_anticorrelated);
  return report;
}

}  // namespace biphoton
