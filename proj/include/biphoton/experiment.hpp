#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biphoton/config.hpp"
#include "biphoton/correlator.hpp"
#include "biphoton/csv.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/metrics.hpp"
#include "biphoton/polarization.hpp"
#include "biphoton/source.hpp"
#include "biphoton/timetags.hpp"

namespace biphoton {

// FNV-1a 64-bit content hash; stable fingerprint for emitted artifacts.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// Headline numbers of one simulated run. Visibilities come in three
// flavors: the noiseless model curve, the raw curve with the accidental
// floor added, and the floor-subtracted curve.
struct RunSummary {
  double post_selection_weight = 0.0;
  double filter_transmission = 1.0;
  double v_hv = 0.0;
  double v_ad = 0.0;
  double v_hv_raw = 0.0;
  double v_ad_raw = 0.0;
  double v_hv_subtracted = 0.0;
  double v_ad_subtracted = 0.0;
  double fidelity_bound_model = 0.0;
  double fidelity_bound_raw = 0.0;
  double fidelity_bound_subtracted = 0.0;
  double concurrence_bound_model = 0.0;
  double concurrence_bound_raw = 0.0;
  double concurrence_bound_subtracted = 0.0;
  double measured_coincidence_cps = 0.0;
  double accidental_cps = 0.0;
  double corrected_pair_cps = 0.0;
  RateReport rates;
  double calibrated_c2_rad_per_nm2 = 0.0;
};

struct RunReport {
  RunSummary summary;
  std::vector<std::string> files;  // emitted basenames, manifest last
  std::string directory;
};

namespace experiment_detail {

// Analyzer-angle scan converted from conditional probabilities to detected
// rates: every coincidence carries the fringe, and uncorrelated background
// adds a flat floor.
inline FringeCurve rate_curve(const FringeCurve& probabilities, double pair_rate_cps,
                              double floor_cps) {
  FringeCurve out;
  out.reserve(probabilities.size());
  for (const auto& p : probabilities) {
    out.push_back({p.theta2_rad, 2.0 * pair_rate_cps * p.probability + floor_cps});
  }
  return out;
}

template <typename Fn>
auto with_provenance(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const IoFailure& e) {
    throw IoFailure(std::string(stage) + ": " + e.what());
  } catch (const ConfigInvalid& e) {
    throw ConfigInvalid(std::string(stage) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(stage) + ": " + e.what());
  }
}

}  // namespace experiment_detail

// Synthetic long-run monitoring series: per block, the coincidence rate is
// measured at the fringe maximum and minimum of the A/D scan (Poisson
// statistics via the tag-stream generator) and a visibility is estimated
// from accidental-corrected rates. Two independent estimates fill the two
// visibility columns.
inline std::vector<StabilitySample> stability_series(const RunConfig& cfg,
                                                     double v_true) {
  std::vector<StabilitySample> series;
  const double rate_sum = cfg.detection.pair_rate_cps;
  if (cfg.stability.blocks < 2 || rate_sum <= 0.0) return series;
  const double rate_hi = rate_sum * (1.0 + v_true) / 2.0;
  const double rate_lo = rate_sum * (1.0 - v_true) / 2.0;

  auto measure = [&](double pair_rate, std::uint64_t seed) {
    DetectionConfig d;
    d.coincidence_window_ns = cfg.detection.coincidence_window_ns;
    d.detector_jitter_ps = cfg.detection.detector_jitter_ps;
    d.pair_rate_cps = pair_rate;
    d.singles_rate_signal_cps = pair_rate;
    d.singles_rate_idler_cps = pair_rate;
    d.duration_s = cfg.stability.block_s;
    d.seed = seed;
    auto res = correlate_window(generate_timetags(d), d.coincidence_window_ns);
    const double measured =
        static_cast<double>(res.coincidences) / cfg.stability.block_s;
    return subtract_accidentals(
        measured, accidental_rate_cps(pair_rate, pair_rate, d.coincidence_window_ns));
  };

  for (int k = 0; k < cfg.stability.blocks; ++k) {
    const std::uint64_t base = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(k);
    const double hi1 = measure(rate_hi, base);
    const double lo1 = measure(rate_lo, base + 1);
    const double hi2 = measure(rate_hi, base + 2);
    const double lo2 = measure(rate_lo, base + 3);
    StabilitySample s;
    s.time_s = cfg.stability.block_s * k;
    s.coincidences = (hi1 + lo1) * cfg.stability.block_s;
    s.v_ad_correlated = hi1 + lo1 > 0.0 ? (hi1 - lo1) / (hi1 + lo1) : 0.0;
    s.v_ad_anticorrelated = hi2 + lo2 > 0.0 ? (hi2 - lo2) / (hi2 + lo2) : 0.0;
    series.push_back(s);
  }
  return series;
}

// Runs the full pipeline for one configuration and emits every artifact
// into out_dir: canonical config, H/V and A/D fringe scans, the synthesized
// tag stream with its delay histogram, optional stability series, the
// metrics table (CSV and text), and a manifest with a checksum of every
// file. Identical config and seed give bit-identical files.
inline RunReport run_experiment(const RunConfig& run, const std::string& out_dir) {
  using experiment_detail::rate_curve;
  using experiment_detail::with_provenance;
  validate(run);
  RunConfig cfg = run;
  cfg.detection.seed = cfg.seed;  // one seed drives every stochastic output

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoFailure("cannot create output directory: " + out_dir);

  RunReport report;
  report.directory = out_dir;
  RunSummary& s = report.summary;
  s.calibrated_c2_rad_per_nm2 = cfg.source.phase_c2_rad_per_nm2;

  // Source state, post-selected on one photon per output port.
  SagnacState sag = with_provenance("source", [&] {
    SourceConfig scfg = build_source_config(cfg.source);
    if (cfg.source.filter_bandwidth_nm > 0.0) {
      FilteredConfig filtered = rect_filtered(scfg, cfg.source.filter_bandwidth_nm);
      s.filter_transmission = filtered.transmission;
      scfg = filtered.config;
    }
    return sagnac_state(scfg);
  });
  s.post_selection_weight = sag.weight;

  // Polarizer scans in both bases, plus rate-space variants.
  FringeCurve curve_hv;
  FringeCurve curve_ad;
  with_provenance("scan", [&] {
    curve_hv = fringe_scan(sag.state, 0.0, cfg.scan.steps);
    curve_ad = fringe_scan(sag.state, 0.25 * 3.141592653589793, cfg.scan.steps);
    s.v_hv = visibility(curve_hv);
    s.v_ad = visibility(curve_ad);
    s.accidental_cps = accidental_rate_cps(cfg.detection.singles_rate_signal_cps,
                                           cfg.detection.singles_rate_idler_cps,
                                           cfg.detection.coincidence_window_ns);
    const double pairs = cfg.detection.pair_rate_cps;
    if (pairs > 0.0) {
      auto raw_hv = rate_curve(curve_hv, pairs, s.accidental_cps);
      auto raw_ad = rate_curve(curve_ad, pairs, s.accidental_cps);
      s.v_hv_raw = visibility(raw_hv);
      s.v_ad_raw = visibility(raw_ad);
      s.v_hv_subtracted = visibility(rate_curve(curve_hv, pairs, 0.0));
      s.v_ad_subtracted = visibility(rate_curve(curve_ad, pairs, 0.0));
    }
    s.fidelity_bound_model = fidelity_bound(s.v_hv, s.v_ad);
    s.fidelity_bound_raw = fidelity_bound(s.v_hv_raw, s.v_ad_raw);
    s.fidelity_bound_subtracted = fidelity_bound(s.v_hv_subtracted, s.v_ad_subtracted);
    s.concurrence_bound_model = concurrence_bound(s.fidelity_bound_model);
    s.concurrence_bound_raw = concurrence_bound(s.fidelity_bound_raw);
    s.concurrence_bound_subtracted = concurrence_bound(s.fidelity_bound_subtracted);
    return 0;
  });

  // Detector-side synthesis and correlation.
  TagStream tags;
  CoincidenceResult corr;
  with_provenance("detection", [&] {
    tags = generate_timetags(cfg.detection);
    corr = correlate_window(tags, cfg.detection.coincidence_window_ns,
                            cfg.scan.histogram_bin_ps);
    if (cfg.detection.duration_s > 0.0) {
      s.measured_coincidence_cps =
          static_cast<double>(corr.coincidences) / cfg.detection.duration_s;
    }
    s.corrected_pair_cps = subtract_accidentals(s.measured_coincidence_cps, s.accidental_cps);
    return 0;
  });
  with_provenance("metrics", [&] {
    const double corrected = std::min(
        s.corrected_pair_cps, std::min(cfg.detection.singles_rate_signal_cps,
                                       cfg.detection.singles_rate_idler_cps));
    s.rates = rate_metrics(corrected, cfg.detection.singles_rate_signal_cps,
                           cfg.detection.singles_rate_idler_cps,
                           cfg.metrics.pump_power_mw, cfg.metrics.analysis_bandwidth_nm);
    return 0;
  });

  const auto series = stability_series(cfg, s.v_ad_subtracted);

  // Artifact emission; manifest references every file by checksum.
  with_provenance("artifacts", [&] {
    const std::string config_text = serialize_run_config(cfg);
    nlohmann::ordered_json manifest;
    manifest["artifact"] = "biphoton run";
    manifest["config_fnv1a64"] = fnv1a64_hex(config_text);
    manifest["calibrated_c2_rad_per_nm2"] = s.calibrated_c2_rad_per_nm2;

    nlohmann::ordered_json summary;
    summary["post_selection_weight"] = s.post_selection_weight;
    summary["filter_transmission"] = s.filter_transmission;
    summary["v_hv"] = s.v_hv;
    summary["v_ad"] = s.v_ad;
    summary["v_hv_raw"] = s.v_hv_raw;
    summary["v_ad_raw"] = s.v_ad_raw;
    summary["v_hv_subtracted"] = s.v_hv_subtracted;
    summary["v_ad_subtracted"] = s.v_ad_subtracted;
    summary["fidelity_bound_model"] = s.fidelity_bound_model;
    summary["fidelity_bound_raw"] = s.fidelity_bound_raw;
    summary["fidelity_bound_subtracted"] = s.fidelity_bound_subtracted;
    summary["concurrence_bound_model"] = s.concurrence_bound_model;
    summary["concurrence_bound_raw"] = s.concurrence_bound_raw;
    summary["concurrence_bound_subtracted"] = s.concurrence_bound_subtracted;
    summary["measured_coincidence_cps"] = s.measured_coincidence_cps;
    summary["accidental_cps"] = s.accidental_cps;
    summary["corrected_pair_cps"] = s.corrected_pair_cps;
    summary["pair_rate_norm_cps_per_mw"] = s.rates.pair_rate_norm_cps_per_mw;
    summary["spectral_brightness_cps_per_mw_nm"] = s.rates.spectral_brightness_cps_per_mw_nm;
    summary["heralding"] = s.rates.heralding;
    summary["heralding_symmetric"] = s.rates.heralding_symmetric;
    manifest["summary"] = summary;

    std::vector<MetricRow> rows;
    for (const auto& [key, value] : summary.items()) {
      rows.push_back({key, value.get<double>()});
    }
    rows.push_back({"calibrated_c2_rad_per_nm2", s.calibrated_c2_rad_per_nm2});

    auto emit = [&](const std::string& name, const std::string& body) {
      write_text_file((std::filesystem::path(out_dir) / name).string(), body);
      manifest["files"][name] = {{"bytes", body.size()}, {"fnv1a64", fnv1a64_hex(body)}};
      report.files.push_back(name);
    };
    emit("config.toml", config_text);
    emit("fringe_hv.csv", fringe_csv(curve_hv));
    emit("fringe_ad.csv", fringe_csv(curve_ad));
    {
      const std::string tag_path = (std::filesystem::path(out_dir) / "tags.ttag").string();
      write_ttag(tag_path, tags);
      const std::string body = read_text_file(tag_path);
      manifest["files"]["tags.ttag"] = {{"bytes", body.size()},
                                        {"fnv1a64", fnv1a64_hex(body)}};
      report.files.push_back("tags.ttag");
    }
    emit("delay_histogram.csv", histogram_csv(corr.histogram));
    if (!series.empty()) emit("stability.csv", stability_csv(series));
    emit("metrics.csv", metrics_csv(rows));
    emit("metrics.txt", metrics_table(rows));

    const std::string manifest_path =
        (std::filesystem::path(out_dir) / "manifest.json").string();
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    report.files.push_back("manifest.json");
    return 0;
  });
  return report;
}

// Finds the quadratic spectral-phase coefficient that brings the A/D
// visibility of the unfiltered source to the target: exponential bracketing
// from zero followed by bisection, to within 0.005 in visibility. Pure
// arithmetic, so the result is deterministic.
inline double calibrate_dispersion(double target_v_ad, const RunConfig& run) {
  if (!(target_v_ad > 0.0 && target_v_ad <= 1.0)) {
    throw OutOfRange("calibration target must lie in (0, 1]");
  }
  validate(run);
  const double tol = 0.005;

  auto v_of = [&](double c2) {
    SourceSpec spec = run.source;
    spec.phase_c2_rad_per_nm2 = c2;
    spec.filter_bandwidth_nm = 0.0;
    auto sag = sagnac_state(build_source_config(spec));
    return visibility(fringe_scan(sag.state, 0.25 * 3.141592653589793, run.scan.steps));
  };

  const double ceiling = v_of(0.0);
  if (std::abs(ceiling - target_v_ad) <= tol) return 0.0;
  if (target_v_ad > ceiling) {
    throw Unreachable("target visibility exceeds the dispersion-free value");
  }
  double lo = 0.0;
  double hi = 1e-4;
  while (v_of(hi) > target_v_ad) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      throw Unreachable("target visibility below the reachable floor");
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = v_of(mid);
    if (std::abs(v - target_v_ad) <= tol) return mid;
    (v > target_v_ad ? lo : hi) = mid;
  }
  throw Unreachable("bisection did not converge to the target visibility");
}

struct PaperReport {
  double calibrated_c2_rad_per_nm2 = 0.0;
  RunSummary broadband;
  RunSummary narrowband;
};

// Broadband run configuration used by the reproduction pipeline: 20 nm FWHM
// Gaussian pairs on a 41-bin grid, detector numbers scaled from the
// narrowband working point by the bandwidth ratio of the source brightness.
inline RunConfig paper_broadband_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.source.envelope = "gaussian";
  cfg.source.envelope_bins = 41;
  cfg.source.envelope_span_nm = 40.0;
  cfg.source.center_wavelength_nm = 810.0;
  cfg.source.envelope_fwhm_nm = 20.0;
  cfg.detection.pair_rate_cps = 107000.0;
  cfg.detection.singles_rate_signal_cps = 575125.0;
  cfg.detection.singles_rate_idler_cps = 575125.0;
  cfg.detection.duration_s = 5.0;
  cfg.metrics.pump_power_mw = 0.1;
  cfg.metrics.analysis_bandwidth_nm = 20.0;
  return cfg;
}

// Narrowband variant: the same dispersive source behind a 3 nm passband,
// at the filtered working-point rates, with a short monitoring series.
inline RunConfig paper_narrowband_config(std::uint64_t seed) {
  RunConfig cfg = paper_broadband_config(seed);
  cfg.source.filter_bandwidth_nm = 3.0;
  cfg.detection.pair_rate_cps = 16000.0;
  cfg.detection.singles_rate_signal_cps = 86000.0;
  cfg.detection.singles_rate_idler_cps = 86000.0;
  cfg.metrics.analysis_bandwidth_nm = 3.0;
  cfg.stability.blocks = 10;
  cfg.stability.block_s = 2.0;
  return cfg;
}

// End-to-end reproduction: calibrate the quadratic phase so the broadband
// A/D visibility hits 0.78, then emit the broadband run and the 3 nm
// filtered run side by side with a combined summary.
inline PaperReport reproduce_paper(const std::string& out_dir, std::uint64_t seed) {
  RunConfig broadband = paper_broadband_config(seed);
  PaperReport report;
  report.calibrated_c2_rad_per_nm2 = calibrate_dispersion(0.78, broadband);
  broadband.source.phase_c2_rad_per_nm2 = report.calibrated_c2_rad_per_nm2;

  RunConfig narrowband = paper_narrowband_config(seed);
  narrowband.source.phase_c2_rad_per_nm2 = report.calibrated_c2_rad_per_nm2;

  const auto bb_dir = (std::filesystem::path(out_dir) / "broadband").string();
  const auto nb_dir = (std::filesystem::path(out_dir) / "narrowband").string();
  report.broadband = run_experiment(broadband, bb_dir).summary;
  report.narrowband = run_experiment(narrowband, nb_dir).summary;

  nlohmann::ordered_json top;
  top["artifact"] = "biphoton reproduction";
  top["calibrated_c2_rad_per_nm2"] = report.calibrated_c2_rad_per_nm2;
  top["broadband"] = {{"v_ad", report.broadband.v_ad},
                      {"fidelity_bound_model", report.broadband.fidelity_bound_model},
                      {"directory", "broadband"}};
  top["narrowband"] = {{"v_ad", report.narrowband.v_ad},
                       {"filter_transmission", report.narrowband.filter_transmission},
                       {"fidelity_bound_model", report.narrowband.fidelity_bound_model},
                       {"directory", "narrowband"}};
  write_text_file((std::filesystem::path(out_dir) / "summary.json").string(),
                  top.dump(2) + "\n");
  return report;
}

}  // namespace biphoton
