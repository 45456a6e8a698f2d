// Command-line front end: simulate the source, synthesize and correlate
// detector tag streams, compute figures of merit, and run the full
// calibrated reproduction pipeline.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "biphoton/config.hpp"
#include "biphoton/correlator.hpp"
#include "biphoton/csv.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/experiment.hpp"
#include "biphoton/metrics.hpp"
#include "biphoton/polarization.hpp"
#include "biphoton/source.hpp"
#include "biphoton/timetags.hpp"

namespace {

using namespace biphoton;

void print_kv(const char* key, double value) {
  std::printf("%-34s %s\n", key, format_double(value).c_str());
}

void print_summary(const RunSummary& s) {
  print_kv("post_selection_weight", s.post_selection_weight);
  print_kv("filter_transmission", s.filter_transmission);
  print_kv("v_hv", s.v_hv);
  print_kv("v_ad", s.v_ad);
  print_kv("v_hv_raw", s.v_hv_raw);
  print_kv("v_ad_raw", s.v_ad_raw);
  print_kv("v_hv_subtracted", s.v_hv_subtracted);
  print_kv("v_ad_subtracted", s.v_ad_subtracted);
  print_kv("fidelity_bound_model", s.fidelity_bound_model);
  print_kv("fidelity_bound_raw", s.fidelity_bound_raw);
  print_kv("fidelity_bound_subtracted", s.fidelity_bound_subtracted);
  print_kv("concurrence_bound_model", s.concurrence_bound_model);
  print_kv("measured_coincidence_cps", s.measured_coincidence_cps);
  print_kv("accidental_cps", s.accidental_cps);
  print_kv("corrected_pair_cps", s.corrected_pair_cps);
  print_kv("pair_rate_norm_cps_per_mw", s.rates.pair_rate_norm_cps_per_mw);
  print_kv("spectral_brightness_cps_per_mw_nm", s.rates.spectral_brightness_cps_per_mw_nm);
  print_kv("heralding", s.rates.heralding);
  print_kv("heralding_symmetric", s.rates.heralding_symmetric);
  print_kv("calibrated_c2_rad_per_nm2", s.calibrated_c2_rad_per_nm2);
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  double duration_s = -1.0;
  double window_ns = -1.0;
  double bandwidth_nm = -1.0;
  bool seed_set = false;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config_path.empty() ? RunConfig{} : load_run_config(flags.config_path);
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.duration_s >= 0.0) cfg.detection.duration_s = flags.duration_s;
  if (flags.window_ns > 0.0) cfg.detection.coincidence_window_ns = flags.window_ns;
  if (flags.bandwidth_nm >= 0.0) {
    cfg.source.filter_bandwidth_nm = flags.bandwidth_nm;
    if (flags.bandwidth_nm > 0.0) cfg.metrics.analysis_bandwidth_nm = flags.bandwidth_nm;
  }
  cfg.detection.seed = cfg.seed;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biphoton: polarization-entangled pair source simulator and analysis toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", flags.config_path, "run configuration file (TOML-style)");
    cmd->add_option("--seed", flags.seed, "top-level RNG seed")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--duration-s", flags.duration_s, "tag stream duration in seconds");
    cmd->add_option("--window-ns", flags.window_ns, "coincidence window in nanoseconds");
    cmd->add_option("--bandwidth-nm", flags.bandwidth_nm,
                    "passband filter width in nanometers (0 disables)");
    if (with_out) cmd->add_option("--out", flags.out_dir, "output directory");
  };

  auto* simulate = app.add_subcommand(
      "simulate", "run the source model and emit fringe scans, tags, and metrics");
  flags.out_dir = "out/simulate";
  add_common(simulate, true);
  simulate->callback([&] {
    const auto report = run_experiment(resolve_config(flags), flags.out_dir);
    std::printf("wrote %zu files to %s\n", report.files.size(), report.directory.c_str());
    print_summary(report.summary);
  });

  auto* timetags_cmd =
      app.add_subcommand("timetags", "synthesize a detector tag stream (TTAG binary)");
  std::string tag_out = "tags.ttag";
  add_common(timetags_cmd, false);
  timetags_cmd->add_option("--out", tag_out, "output TTAG file");
  timetags_cmd->callback([&] {
    const auto cfg = resolve_config(flags);
    const auto stream = generate_timetags(cfg.detection);
    write_ttag(tag_out, stream);
    std::printf("wrote %zu tags (%s s) to %s\n", stream.tags.size(),
                format_double(stream.duration_s).c_str(), tag_out.c_str());
  });

  auto* correlate_cmd =
      app.add_subcommand("correlate", "count coincidences in a TTAG tag stream");
  std::string corr_in;
  std::string corr_hist_out;
  double corr_window_ns = 3.0;
  std::int64_t corr_bin_ps = 50;
  correlate_cmd->add_option("tags", corr_in, "input TTAG file")->required();
  correlate_cmd->add_option("--window-ns", corr_window_ns, "coincidence window in nanoseconds");
  correlate_cmd->add_option("--histogram-bin-ps", corr_bin_ps, "delay histogram bin width");
  correlate_cmd->add_option("--out", corr_hist_out, "write delay histogram CSV here");
  correlate_cmd->callback([&] {
    const auto stream = read_ttag(corr_in);
    const auto result = correlate_window(stream, corr_window_ns, corr_bin_ps);
    print_kv("duration_s", stream.duration_s);
    print_kv("signal_tags", static_cast<double>(result.signal_tags));
    print_kv("idler_tags", static_cast<double>(result.idler_tags));
    print_kv("coincidences", static_cast<double>(result.coincidences));
    if (stream.duration_s > 0.0) {
      const double measured = static_cast<double>(result.coincidences) / stream.duration_s;
      const double rs = static_cast<double>(result.signal_tags) / stream.duration_s;
      const double ri = static_cast<double>(result.idler_tags) / stream.duration_s;
      const double acc = accidental_rate_cps(rs, ri, corr_window_ns);
      print_kv("measured_cps", measured);
      print_kv("accidental_cps", acc);
      print_kv("corrected_pair_cps", subtract_accidentals(measured, acc));
    }
    if (!corr_hist_out.empty()) write_text_file(corr_hist_out, histogram_csv(result.histogram));
  });

  auto* metrics_cmd = app.add_subcommand(
      "metrics", "figures of merit from explicit rates or a tag stream");
  double m_pair = -1.0;
  double m_signal = -1.0;
  double m_idler = -1.0;
  double m_power = 0.1;
  double m_bandwidth = 3.0;
  double m_window = 3.0;
  double m_vhv = -1.0;
  double m_vad = -1.0;
  std::string m_tags;
  metrics_cmd->add_option("--pair-rate-cps", m_pair, "coincidence rate");
  metrics_cmd->add_option("--signal-rate-cps", m_signal, "signal singles rate");
  metrics_cmd->add_option("--idler-rate-cps", m_idler, "idler singles rate");
  metrics_cmd->add_option("--tags", m_tags, "measure rates from this TTAG file instead");
  metrics_cmd->add_option("--window-ns", m_window, "coincidence window for --tags");
  metrics_cmd->add_option("--power-mw", m_power, "pump power in milliwatts");
  metrics_cmd->add_option("--bandwidth-nm", m_bandwidth, "analysis bandwidth in nanometers");
  metrics_cmd->add_option("--v-hv", m_vhv, "H/V fringe visibility for entanglement bounds");
  metrics_cmd->add_option("--v-ad", m_vad, "A/D fringe visibility for entanglement bounds");
  metrics_cmd->callback([&] {
    double pair = m_pair;
    double rs = m_signal;
    double ri = m_idler;
    if (!m_tags.empty()) {
      const auto stream = read_ttag(m_tags);
      if (!(stream.duration_s > 0.0)) throw ConfigInvalid("tag stream has zero duration");
      const auto result = correlate_window(stream, m_window);
      rs = static_cast<double>(result.signal_tags) / stream.duration_s;
      ri = static_cast<double>(result.idler_tags) / stream.duration_s;
      const double measured = static_cast<double>(result.coincidences) / stream.duration_s;
      pair = subtract_accidentals(measured, accidental_rate_cps(rs, ri, m_window));
    }
    if (pair >= 0.0 || rs >= 0.0 || ri >= 0.0) {
      if (pair < 0.0 || rs < 0.0 || ri < 0.0) {
        throw ConfigInvalid("provide all of --pair-rate-cps, --signal-rate-cps, "
                            "--idler-rate-cps (or --tags)");
      }
      const auto r = rate_metrics(std::min(pair, std::min(rs, ri)), rs, ri, m_power,
                                  m_bandwidth);
      print_kv("pair_rate_norm_cps_per_mw", r.pair_rate_norm_cps_per_mw);
      print_kv("spectral_brightness_cps_per_mw_nm", r.spectral_brightness_cps_per_mw_nm);
      print_kv("heralding", r.heralding);
      print_kv("heralding_symmetric", r.heralding_symmetric);
    }
    if (m_vhv >= 0.0 || m_vad >= 0.0) {
      if (m_vhv < 0.0 || m_vad < 0.0) {
        throw ConfigInvalid("provide both --v-hv and --v-ad");
      }
      const double f = fidelity_bound(m_vhv, m_vad);
      print_kv("fidelity_bound", f);
      print_kv("concurrence_bound", concurrence_bound(f));
    }
    if (pair < 0.0 && m_vhv < 0.0) {
      throw ConfigInvalid("nothing to compute: pass rates, --tags, or visibilities");
    }
  });

  auto* paper = app.add_subcommand(
      "reproduce-paper", "calibrated broadband + filtered narrowband reproduction run");
  std::string paper_out = "out/paper";
  std::uint64_t paper_seed = 20260816;
  paper->add_option("--out", paper_out, "output directory");
  paper->add_option("--seed", paper_seed, "top-level RNG seed");
  paper->callback([&] {
    const auto report = reproduce_paper(paper_out, paper_seed);
    print_kv("calibrated_c2_rad_per_nm2", report.calibrated_c2_rad_per_nm2);
    std::printf("-- broadband --\n");
    print_summary(report.broadband);
    std::printf("-- narrowband (filtered) --\n");
    print_summary(report.narrowband);
  });

  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "solve for the quadratic phase that hits a target A/D visibility");
  double cal_target = 0.78;
  calibrate_cmd->add_option("--target", cal_target, "target A/D visibility in (0, 1]")
      ->required();
  calibrate_cmd->add_option("--config", flags.config_path, "run configuration file");
  calibrate_cmd->add_option("--seed", flags.seed, "top-level RNG seed")
      ->each([&](const std::string&) { flags.seed_set = true; });
  calibrate_cmd->callback([&] {
    RunConfig cfg = flags.config_path.empty() ? paper_broadband_config(20260816)
                                              : load_run_config(flags.config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    const double c2 = calibrate_dispersion(cal_target, cfg);
    SourceSpec spec = cfg.source;
    spec.phase_c2_rad_per_nm2 = c2;
    spec.filter_bandwidth_nm = 0.0;
    const auto sag = sagnac_state(build_source_config(spec));
    const double achieved =
        visibility(fringe_scan(sag.state, 0.25 * 3.141592653589793, cfg.scan.steps));
    print_kv("calibrated_c2_rad_per_nm2", c2);
    print_kv("achieved_v_ad", achieved);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigInvalid& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const IoFailure& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
