#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "biphoton/correlator.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/rng.hpp"
#include "biphoton/timetags.hpp"
#include "support/match_oracle.hpp"

using namespace biphoton;

namespace {

TagStream make_stream(std::vector<Tag> tags, double duration_s) {
  TagStream s;
  s.tags = std::move(tags);
  s.duration_s = duration_s;
  return s;
}

// Bins oracle delays exactly the way the library histogram does.
std::vector<std::uint64_t> bin_delays(const std::vector<std::int64_t>& delays_ps,
                                      double window_ns, std::int64_t bin_ps) {
  const auto half = static_cast<std::int64_t>(std::llround(window_ns * 1000.0 / 2.0));
  const auto bins = static_cast<std::size_t>((2 * half + bin_ps - 1) / bin_ps);
  std::vector<std::uint64_t> counts(std::max<std::size_t>(bins, 1), 0);
  for (std::int64_t d : delays_ps) {
    auto idx = static_cast<std::size_t>((d + half) / bin_ps);
    if (idx >= counts.size()) idx = counts.size() - 1;
    ++counts[idx];
  }
  return counts;
}

std::string temp_path(const char* name) {
  return std::string("detection_test_") + name + ".ttag";
}

}  // namespace

TEST_CASE("window_convention_examples") {
  // Delay of 1 ns sits inside a 3 ns window (half-width 1.5 ns); 2 ns does not.
  auto inside = make_stream({{0, Channel::kSignal}, {1000, Channel::kIdler}}, 1.0);
  auto outside = make_stream({{0, Channel::kSignal}, {2000, Channel::kIdler}}, 1.0);
  CHECK(correlate_window(inside, 3.0).coincidences == 1);
  CHECK(correlate_window(outside, 3.0).coincidences == 0);

  // The boundary itself is included.
  auto edge = make_stream({{0, Channel::kSignal}, {1500, Channel::kIdler}}, 1.0);
  CHECK(correlate_window(edge, 3.0).coincidences == 1);

  // Order does not matter: an idler click before its signal still pairs.
  auto reversed = make_stream({{0, Channel::kIdler}, {1000, Channel::kSignal}}, 1.0);
  auto rev = correlate_window(reversed, 3.0);
  CHECK(rev.coincidences == 1);
  CHECK(rev.signal_tags == 1);
  CHECK(rev.idler_tags == 1);
}

TEST_CASE("matcher_takes_the_latest_available_partner") {
  // Two signals precede one idler; the idler pairs with the nearer, more
  // recent signal and the older one stays unmatched.
  auto s = make_stream(
      {{0, Channel::kSignal}, {990, Channel::kSignal}, {1000, Channel::kIdler}}, 1.0);
  auto r = correlate_window(s, 3.0);
  CHECK(r.coincidences == 1);
  // Delay 10 ps lands in the bin just above the window center.
  const auto center_bin = static_cast<std::size_t>(1500 / 50);
  REQUIRE(r.histogram.counts.size() == 60);
  CHECK(r.histogram.counts[center_bin] == 1);
  CHECK(r.histogram.left_edge_ps(center_bin) == 0);

  // Greedy one-pass behavior: an early match is kept even when a globally
  // closer pairing exists for a later tag.
  auto chain = make_stream({{0, Channel::kSignal},
                            {1200, Channel::kIdler},
                            {1300, Channel::kSignal},
                            {5000, Channel::kIdler}},
                           1.0);
  auto rc = correlate_window(chain, 3.0);
  CHECK(rc.coincidences == 1);  // idler@1200 takes signal@0; idler@5000 finds nobody

  // Once a partner is consumed it cannot match again.
  auto consumed = make_stream(
      {{0, Channel::kSignal}, {100, Channel::kIdler}, {200, Channel::kIdler}}, 1.0);
  CHECK(correlate_window(consumed, 3.0).coincidences == 1);
}

TEST_CASE("correlate_window_rejects_bad_inputs") {
  auto ok = make_stream({{0, Channel::kSignal}}, 1.0);
  CHECK_THROWS_AS(correlate_window(ok, 0.0), OutOfRange);
  CHECK_THROWS_AS(correlate_window(ok, -1.0), OutOfRange);
  CHECK_THROWS_AS(correlate_window(ok, 3.0, 0), OutOfRange);

  auto unsorted =
      make_stream({{1000, Channel::kSignal}, {400, Channel::kIdler}}, 1.0);
  CHECK_THROWS_AS(correlate_window(unsorted, 3.0), UnsortedStream);

  auto empty = make_stream({}, 1.0);
  auto r = correlate_window(empty, 3.0);
  CHECK(r.coincidences == 0);
  CHECK(r.signal_tags == 0);
  CHECK(r.idler_tags == 0);
}

TEST_CASE("one_pass_matcher_agrees_with_the_quadratic_oracle") {
  SplitStream rng(20260816, 11);
  for (int iter = 0; iter < 200; ++iter) {
    // Mix of dense and sparse streams so matches range from rare to frequent.
    const std::size_t n = 1 + rng.below(iter % 4 == 0 ? 2000 : 120);
    const std::int64_t span = 1 + static_cast<std::int64_t>(rng.below(
                                      iter % 3 == 0 ? 20000 : 2000000));
    std::vector<Tag> tags(n);
    for (auto& t : tags) {
      t.time_ps = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span)));
      t.channel = rng.below(2) == 0 ? Channel::kSignal : Channel::kIdler;
    }
    std::sort(tags.begin(), tags.end(), [](const Tag& a, const Tag& b) {
      if (a.time_ps != b.time_ps) return a.time_ps < b.time_ps;
      return static_cast<int>(a.channel) < static_cast<int>(b.channel);
    });
    const double window_ns = 0.1 + 6.0 * rng.uniform();
    auto stream = make_stream(std::move(tags), 1.0);

    auto fast = correlate_window(stream, window_ns);
    auto slow = testsupport::quadratic_match(stream, window_ns);
    REQUIRE(fast.coincidences == slow.coincidences);
    auto oracle_bins = bin_delays(slow.delays_ps, window_ns, fast.histogram.bin_width_ps);
    REQUIRE(fast.histogram.counts == oracle_bins);
  }
}

TEST_CASE("timetag_generation_is_deterministic_and_well_formed") {
  DetectionConfig cfg;
  cfg.duration_s = 0.5;
  cfg.seed = 42;

  auto a = generate_timetags(cfg);
  auto b = generate_timetags(cfg);
  REQUIRE(a.tags == b.tags);
  CHECK(a.duration_s == 0.5);

  cfg.seed = 43;
  auto c = generate_timetags(cfg);
  CHECK(a.tags != c.tags);

  // Sorted, in range, and both channels populated at these rates.
  const auto horizon = static_cast<std::int64_t>(0.5e12);
  std::uint64_t signals = 0;
  std::uint64_t idlers = 0;
  for (std::size_t i = 0; i < a.tags.size(); ++i) {
    CHECK(a.tags[i].time_ps >= 0);
    CHECK(a.tags[i].time_ps <= horizon);
    if (i > 0) CHECK(a.tags[i].time_ps >= a.tags[i - 1].time_ps);
    (a.tags[i].channel == Channel::kSignal ? signals : idlers) += 1;
  }
  // Poisson counts concentrate near rate times duration; 5 sigma bands.
  const double expect = 86000.0 * 0.5;
  CHECK(std::abs(static_cast<double>(signals) - expect) < 5.0 * std::sqrt(expect));
  CHECK(std::abs(static_cast<double>(idlers) - expect) < 5.0 * std::sqrt(expect));
}

TEST_CASE("detection_config_validation") {
  DetectionConfig cfg;

  cfg.coincidence_window_ns = 0.0;
  CHECK_THROWS_AS(generate_timetags(cfg), OutOfRange);
  cfg = DetectionConfig{};

  cfg.pair_rate_cps = 90000.0;  // above both singles rates
  CHECK_THROWS_AS(generate_timetags(cfg), RateInconsistent);
  cfg = DetectionConfig{};

  cfg.singles_rate_idler_cps = 10000.0;  // pair rate above one singles rate
  CHECK_THROWS_AS(generate_timetags(cfg), RateInconsistent);
  cfg = DetectionConfig{};

  cfg.pair_rate_cps = -1.0;
  CHECK_THROWS_AS(generate_timetags(cfg), OutOfRange);
  cfg = DetectionConfig{};

  cfg.duration_s = 3601.0;
  CHECK_THROWS_AS(generate_timetags(cfg), OutOfRange);
  cfg = DetectionConfig{};

  cfg.duration_s = 0.0;
  CHECK(generate_timetags(cfg).tags.empty());
}

TEST_CASE("uncorrelated_channels_reproduce_the_accidental_rate") {
  // No true pairs: every coincidence is accidental. With 86 kcps on each
  // channel and a 3 ns window the expected rate is 86000^2 * 3e-9 = 22.188.
  DetectionConfig cfg;
  cfg.pair_rate_cps = 0.0;
  cfg.duration_s = 10.0;
  cfg.seed = 7;
  auto stream = generate_timetags(cfg);
  auto result = correlate_window(stream, cfg.coincidence_window_ns);

  const double expected_cps =
      accidental_rate_cps(cfg.singles_rate_signal_cps, cfg.singles_rate_idler_cps,
                          cfg.coincidence_window_ns);
  CHECK(expected_cps == Catch::Approx(22.188));
  const double measured_cps = static_cast<double>(result.coincidences) / cfg.duration_s;
  const double sigma_cps = std::sqrt(expected_cps * cfg.duration_s) / cfg.duration_s;
  CHECK(std::abs(measured_cps - expected_cps) <= 3.0 * sigma_cps);

  // With no correlations the delay histogram is flat: no bin may hold more
  // than a few counts when the mean per bin is about 3.7.
  const auto max_bin =
      *std::max_element(result.histogram.counts.begin(), result.histogram.counts.end());
  CHECK(max_bin < 20);
}

TEST_CASE("pair_rate_recovers_after_accidental_subtraction") {
  DetectionConfig cfg;  // defaults: 16 kcps pairs, 86 kcps singles, 3 ns, 10 s
  cfg.seed = 3;
  auto stream = generate_timetags(cfg);
  auto result = correlate_window(stream, cfg.coincidence_window_ns);

  const double accidental =
      accidental_rate_cps(cfg.singles_rate_signal_cps, cfg.singles_rate_idler_cps,
                          cfg.coincidence_window_ns);
  const double expected_cps = cfg.pair_rate_cps + accidental;
  const double measured_cps = static_cast<double>(result.coincidences) / cfg.duration_s;
  const double sigma_cps = std::sqrt(expected_cps * cfg.duration_s) / cfg.duration_s;
  CHECK(std::abs(measured_cps - expected_cps) <= 3.0 * sigma_cps);

  const double corrected = subtract_accidentals(measured_cps, accidental);
  CHECK(std::abs(corrected - cfg.pair_rate_cps) <= 3.0 * sigma_cps);

  // True pairs pile near zero delay: the central bins dominate the histogram.
  const auto& h = result.histogram;
  std::uint64_t central = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const auto left = h.left_edge_ps(i);
    if (left >= -1100 && left + h.bin_width_ps <= 1100) central += h.counts[i];
  }
  CHECK(static_cast<double>(central) >
        0.95 * static_cast<double>(result.coincidences) - accidental * cfg.duration_s);
}

TEST_CASE("coincidence_estimate_is_unbiased_across_seeds") {
  // Averages over a fixed block of 20 seeds. The per-channel tag counts and
  // the pairs-only matched rate are unbiased, so those means get a one-sigma
  // band. The naive product formula for accidentals slightly overestimates
  // under exclusive pairing (a tag consumed by its true partner cannot also
  // realize an accidental), about 11 cps here, so the mixed-rate mean gets a
  // three-sigma band around rate-plus-formula instead.
  const int runs = 20;
  const double t = 10.0;
  double sum_signal = 0.0;
  double sum_pairs_only = 0.0;
  double sum_mixed = 0.0;
  for (int k = 0; k < runs; ++k) {
    DetectionConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(k);
    auto mixed = correlate_window(generate_timetags(cfg), cfg.coincidence_window_ns);
    sum_signal += static_cast<double>(mixed.signal_tags) / t;
    sum_mixed += static_cast<double>(mixed.coincidences) / t;

    DetectionConfig pure = cfg;
    pure.singles_rate_signal_cps = pure.pair_rate_cps;
    pure.singles_rate_idler_cps = pure.pair_rate_cps;
    auto pairs = correlate_window(generate_timetags(pure), pure.coincidence_window_ns);
    sum_pairs_only += static_cast<double>(pairs.coincidences) / t;
  }
  const double root_runs = std::sqrt(1.0 * runs);
  auto sigma_cps = [&](double rate) { return std::sqrt(rate * t) / t; };

  CHECK(std::abs(sum_signal / runs - 86000.0) <= sigma_cps(86000.0) / root_runs);
  CHECK(std::abs(sum_pairs_only / runs - 16000.0) <= sigma_cps(16000.0) / root_runs);

  const double formula_cps = 16000.0 + accidental_rate_cps(86000.0, 86000.0, 3.0);
  CHECK(std::abs(sum_mixed / runs - formula_cps) <=
        3.0 * sigma_cps(formula_cps) / root_runs);
}

TEST_CASE("accidental_helpers") {
  CHECK(accidental_rate_cps(86000.0, 86000.0, 3.0) == Catch::Approx(22.188));
  CHECK(accidental_rate_cps(0.0, 86000.0, 3.0) == 0.0);
  CHECK_THROWS_AS(accidental_rate_cps(-1.0, 1.0, 1.0), OutOfRange);
  CHECK_THROWS_AS(accidental_rate_cps(1.0, 1.0, -1.0), OutOfRange);

  CHECK(subtract_accidentals(100.0, 22.0) == Catch::Approx(78.0));
  CHECK(subtract_accidentals(10.0, 22.0) == 0.0);  // clamps instead of going negative
  CHECK_THROWS_AS(subtract_accidentals(10.0, -1.0), OutOfRange);
}

TEST_CASE("ttag_files_round_trip") {
  DetectionConfig cfg;
  cfg.duration_s = 0.01;
  cfg.seed = 5;
  auto stream = generate_timetags(cfg);
  REQUIRE(!stream.tags.empty());

  const auto path = temp_path("roundtrip");
  write_ttag(path, stream);
  auto back = read_ttag(path);
  REQUIRE(back.tags == stream.tags);
  CHECK(back.duration_s ==
        Catch::Approx(static_cast<double>(stream.tags.back().time_ps) * 1e-12));

  // Empty stream: header only, reads back empty.
  write_ttag(path, make_stream({}, 0.0));
  CHECK(read_ttag(path).tags.empty());
  std::remove(path.c_str());
}

TEST_CASE("ttag_io_failures") {
  CHECK_THROWS_AS(read_ttag("does_not_exist.ttag"), IoFailure);
  CHECK_THROWS_AS(write_ttag("no_such_dir/out.ttag", TagStream{}), IoFailure);

  const auto bad_magic = temp_path("badmagic");
  {
    std::ofstream f(bad_magic, std::ios::binary);
    f.write("NOPE\x01", 5);
  }
  CHECK_THROWS_AS(read_ttag(bad_magic), IoFailure);
  std::remove(bad_magic.c_str());

  const auto truncated = temp_path("truncated");
  {
    std::ofstream f(truncated, std::ios::binary);
    f.write("TTAG\x01", 5);
    f.write("\x01\x02\x03", 3);  // partial record
  }
  CHECK_THROWS_AS(read_ttag(truncated), IoFailure);
  std::remove(truncated.c_str());

  const auto bad_channel = temp_path("badchannel");
  {
    std::ofstream f(bad_channel, std::ios::binary);
    f.write("TTAG\x01", 5);
    const char rec[9] = {0, 0, 0, 0, 0, 0, 0, 0, 2};
    f.write(rec, 9);
  }
  CHECK_THROWS_AS(read_ttag(bad_channel), IoFailure);
  std::remove(bad_channel.c_str());
}
