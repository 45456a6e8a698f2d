#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "biphoton/errors.hpp"
#include "biphoton/rng.hpp"

namespace biphoton {

enum class Channel : std::uint8_t { kSignal = 0, kIdler = 1 };

// One detector click. Integer picoseconds keep equality exact and files
// bit-stable.
struct Tag {
  std::int64_t time_ps = 0;
  Channel channel = Channel::kSignal;

  friend bool operator==(const Tag&, const Tag&) = default;
};

// Time-ordered click record from both detectors.
struct TagStream {
  std::vector<Tag> tags;
  double duration_s = 0.0;
};

// Detector-side parameters. Rates describe what the detectors see: true
// pairs arrive at pair_rate_cps on both channels; independent background
// singles fill each channel up to its singles rate.
struct DetectionConfig {
  double coincidence_window_ns = 3.0;
  double singles_rate_signal_cps = 86000.0;
  double singles_rate_idler_cps = 86000.0;
  double pair_rate_cps = 16000.0;
  double detector_jitter_ps = 350.0;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
};

inline void validate(const DetectionConfig& cfg) {
  if (!(cfg.coincidence_window_ns > 0.0)) {
    throw OutOfRange("coincidence window must be positive");
  }
  if (cfg.singles_rate_signal_cps < 0.0 || cfg.singles_rate_idler_cps < 0.0 ||
      cfg.pair_rate_cps < 0.0 || cfg.detector_jitter_ps < 0.0) {
    throw OutOfRange("rates and jitter must be non-negative");
  }
  if (cfg.pair_rate_cps >
      std::min(cfg.singles_rate_signal_cps, cfg.singles_rate_idler_cps)) {
    throw RateInconsistent("pair rate cannot exceed either singles rate");
  }
  if (!(cfg.duration_s >= 0.0) || cfg.duration_s > 3600.0) {
    throw OutOfRange("duration must lie in [0, 3600] s");
  }
}

// Synthesizes the click record of a pair source plus background. True pairs
// are a Poisson process at the pair rate; the idler click of each pair is
// offset by Gaussian detector jitter. Each channel is then topped up with an
// independent Poisson background so its total rate matches the configured
// singles rate. Deterministic: all randomness derives from the seed through
// fixed per-purpose substreams, so output is independent of evaluation order.
inline TagStream generate_timetags(const DetectionConfig& cfg) {
  validate(cfg);
  TagStream out;
  out.duration_s = cfg.duration_s;
  const double horizon_ps = cfg.duration_s * 1e12;

  auto push = [&](double t_ps, Channel ch) {
    if (t_ps < 0.0 || t_ps > horizon_ps) return;
    out.tags.push_back({static_cast<std::int64_t>(std::llround(t_ps)), ch});
  };

  // Substream 1: pair process (arrival gaps and idler jitter interleaved).
  {
    SplitStream rng(cfg.seed, 1);
    if (cfg.pair_rate_cps > 0.0 && cfg.duration_s > 0.0) {
      double t_s = 0.0;
      for (;;) {
        t_s += rng.exponential(cfg.pair_rate_cps);
        if (t_s > cfg.duration_s) break;
        const double t_ps = t_s * 1e12;
        push(t_ps, Channel::kSignal);
        push(t_ps + rng.normal(0.0, cfg.detector_jitter_ps), Channel::kIdler);
      }
    }
  }
  // Substreams 2 and 3: uncorrelated background on each channel.
  const double extra_signal = cfg.singles_rate_signal_cps - cfg.pair_rate_cps;
  const double extra_idler = cfg.singles_rate_idler_cps - cfg.pair_rate_cps;
  const double extras[2] = {extra_signal, extra_idler};
  const Channel channels[2] = {Channel::kSignal, Channel::kIdler};
  for (int k = 0; k < 2; ++k) {
    SplitStream rng(cfg.seed, static_cast<std::uint64_t>(2 + k));
    if (extras[k] <= 0.0 || cfg.duration_s <= 0.0) continue;
    double t_s = 0.0;
    for (;;) {
      t_s += rng.exponential(extras[k]);
      if (t_s > cfg.duration_s) break;
      push(t_s * 1e12, channels[k]);
    }
  }

  std::sort(out.tags.begin(), out.tags.end(), [](const Tag& a, const Tag& b) {
    if (a.time_ps != b.time_ps) return a.time_ps < b.time_ps;
    return static_cast<int>(a.channel) < static_cast<int>(b.channel);
  });
  return out;
}

// Binary tag file: magic "TTAG", version byte 0x01, then one record per tag
// of 8-byte little-endian unsigned picoseconds followed by 1 channel byte
// (0 = signal, 1 = idler).
inline void write_ttag(const std::string& path, const TagStream& stream) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open tag file for writing: " + path);
  f.write("TTAG", 4);
  const char version = 0x01;
  f.write(&version, 1);
  for (const Tag& tag : stream.tags) {
    const auto u = static_cast<std::uint64_t>(tag.time_ps);
    char rec[9];
    for (int i = 0; i < 8; ++i) rec[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    rec[8] = static_cast<char>(tag.channel);
    f.write(rec, 9);
  }
  if (!f) throw IoFailure("failed writing tag file: " + path);
}

// Reads a tag file back. The stream duration is inferred from the last tag.
inline TagStream read_ttag(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open tag file for reading: " + path);
  char header[5];
  if (!f.read(header, 5) || header[0] != 'T' || header[1] != 'T' || header[2] != 'A' ||
      header[3] != 'G' || header[4] != 0x01) {
    throw IoFailure("not a TTAG v1 file: " + path);
  }
  TagStream out;
  char rec[9];
  for (;;) {
    f.read(rec, 9);
    if (f.gcount() == 0 && f.eof()) break;
    if (f.gcount() != 9) throw IoFailure("truncated tag record in: " + path);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) {
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(rec[i])) << (8 * i);
    }
    const auto ch = static_cast<unsigned char>(rec[8]);
    if (ch > 1) throw IoFailure("invalid channel byte in: " + path);
    out.tags.push_back({static_cast<std::int64_t>(u), static_cast<Channel>(ch)});
  }
  if (!out.tags.empty()) {
    out.duration_s = static_cast<double>(out.tags.back().time_ps) * 1e-12;
  }
  return out;
}

}  // namespace biphoton
