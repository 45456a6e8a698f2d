#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "biphoton/errors.hpp"
#include "biphoton/timetags.hpp"

namespace biphoton {

// Histogram of signed pair delays (idler minus signal) over the coincidence
// window, at fixed bin width. Bin i covers [left_edge_ps(i),
// left_edge_ps(i) + bin_width_ps); the upper window edge folds into the last
// bin so every matched pair is counted exactly once.
struct DelayHistogram {
  std::int64_t min_delay_ps = 0;
  std::int64_t bin_width_ps = 50;
  std::vector<std::uint64_t> counts;

  std::int64_t left_edge_ps(std::size_t i) const {
    return min_delay_ps + static_cast<std::int64_t>(i) * bin_width_ps;
  }
};

struct CoincidenceResult {
  std::uint64_t coincidences = 0;
  std::uint64_t signal_tags = 0;
  std::uint64_t idler_tags = 0;
  DelayHistogram histogram;
};

// Greedy one-pass pair matcher. Walking the stream in time order, each tag
// claims the most recent still-unmatched tag of the opposite channel when
// their separation is at most half the window; both then leave the pool.
// Matched pairs land in the delay histogram at idler minus signal.
inline CoincidenceResult correlate_window(const TagStream& stream, double window_ns,
                                          std::int64_t histogram_bin_ps = 50) {
  if (!(window_ns > 0.0)) throw OutOfRange("coincidence window must be positive");
  if (histogram_bin_ps <= 0) throw OutOfRange("histogram bin width must be positive");
  const auto half_ps = static_cast<std::int64_t>(std::llround(window_ns * 1000.0 / 2.0));

  CoincidenceResult result;
  auto& hist = result.histogram;
  hist.bin_width_ps = histogram_bin_ps;
  hist.min_delay_ps = -half_ps;
  const auto bin_count = static_cast<std::size_t>((2 * half_ps + histogram_bin_ps - 1) /
                                                  histogram_bin_ps);
  hist.counts.assign(std::max<std::size_t>(bin_count, 1), 0);

  auto record = [&](std::int64_t delay_ps) {
    ++result.coincidences;
    auto idx = static_cast<std::size_t>((delay_ps + half_ps) / histogram_bin_ps);
    if (idx >= hist.counts.size()) idx = hist.counts.size() - 1;
    ++hist.counts[idx];
  };

  // Pending unmatched tags per channel, oldest first. Only the tail within
  // half a window of the current time can ever match again, so the head
  // index advances past expired entries and the vectors are compacted
  // occasionally to keep memory proportional to the live span.
  std::vector<std::int64_t> pending[2];
  std::size_t live_begin[2] = {0, 0};
  auto compact = [&](int ch) {
    if (live_begin[ch] > 4096 && live_begin[ch] * 2 > pending[ch].size()) {
      pending[ch].erase(pending[ch].begin(),
                        pending[ch].begin() + static_cast<std::ptrdiff_t>(live_begin[ch]));
      live_begin[ch] = 0;
    }
  };

  std::int64_t previous = 0;
  bool first = true;
  for (const Tag& tag : stream.tags) {
    if (!first && tag.time_ps < previous) {
      throw UnsortedStream("tag stream is not sorted by time");
    }
    previous = tag.time_ps;
    first = false;

    const int self = static_cast<int>(tag.channel);
    const int other = 1 - self;
    if (tag.channel == Channel::kSignal) {
      ++result.signal_tags;
    } else {
      ++result.idler_tags;
    }

    while (live_begin[other] < pending[other].size() &&
           pending[other][live_begin[other]] < tag.time_ps - half_ps) {
      ++live_begin[other];
    }
    compact(other);

    if (live_begin[other] < pending[other].size()) {
      const std::int64_t partner = pending[other].back();
      if (tag.time_ps - partner <= half_ps) {
        pending[other].pop_back();
        const std::int64_t delay =
            tag.channel == Channel::kIdler ? tag.time_ps - partner : partner - tag.time_ps;
        record(delay);
        continue;
      }
    }
    pending[self].push_back(tag.time_ps);
  }
  return result;
}

// Expected rate of uncorrelated coincidences between two independent Poisson
// channels: the product of the rates and the window.
inline double accidental_rate_cps(double signal_rate_cps, double idler_rate_cps,
                                  double window_ns) {
  if (signal_rate_cps < 0.0 || idler_rate_cps < 0.0 || window_ns < 0.0) {
    throw OutOfRange("rates and window must be non-negative");
  }
  return signal_rate_cps * idler_rate_cps * window_ns * 1e-9;
}

// Background-corrected rate, clamped at zero so noise cannot produce a
// negative pair rate.
inline double subtract_accidentals(double measured_rate_cps, double accidental_cps) {
  if (accidental_cps < 0.0) throw OutOfRange("accidental rate must be non-negative");
  return std::max(measured_rate_cps - accidental_cps, 0.0);
}

}  // namespace biphoton
