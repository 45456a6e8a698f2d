#pragma once

// Brute-force reference for the one-pass coincidence matcher. Shares nothing
// with the library implementation: for every tag, taken in time order, it
// rescans the whole prefix for the latest still-unmatched opposite-channel
// tag and pairs up when the separation is at most half the window.

#include <cmath>
#include <cstdint>
#include <vector>

#include "biphoton/timetags.hpp"

namespace testsupport {

struct OracleMatchResult {
  std::uint64_t coincidences = 0;
  std::vector<std::int64_t> delays_ps;  // idler minus signal, match order
};

inline OracleMatchResult quadratic_match(const biphoton::TagStream& stream,
                                         double window_ns) {
  const auto half_ps =
      static_cast<std::int64_t>(std::llround(window_ns * 1000.0 / 2.0));
  const auto& tags = stream.tags;
  std::vector<bool> matched(tags.size(), false);
  OracleMatchResult result;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    bool found = false;
    std::size_t best = 0;
    for (std::size_t j = 0; j < i; ++j) {
      if (matched[j]) continue;
      if (tags[j].channel == tags[i].channel) continue;
      if (tags[i].time_ps - tags[j].time_ps > half_ps) continue;
      if (!found || tags[j].time_ps >= tags[best].time_ps) {
        found = true;
        best = j;
      }
    }
    if (found) {
      matched[i] = true;
      matched[best] = true;
      ++result.coincidences;
      const auto& sig = tags[i].channel == biphoton::Channel::kSignal ? tags[i] : tags[best];
      const auto& idl = tags[i].channel == biphoton::Channel::kIdler ? tags[i] : tags[best];
      result.delays_ps.push_back(idl.time_ps - sig.time_ps);
    }
  }
  return result;
}

}  // namespace testsupport
