#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "biphoton/fock.hpp"
#include "biphoton/source.hpp"

namespace biphoton {

// Named analyzer bases. kHV means both analyzer angles sit on the H/V axes
// (multiples of pi/2), kAD on the diagonal axes (odd multiples of pi/4);
// kCustom carries no constraint.
enum class BasisTag { kHV, kAD, kCustom };

// One joint polarizer configuration: analyzer angle per output port, measured
// from H. A photon in H passes with amplitude cos(theta), one in V with
// amplitude sin(theta).
struct PolarizerSetting {
  double theta1_rad = 0.0;
  double theta2_rad = 0.0;
  BasisTag basis = BasisTag::kCustom;
};

namespace detail {

inline bool on_axis_grid(double theta, double offset, double step) {
  const double t = (theta - offset) / step;
  return std::abs(t - std::round(t)) < 1e-9;
}

}  // namespace detail

inline void validate(const PolarizerSetting& set) {
  if (!std::isfinite(set.theta1_rad) || !std::isfinite(set.theta2_rad)) {
    throw OutOfRange("polarizer angles must be finite");
  }
  constexpr double kQuarterPi = 0.78539816339744830962;
  if (set.basis == BasisTag::kHV) {
    if (!detail::on_axis_grid(set.theta1_rad, 0.0, 2.0 * kQuarterPi) ||
        !detail::on_axis_grid(set.theta2_rad, 0.0, 2.0 * kQuarterPi)) {
      throw OutOfRange("HV-tagged setting requires angles on multiples of pi/2");
    }
  } else if (set.basis == BasisTag::kAD) {
    if (!detail::on_axis_grid(set.theta1_rad, kQuarterPi, 2.0 * kQuarterPi) ||
        !detail::on_axis_grid(set.theta2_rad, kQuarterPi, 2.0 * kQuarterPi)) {
      throw OutOfRange("AD-tagged setting requires angles on odd multiples of pi/4");
    }
  }
}

// Probability that the out1 photon passes its analyzer AND the out2 photon
// passes its analyzer. Amplitudes within one (bin on out1, bin on out2)
// sector add coherently; distinguishable sectors add incoherently. Requires a
// normalized state in which every ket holds exactly one photon on each of the
// two ports. For the ideal pair state the result is sin^2(theta1+theta2)/2.
inline double coincidence_probability(const StateVector& s, const PolarizerSetting& set,
                                      std::int32_t port1 = kPortOut1,
                                      std::int32_t port2 = kPortOut2) {
  validate(set);
  if (std::abs(norm_squared(s) - 1.0) > 1e-9) {
    throw NotNormalized("coincidence_probability requires a normalized state");
  }
  // amplitude[pol1 * 2 + pol2] per bin sector
  std::map<std::pair<std::int32_t, std::int32_t>, std::array<Complex, 4>> sectors;
  for (const auto& [ket, amp] : s.amplitudes()) {
    if (ket.total_photons() != 2 || ket.occupations().size() != 2) {
      throw NotTwoPhoton("state must hold one photon on each output port");
    }
    const auto& a = ket.occupations()[0].first;
    const auto& b = ket.occupations()[1].first;
    const ModeLabel& m1 = a.port == port1 ? a : b;
    const ModeLabel& m2 = a.port == port1 ? b : a;
    if (m1.port != port1 || m2.port != port2) {
      throw NotTwoPhoton("state must hold one photon on each output port");
    }
    auto& sector = sectors[{m1.bin, m2.bin}];
    const int idx = (m1.pol == Pol::V ? 2 : 0) + (m2.pol == Pol::V ? 1 : 0);
    sector[static_cast<std::size_t>(idx)] += amp;
  }
  const double c1 = std::cos(set.theta1_rad);
  const double s1 = std::sin(set.theta1_rad);
  const double c2 = std::cos(set.theta2_rad);
  const double s2 = std::sin(set.theta2_rad);
  double p = 0.0;
  for (const auto& [key, a] : sectors) {
    const Complex passed = a[0] * (c1 * c2) + a[1] * (c1 * s2) + a[2] * (s1 * c2) +
                           a[3] * (s1 * s2);
    p += std::norm(passed);
  }
  return p;
}

struct FringePoint {
  double theta2_rad = 0.0;
  double probability = 0.0;
};

using FringeCurve = std::vector<FringePoint>;

// Coincidence curve versus the second analyzer angle at a fixed first angle.
// One full fringe period (pi) sampled uniformly; steps >= 8 keeps the
// sinusoid fit below overdetermined.
inline FringeCurve fringe_scan(const StateVector& s, double fixed_theta1, int steps) {
  if (steps < 8) throw TooFewSamples("fringe scan needs at least 8 points");
  constexpr double kPi = 3.14159265358979323846;
  FringeCurve curve;
  curve.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    const double theta2 = k * kPi / steps;
    curve.push_back(
        {theta2, coincidence_probability(s, {fixed_theta1, theta2, BasisTag::kCustom})});
  }
  return curve;
}

struct FringeFit {
  double offset = 0.0;     // mean level a
  double amplitude = 0.0;  // sqrt(b^2 + c^2) of the 2-theta quadrature pair
  double visibility = 0.0;
};

// Least-squares fit of p(theta) = a + b cos(2 theta) + c sin(2 theta); the
// coincidence probability of any two-photon state is exactly of this form, so
// the fit is unbiased while being robust to sampling of the raw extrema.
// Visibility = amplitude / offset, clamped to [0, 1]. Scale invariant.
inline FringeFit fit_fringe(const FringeCurve& curve) {
  if (curve.empty()) throw DegenerateCurve("cannot fit an empty curve");
  double s_y = 0.0;
  bool any_positive = false;
  for (const auto& pt : curve) {
    if (pt.probability < 0.0) throw OutOfRange("fringe values must be non-negative");
    if (pt.probability > 0.0) any_positive = true;
    s_y += pt.probability;
  }
  if (!any_positive) throw DegenerateCurve("fringe curve is identically zero");

  // Normal equations for the 3-parameter model.
  double m[3][3] = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  double rhs[3] = {0.0, 0.0, 0.0};
  for (const auto& pt : curve) {
    const double x[3] = {1.0, std::cos(2.0 * pt.theta2_rad), std::sin(2.0 * pt.theta2_rad)};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += x[i] * x[j];
      rhs[i] += x[i] * pt.probability;
    }
  }
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (std::abs(det) < 1e-12 * curve.size()) {
    throw DegenerateCurve("fringe sample positions do not determine a sinusoid");
  }
  auto solve = [&](int col) {
    double t[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) t[i][j] = j == col ? rhs[i] : m[i][j];
    }
    return (t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) -
            t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0]) +
            t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])) /
           det;
  };
  const double a = solve(0);
  const double b = solve(1);
  const double c = solve(2);
  if (!(a > 0.0)) throw DegenerateCurve("fringe mean level is not positive");
  FringeFit fit;
  fit.offset = a;
  fit.amplitude = std::sqrt(b * b + c * c);
  fit.visibility = std::min(1.0, fit.amplitude / a);
  return fit;
}

inline double visibility(const FringeCurve& curve) { return fit_fringe(curve).visibility; }

// Raw sample extrema, exposed alongside the fit for comparison. Visibility
// from raw extrema is (max - min) / (max + min).
struct FringeExtrema {
  double min = 0.0;
  double max = 0.0;
};

inline FringeExtrema raw_extrema(const FringeCurve& curve) {
  if (curve.empty()) throw DegenerateCurve("cannot take extrema of an empty curve");
  FringeExtrema e{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& pt : curve) {
    e.min = std::min(e.min, pt.probability);
    e.max = std::max(e.max, pt.probability);
  }
  return e;
}

inline double raw_visibility(const FringeCurve& curve) {
  const FringeExtrema e = raw_extrema(curve);
  if (e.max + e.min <= 0.0) throw DegenerateCurve("fringe curve is identically zero");
  return (e.max - e.min) / (e.max + e.min);
}

}  // namespace biphoton
