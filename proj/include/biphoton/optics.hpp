#pragma once

#include <cmath>
#include <vector>

#include "biphoton/mode_map.hpp"

namespace biphoton {

// General retarder on one port: Jones matrix with the given retardance
// between fast and slow axes, fast axis rotated by axis_angle from H.
//   J = R(theta) diag(1, e^{i Gamma}) R(-theta)
// Retardance pi is a half-wave plate, pi/2 a quarter-wave plate. A plate at
// axis angle 45 deg leaves the diagonal component alone and phase-shifts the
// antidiagonal one by the retardance. Global phase follows the convention
// above (unit determinant is not enforced; only relative phases matter).
inline ModeMap waveplate_map(double retardance_rad, double axis_angle_rad,
                             std::int32_t port) {
  if (port < 0) throw UnknownPort("waveplate port id must be non-negative");
  const double c = std::cos(axis_angle_rad);
  const double s = std::sin(axis_angle_rad);
  const Complex e = std::exp(Complex(0.0, retardance_rad));
  const Complex j00 = c * c + e * s * s;
  const Complex j01 = c * s * (Complex(1.0, 0.0) - e);
  const Complex j11 = s * s + e * c * c;
  ModeMap m;
  ModeMap::Image h, v;
  if (std::abs(j00) > kPruneTolerance) h.push_back({{port, Pol::H}, j00});
  if (std::abs(j01) > kPruneTolerance) h.push_back({{port, Pol::V}, j01});
  if (std::abs(j01) > kPruneTolerance) v.push_back({{port, Pol::H}, j01});
  if (std::abs(j11) > kPruneTolerance) v.push_back({{port, Pol::V}, j11});
  m.set_image({port, Pol::H}, std::move(h));
  m.set_image({port, Pol::V}, std::move(v));
  return m;
}

inline ModeMap half_wave_plate(double axis_angle_rad, std::int32_t port) {
  return waveplate_map(3.14159265358979323846, axis_angle_rad, port);
}

// Polarizing beam splitter: H transmits (in1->out1, in2->out2), V reflects
// with phase i (in1->out2, in2->out1). The i-on-reflection convention keeps
// the four-slot matrix unitary and is symmetric between the two inputs.
inline ModeMap pbs_map(std::int32_t in1, std::int32_t in2, std::int32_t out1,
                       std::int32_t out2) {
  if (in1 == in2 || out1 == out2) {
    throw DuplicatePorts("pbs ports must be pairwise distinct per side");
  }
  const Complex one(1.0, 0.0);
  const Complex i(0.0, 1.0);
  ModeMap m;
  m.set_image({in1, Pol::H}, {{{out1, Pol::H}, one}});
  m.set_image({in1, Pol::V}, {{{out2, Pol::V}, i}});
  m.set_image({in2, Pol::H}, {{{out2, Pol::H}, one}});
  m.set_image({in2, Pol::V}, {{{out1, Pol::V}, i}});
  return m;
}

// Polarization-independent beam splitter with the given intensity
// reflectivity. Transmission amplitude sqrt(1-R); reflection sqrt(R) with
// phase i on both reflected paths. Reflectivity 0 routes in1->out1, in2->out2.
inline ModeMap bs_map(double reflectivity, std::int32_t in1, std::int32_t in2,
                      std::int32_t out1, std::int32_t out2) {
  if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
    throw OutOfRange("beam splitter reflectivity must lie in [0, 1]");
  }
  if (in1 == in2 || out1 == out2) {
    throw DuplicatePorts("bs ports must be pairwise distinct per side");
  }
  const double t = std::sqrt(1.0 - reflectivity);
  const Complex ir(0.0, std::sqrt(reflectivity));
  ModeMap m;
  for (Pol p : {Pol::H, Pol::V}) {
    ModeMap::Image a, b;
    if (t > kPruneTolerance) a.push_back({{out1, p}, Complex(t, 0.0)});
    if (std::abs(ir) > kPruneTolerance) a.push_back({{out2, p}, ir});
    if (std::abs(ir) > kPruneTolerance) b.push_back({{out1, p}, ir});
    if (t > kPruneTolerance) b.push_back({{out2, p}, Complex(t, 0.0)});
    m.set_image({in1, p}, std::move(a));
    m.set_image({in2, p}, std::move(b));
  }
  return m;
}

// Left-to-right composition of a train of elements. The slots each stage
// produces must be covered by the next stage.
inline ModeMap compose(const std::vector<ModeMap>& stages) {
  if (stages.empty()) throw OutOfRange("compose requires at least one map");
  ModeMap m = stages.front();
  for (std::size_t k = 1; k < stages.size(); ++k) m = m.then(stages[k]);
  return m;
}

}  // namespace biphoton
