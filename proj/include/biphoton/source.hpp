#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "biphoton/fock.hpp"
#include "biphoton/mode_map.hpp"
#include "biphoton/optics.hpp"

namespace biphoton {

// Port layout of the loop source. Pairs generated in the clockwise direction
// enter the recombining PBS on kPortCw, counter-clockwise pairs on kPortCcw,
// and the post-selected pair leaves on kPortOut1 / kPortOut2.
inline constexpr std::int32_t kPortCw = 1;
inline constexpr std::int32_t kPortCcw = 2;
inline constexpr std::int32_t kPortOut1 = 3;
inline constexpr std::int32_t kPortOut2 = 4;

enum class Direction { kClockwise, kCounterClockwise };

// Spectro-temporal bin packing. Each spectral grid index carries two binary
// temporal sub-labels: which crystal's walk-off slot the photon sits in and
// which propagation-direction slot. Orthogonal sub-bins model distinguishing
// timing information; overlap amplitudes decide how emission splits between
// sub-bin 0 (indistinguishable part) and sub-bin 1 (orthogonal remainder).
constexpr std::int32_t spectro_temporal_bin(std::int32_t spectral_index,
                                            std::int32_t crystal_sub,
                                            std::int32_t direction_sub) {
  return spectral_index * 4 + crystal_sub * 2 + direction_sub;
}

constexpr std::int32_t spectral_index_of_bin(std::int32_t bin) { return bin / 4; }

// Gaussian wave-packet overlap magnitude for two packets offset in time.
inline double temporal_overlap(double delay_fs, double coherence_time_fs) {
  if (!(coherence_time_fs > 0.0)) {
    throw NonpositiveCoherence("coherence time must be positive");
  }
  const double x = delay_fs / coherence_time_fs;
  return std::exp(-0.5 * x * x);
}

// Coherence time of a Gaussian packet whose intensity spectrum has the given
// FWHM: tau = lambda^2 / (2 pi c sigma_lambda), sigma = FWHM / sqrt(8 ln 2).
inline double coherence_time_from_bandwidth_fs(double fwhm_nm, double center_nm) {
  if (!(fwhm_nm > 0.0) || !(center_nm > 0.0)) {
    throw OutOfRange("bandwidth and center wavelength must be positive");
  }
  constexpr double kSpeedOfLightNmPerFs = 299.792458;
  constexpr double kSqrt8Ln2 = 2.3548200450309493;
  constexpr double kTwoPi = 6.2831853071795864769;
  const double sigma_nm = fwhm_nm / kSqrt8Ln2;
  return center_nm * center_nm / (kTwoPi * kSpeedOfLightNmPerFs * sigma_nm);
}

// Residual wavelength-dependent phase picked up by the counter-clockwise arm,
// modeled as a quadratic in the offset from the center wavelength.
inline double phase_profile(double lambda_nm, const std::array<double, 3>& coeffs,
                            double center_nm = 810.0) {
  const double d = lambda_nm - center_nm;
  return coeffs[0] + coeffs[1] * d + coeffs[2] * d * d;
}

// Normalized complex amplitude per spectral bin on a uniform wavelength grid.
// Bin k sits at center + (k - (n-1)/2) * bin_width, so the grid is symmetric
// about the center wavelength. Squared magnitudes always sum to 1.
class SpectralEnvelope {
 public:
  SpectralEnvelope(std::vector<Complex> amplitudes, double bin_width_nm,
                   double center_nm)
      : amps_(std::move(amplitudes)), bin_width_nm_(bin_width_nm), center_nm_(center_nm) {
    if (amps_.empty()) throw EmptyEnvelope("envelope needs at least one bin");
    if (!(bin_width_nm_ > 0.0)) throw OutOfRange("bin width must be positive");
    double n2 = 0.0;
    for (const Complex& a : amps_) n2 += std::norm(a);
    if (n2 <= 0.0) throw EmptyEnvelope("envelope amplitudes are all zero");
    const double inv = 1.0 / std::sqrt(n2);
    for (Complex& a : amps_) a *= inv;
  }

  static SpectralEnvelope single_bin(double center_nm, double bin_width_nm = 1.0) {
    return SpectralEnvelope({Complex(1.0, 0.0)}, bin_width_nm, center_nm);
  }

  // Gaussian intensity profile with the given intensity FWHM, sampled on a
  // grid of `bins` points spanning [center - span/2, center + span/2].
  static SpectralEnvelope gaussian(int bins, double span_nm, double center_nm,
                                   double fwhm_nm) {
    if (bins < 1) throw EmptyEnvelope("envelope needs at least one bin");
    if (!(fwhm_nm > 0.0)) throw OutOfRange("FWHM must be positive");
    constexpr double kSqrt8Ln2 = 2.3548200450309493;
    const double width = bins > 1 ? span_nm / (bins - 1) : span_nm;
    if (!(width > 0.0)) throw OutOfRange("span must be positive");
    const double sigma = fwhm_nm / kSqrt8Ln2;
    std::vector<Complex> amps(bins);
    for (int k = 0; k < bins; ++k) {
      const double d = (k - 0.5 * (bins - 1)) * width;
      // Amplitude = sqrt of intensity, so the intensity FWHM is fwhm_nm.
      amps[k] = Complex(std::exp(-d * d / (4.0 * sigma * sigma)), 0.0);
    }
    return SpectralEnvelope(std::move(amps), width, center_nm);
  }

  // sinc^2 intensity profile with the given intensity FWHM; the amplitude
  // keeps the sign of its side lobes.
  static SpectralEnvelope sinc2(int bins, double span_nm, double center_nm,
                                double fwhm_nm) {
    if (bins < 1) throw EmptyEnvelope("envelope needs at least one bin");
    if (!(fwhm_nm > 0.0)) throw OutOfRange("FWHM must be positive");
    // sinc^2(x) = 1/2 at x ~= 1.391557, so x = 2 * 1.391557 * d / fwhm.
    constexpr double kHalfPower = 1.3915573810029279;
    const double width = bins > 1 ? span_nm / (bins - 1) : span_nm;
    if (!(width > 0.0)) throw OutOfRange("span must be positive");
    std::vector<Complex> amps(bins);
    for (int k = 0; k < bins; ++k) {
      const double d = (k - 0.5 * (bins - 1)) * width;
      const double x = 2.0 * kHalfPower * d / fwhm_nm;
      const double s = x == 0.0 ? 1.0 : std::sin(x) / x;
      amps[k] = Complex(s, 0.0);
    }
    return SpectralEnvelope(std::move(amps), width, center_nm);
  }

  // Default broadband grid: 41 bins across +-20 nm about 810 nm, Gaussian
  // intensity with 20 nm FWHM. Resolves the quadratic phase model to well
  // under the visibility tolerances used downstream.
  static SpectralEnvelope broadband_default() {
    return gaussian(41, 40.0, 810.0, 20.0);
  }

  const std::vector<Complex>& bin_amplitudes() const { return amps_; }
  int bin_count() const { return static_cast<int>(amps_.size()); }
  double bin_width_nm() const { return bin_width_nm_; }
  double center_nm() const { return center_nm_; }

  double wavelength_of(int k) const {
    return center_nm_ + (k - 0.5 * (amps_.size() - 1)) * bin_width_nm_;
  }

  double weight(int k) const { return std::norm(amps_[static_cast<std::size_t>(k)]); }

  bool same_grid(const SpectralEnvelope& other, double tol = 1e-9) const {
    return amps_.size() == other.amps_.size() &&
           std::abs(bin_width_nm_ - other.bin_width_nm_) <= tol &&
           std::abs(center_nm_ - other.center_nm_) <= tol;
  }

 private:
  std::vector<Complex> amps_;
  double bin_width_nm_;
  double center_nm_;
};

// Crystal and pump quantities recorded for provenance. Nothing in the model
// reads these; they exist so run reports can carry the hardware context.
struct SourceMetadata {
  double pump_wavelength_nm = 405.0;
  double pair_center_wavelength_nm = 810.0;
  double crystal_length_mm = 11.48;
  double crystal_temperature_c = 107.0;
};

// Full description of the bidirectionally pumped crossed-crystal pair source.
// Defaults describe the ideal narrowband operating point: relative phase pi,
// single-bin spectra, no timing offsets. The coherence time converts the two
// delay knobs into overlap amplitudes; its default matches a 20 nm FWHM
// Gaussian packet at 810 nm.
struct SourceConfig {
  double phi_rad = 3.14159265358979323846;
  SpectralEnvelope envelope_c1 = SpectralEnvelope::single_bin(810.0);
  SpectralEnvelope envelope_c2 = SpectralEnvelope::single_bin(810.0);
  double cw_ccw_delay_fs = 0.0;
  double crystal_delay_fs = 0.0;
  double coherence_time_fs = coherence_time_from_bandwidth_fs(20.0, 810.0);
  std::array<double, 3> phase_profile_coeffs = {0.0, 0.0, 0.0};
  SourceMetadata metadata;
};

inline SourceConfig ideal_source_config() { return SourceConfig{}; }

inline SourceConfig broadband_source_config() {
  SourceConfig cfg;
  cfg.envelope_c1 = SpectralEnvelope::broadband_default();
  cfg.envelope_c2 = SpectralEnvelope::broadband_default();
  return cfg;
}

// Two-photon emission polynomial of the crossed-crystal pair in one pumping
// direction, written on that direction's PBS input port. Per spectral bin k:
//
//   [ e1_k * u1^2 + e^{i phi} * e2_k * u2^2 ] / sqrt(2)
//
// where u1 creates a diagonally polarized photon from the first crystal and
// u2 an antidiagonally polarized photon from the second. Walk-off between the
// crystals moves a gamma_c fraction of u2's amplitude off u1's temporal
// sub-bin, and a direction-dependent loop delay does the same between the
// counter-clockwise and clockwise emissions (the clockwise arm is the timing
// reference). The counter-clockwise arm also picks up the configured
// wavelength-dependent phase per bin.
inline OperatorPoly crossed_crystal_poly(const SourceConfig& cfg, Direction dir) {
  const SpectralEnvelope& e1 = cfg.envelope_c1;
  const SpectralEnvelope& e2 = cfg.envelope_c2;
  if (!e1.same_grid(e2)) {
    throw UniverseMismatch("crystal envelopes must share one bin grid");
  }
  const bool ccw = dir == Direction::kCounterClockwise;
  const std::int32_t port = ccw ? kPortCcw : kPortCw;
  const double gc = temporal_overlap(cfg.crystal_delay_fs, cfg.coherence_time_fs);
  const double dc = std::sqrt(std::max(0.0, 1.0 - gc * gc));
  const double gd = ccw ? temporal_overlap(cfg.cw_ccw_delay_fs, cfg.coherence_time_fs) : 1.0;
  const double dd = std::sqrt(std::max(0.0, 1.0 - gd * gd));
  const Complex crystal2_phase = std::exp(Complex(0.0, cfg.phi_rad));
  constexpr double kInvSqrt2 = 0.70710678118654752440;

  OperatorPoly total;
  for (int k = 0; k < e1.bin_count(); ++k) {
    const Complex a1 = e1.bin_amplitudes()[static_cast<std::size_t>(k)];
    const Complex a2 = e2.bin_amplitudes()[static_cast<std::size_t>(k)];
    if (std::abs(a1) <= kPruneTolerance && std::abs(a2) <= kPruneTolerance) continue;

    OperatorPoly u1 =
        OperatorPoly::diagonal(port, spectro_temporal_bin(k, 0, 0)) * Complex(gd, 0.0);
    if (dd > 0.0) {
      u1 += OperatorPoly::diagonal(port, spectro_temporal_bin(k, 0, 1)) * Complex(dd, 0.0);
    }
    OperatorPoly u2;
    for (int c = 0; c < 2; ++c) {
      for (int d = 0; d < 2; ++d) {
        const double f = (c == 0 ? gc : dc) * (d == 0 ? gd : dd);
        if (f <= 0.0) continue;
        u2 += OperatorPoly::antidiagonal(port, spectro_temporal_bin(k, c, d)) *
              Complex(f, 0.0);
      }
    }

    OperatorPoly term = (u1 * u1) * a1;
    term += (u2 * u2) * (crystal2_phase * a2);
    term *= Complex(kInvSqrt2, 0.0);
    if (ccw) {
      const double phase =
          phase_profile(e1.wavelength_of(k), cfg.phase_profile_coeffs, e1.center_nm());
      term *= std::exp(Complex(0.0, phase));
    }
    total += term;
  }
  if (total.is_zero()) throw EmptyEnvelope("source polynomial vanished");
  return total;
}

// Result of closing the loop: the coincidence-post-selected two-photon state
// on the output ports, normalized, plus the probability weight of the
// post-selection (the anti-bunching probability). A vanishing coincidence
// subspace yields a zero state and weight 0.
struct SagnacState {
  StateVector state;
  double weight = 0.0;
};

inline SagnacState sagnac_state(const SourceConfig& cfg) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  OperatorPoly pump = crossed_crystal_poly(cfg, Direction::kClockwise);
  pump += crossed_crystal_poly(cfg, Direction::kCounterClockwise);
  pump *= Complex(kInvSqrt2, 0.0);

  const ModeMap pbs = pbs_map(kPortCw, kPortCcw, kPortOut1, kPortOut2);
  const StateVector full = apply_to_vacuum(substitute(pump, pbs));
  const double total = norm_squared(full);

  StateVector post;
  for (const auto& [ket, amp] : full.amplitudes()) {
    int n1 = 0;
    int n2 = 0;
    for (const auto& [mode, n] : ket.occupations()) {
      if (mode.port == kPortOut1) n1 += n;
      if (mode.port == kPortOut2) n2 += n;
    }
    if (n1 == 1 && n2 == 1) post.add_amplitude(ket, amp);
  }
  const double kept = norm_squared(post);
  if (kept <= 0.0 || total <= 0.0) return {StateVector(), 0.0};
  return {normalize(post), kept / total};
}

// Reference pair state (|H V> + |V H>) / sqrt(2) across the output ports on
// spectral bin 0.
inline StateVector psi_plus_state() {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const std::int32_t b = spectro_temporal_bin(0, 0, 0);
  StateVector s;
  s.add_amplitude(FockKet::from_occupations({{{kPortOut1, Pol::H, b}, 1},
                                             {{kPortOut2, Pol::V, b}, 1}}),
                  Complex(kInvSqrt2, 0.0));
  s.add_amplitude(FockKet::from_occupations({{{kPortOut1, Pol::V, b}, 1},
                                             {{kPortOut2, Pol::H, b}, 1}}),
                  Complex(kInvSqrt2, 0.0));
  return s;
}

// Overlap of a two-port pair state with the (|HV> + |VH>)/sqrt(2) polarization
// structure, bins traced out: the squared projections onto that combination
// are summed per (bin on out1, bin on out2) sector. Global phase drops out.
inline double psi_plus_fidelity(const StateVector& s) {
  std::map<std::pair<std::int32_t, std::int32_t>, Complex> hv;
  std::map<std::pair<std::int32_t, std::int32_t>, Complex> vh;
  for (const auto& [ket, amp] : s.amplitudes()) {
    if (ket.total_photons() != 2 || ket.occupations().size() != 2) continue;
    const auto& m1 = ket.occupations()[0].first;
    const auto& m2 = ket.occupations()[1].first;
    const ModeLabel& out1 = m1.port == kPortOut1 ? m1 : m2;
    const ModeLabel& out2 = m1.port == kPortOut1 ? m2 : m1;
    if (out1.port != kPortOut1 || out2.port != kPortOut2) continue;
    if (out1.pol == Pol::H && out2.pol == Pol::V) {
      hv[{out1.bin, out2.bin}] += amp;
    } else if (out1.pol == Pol::V && out2.pol == Pol::H) {
      vh[{out1.bin, out2.bin}] += amp;
    }
  }
  double f = 0.0;
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  for (const auto& [key, a] : hv) {
    const auto it = vh.find(key);
    const Complex b = it == vh.end() ? Complex(0.0, 0.0) : it->second;
    f += std::norm((a + b) * kInvSqrt2);
  }
  for (const auto& [key, b] : vh) {
    if (hv.find(key) == hv.end()) f += std::norm(b * kInvSqrt2);
  }
  return f;
}

// Rectangular spectral filter: bins farther than half the bandwidth from the
// grid center are removed, the rest renormalized. Transmission is the kept
// intensity fraction.
struct FilteredEnvelope {
  SpectralEnvelope envelope;
  double transmission = 0.0;
};

inline FilteredEnvelope rect_filter(const SpectralEnvelope& e, double bandwidth_nm) {
  if (!(bandwidth_nm > 0.0)) throw OutOfRange("filter bandwidth must be positive");
  std::vector<Complex> amps = e.bin_amplitudes();
  double kept = 0.0;
  for (int k = 0; k < e.bin_count(); ++k) {
    if (std::abs(e.wavelength_of(k) - e.center_nm()) > 0.5 * bandwidth_nm) {
      amps[static_cast<std::size_t>(k)] = Complex(0.0, 0.0);
    } else {
      kept += e.weight(k);
    }
  }
  if (kept <= 0.0) throw EmptyEnvelope("filter removed every spectral bin");
  return {SpectralEnvelope(std::move(amps), e.bin_width_nm(), e.center_nm()), kept};
}

// Same filter applied to both crystal envelopes of a config; transmission is
// averaged over the two (identical for identical envelopes).
struct FilteredConfig {
  SourceConfig config;
  double transmission = 0.0;
};

inline FilteredConfig rect_filtered(const SourceConfig& cfg, double bandwidth_nm) {
  FilteredEnvelope f1 = rect_filter(cfg.envelope_c1, bandwidth_nm);
  FilteredEnvelope f2 = rect_filter(cfg.envelope_c2, bandwidth_nm);
  SourceConfig out = cfg;
  out.envelope_c1 = std::move(f1.envelope);
  out.envelope_c2 = std::move(f2.envelope);
  return {std::move(out), 0.5 * (f1.transmission + f2.transmission)};
}

}  // namespace biphoton
