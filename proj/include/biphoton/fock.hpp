#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "biphoton/errors.hpp"

namespace biphoton {

using Complex = std::complex<double>;

// Coefficients whose magnitude falls below this after arithmetic are dropped.
inline constexpr double kPruneTolerance = 1e-14;

// Hard cap on the photon number carried by any monomial or ket. The cap
// bounds memory and turns a runaway expansion into an error instead of a hang.
inline constexpr int kPhotonCap = 8;

enum class Pol : std::uint8_t { H = 0, V = 1 };

inline char pol_char(Pol p) { return p == Pol::H ? 'H' : 'V'; }

// One bosonic mode: spatial port, polarization, spectro-temporal bin index.
// The ordering is total and lexicographic in (port, pol, bin); canonical
// forms throughout the library sort modes by it.
struct ModeLabel {
  std::int32_t port = 0;
  Pol pol = Pol::H;
  std::int32_t bin = 0;

  friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

inline std::string to_string(const ModeLabel& m) {
  std::ostringstream os;
  os << '(' << m.port << ',' << pol_char(m.pol) << ',' << m.bin << ')';
  return os.str();
}

namespace detail {

// Shared representation for "sorted modes with positive integer counts".
using ModePowers = std::vector<std::pair<ModeLabel, int>>;

inline void merge_power(ModePowers& v, const ModeLabel& m, int n) {
  auto it = std::lower_bound(
      v.begin(), v.end(), m,
      [](const auto& entry, const ModeLabel& key) { return entry.first < key; });
  if (it != v.end() && it->first == m) {
    it->second += n;
  } else {
    v.insert(it, {m, n});
  }
}

inline int total_count(const ModePowers& v) {
  int t = 0;
  for (const auto& [m, n] : v) t += n;
  return t;
}

inline const double* sqrt_factorials() {
  static const double table[kPhotonCap + 1] = {
      1.0,
      1.0,
      1.4142135623730950488,   // sqrt(2!)
      2.4494897427831780982,   // sqrt(3!)
      4.8989794855663561964,   // sqrt(4!)
      10.954451150103322269,   // sqrt(5!)
      26.832815729997476357,   // sqrt(6!)
      70.99295739719539250,    // sqrt(7!)
      200.79840636817813152};  // sqrt(8!)
  return table;
}

}  // namespace detail

// Product of creation operators with positive integer exponents, kept sorted
// by mode label. Creation operators on distinct modes commute, so the sorted
// exponent list is a canonical form: equal products compare equal. The empty
// product is the multiplicative identity.
class CreationMonomial {
 public:
  CreationMonomial() = default;

  static CreationMonomial one() { return CreationMonomial(); }

  static CreationMonomial single(const ModeLabel& m, int exponent = 1) {
    if (exponent < 0) throw OutOfRange("creation exponent must be >= 0");
    if (exponent > kPhotonCap) throw PhotonCapExceeded("exponent above photon cap");
    CreationMonomial r;
    if (exponent > 0) r.powers_.push_back({m, exponent});
    return r;
  }

  const detail::ModePowers& powers() const { return powers_; }

  int degree() const { return detail::total_count(powers_); }

  CreationMonomial operator*(const CreationMonomial& rhs) const {
    if (degree() + rhs.degree() > kPhotonCap) {
      throw PhotonCapExceeded("monomial product above photon cap");
    }
    CreationMonomial r = *this;
    for (const auto& [m, n] : rhs.powers_) detail::merge_power(r.powers_, m, n);
    return r;
  }

  friend auto operator<=>(const CreationMonomial&, const CreationMonomial&) = default;

 private:
  detail::ModePowers powers_;
};

inline std::string to_string(const CreationMonomial& mono) {
  if (mono.powers().empty()) return "1";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, n] : mono.powers()) {
    if (!first) os << ' ';
    first = false;
    os << "a+" << to_string(m);
    if (n > 1) os << '^' << n;
  }
  return os.str();
}

// Fock basis ket over a set of modes: sorted occupations, zero counts never
// stored. The empty ket is the vacuum. Kets with different occupations are
// orthonormal by construction.
class FockKet {
 public:
  FockKet() = default;

  static FockKet vacuum() { return FockKet(); }

  static FockKet from_occupations(std::vector<std::pair<ModeLabel, int>> occ) {
    FockKet k;
    for (const auto& [m, n] : occ) {
      if (n < 0) throw OutOfRange("negative occupation");
      if (n > 0) detail::merge_power(k.occ_, m, n);
    }
    if (k.total_photons() > kPhotonCap) throw PhotonCapExceeded("ket above photon cap");
    return k;
  }

  const detail::ModePowers& occupations() const { return occ_; }

  int total_photons() const { return detail::total_count(occ_); }

  int occupation_of(const ModeLabel& m) const {
    for (const auto& [mode, n] : occ_) {
      if (mode == m) return n;
    }
    return 0;
  }

  friend auto operator<=>(const FockKet&, const FockKet&) = default;

 private:
  detail::ModePowers occ_;
};

inline std::string to_string(const FockKet& k) {
  std::ostringstream os;
  os << '|';
  bool first = true;
  for (const auto& [m, n] : k.occupations()) {
    if (!first) os << ',';
    first = false;
    os << n << ':' << to_string(m);
  }
  if (first) os << "vac";
  os << '>';
  return os.str();
}

// Complex linear combination of creation monomials. Terms with coefficient
// magnitude below kPruneTolerance are dropped by arithmetic, so the zero
// polynomial has an empty term map and equal polynomials have equal maps.
class OperatorPoly {
 public:
  using TermMap = std::map<CreationMonomial, Complex>;

  OperatorPoly() = default;

  static OperatorPoly zero() { return OperatorPoly(); }

  // The scalar 1 (empty monomial); multiplicative identity.
  static OperatorPoly unit() {
    OperatorPoly p;
    p.terms_[CreationMonomial::one()] = Complex(1.0, 0.0);
    return p;
  }

  static OperatorPoly creation(const ModeLabel& m) {
    OperatorPoly p;
    p.terms_[CreationMonomial::single(m)] = Complex(1.0, 0.0);
    return p;
  }

  // Diagonal-polarization creation operator on (port, bin):
  // (a+_H + a+_V) / sqrt(2). The H/V basis is the basis of record; the
  // diagonal basis only ever appears through this constructor.
  static OperatorPoly diagonal(std::int32_t port, std::int32_t bin) {
    constexpr double inv = 0.70710678118654752440;
    OperatorPoly p;
    p.terms_[CreationMonomial::single({port, Pol::H, bin})] = inv;
    p.terms_[CreationMonomial::single({port, Pol::V, bin})] = inv;
    return p;
  }

  // Antidiagonal-polarization creation operator: (a+_H - a+_V) / sqrt(2).
  static OperatorPoly antidiagonal(std::int32_t port, std::int32_t bin) {
    constexpr double inv = 0.70710678118654752440;
    OperatorPoly p;
    p.terms_[CreationMonomial::single({port, Pol::H, bin})] = inv;
    p.terms_[CreationMonomial::single({port, Pol::V, bin})] = -inv;
    return p;
  }

  const TermMap& terms() const { return terms_; }

  bool is_zero() const { return terms_.empty(); }

  std::size_t term_count() const { return terms_.size(); }

  int max_degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  void add_term(const CreationMonomial& m, Complex c) {
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      if (std::abs(c) > kPruneTolerance) terms_[m] = c;
      return;
    }
    it->second += c;
    if (std::abs(it->second) <= kPruneTolerance) terms_.erase(it);
  }

  OperatorPoly& operator+=(const OperatorPoly& rhs) {
    for (const auto& [m, c] : rhs.terms_) add_term(m, c);
    return *this;
  }

  OperatorPoly& operator-=(const OperatorPoly& rhs) {
    for (const auto& [m, c] : rhs.terms_) add_term(m, -c);
    return *this;
  }

  OperatorPoly& operator*=(Complex s) {
    if (std::abs(s) <= kPruneTolerance) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    prune();
    return *this;
  }

  void prune(double tol = kPruneTolerance) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(it->second) <= tol) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
  }

  friend OperatorPoly operator+(OperatorPoly a, const OperatorPoly& b) { return a += b; }
  friend OperatorPoly operator-(OperatorPoly a, const OperatorPoly& b) { return a -= b; }
  friend OperatorPoly operator*(OperatorPoly a, Complex s) { return a *= s; }
  friend OperatorPoly operator*(Complex s, OperatorPoly a) { return a *= s; }

  // Polynomial product. Contributions to each result monomial are summed in
  // an order canonical in the unordered factor pair, so a*b and b*a produce
  // bitwise identical coefficients.
  friend OperatorPoly operator*(const OperatorPoly& a, const OperatorPoly& b) {
    struct Contribution {
      CreationMonomial product;
      const CreationMonomial* lo;
      const CreationMonomial* hi;
      Complex coeff;
    };
    std::vector<Contribution> contributions;
    contributions.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) {
        const CreationMonomial* lo = &ma;
        const CreationMonomial* hi = &mb;
        if (*hi < *lo) std::swap(lo, hi);
        contributions.push_back({ma * mb, lo, hi, ca * cb});
      }
    }
    std::sort(contributions.begin(), contributions.end(),
              [](const Contribution& x, const Contribution& y) {
                if (x.product != y.product) return x.product < y.product;
                if (*x.lo != *y.lo) return *x.lo < *y.lo;
                return *x.hi < *y.hi;
              });
    OperatorPoly r;
    for (const auto& c : contributions) r.add_term(c.product, c.coeff);
    r.prune();
    return r;
  }

 private:
  TermMap terms_;
};

inline std::string to_string(const OperatorPoly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    os << '(' << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)*"
       << to_string(m);
  }
  return os.str();
}

// Complex linear combination of Fock kets. Immutable value semantics; all
// operations return new states.
class StateVector {
 public:
  using AmplitudeMap = std::map<FockKet, Complex>;

  StateVector() = default;

  static StateVector vacuum() {
    StateVector s;
    s.amps_[FockKet::vacuum()] = Complex(1.0, 0.0);
    return s;
  }

  const AmplitudeMap& amplitudes() const { return amps_; }

  bool is_zero() const { return amps_.empty(); }

  Complex amplitude(const FockKet& k) const {
    auto it = amps_.find(k);
    return it == amps_.end() ? Complex(0.0, 0.0) : it->second;
  }

  void add_amplitude(const FockKet& k, Complex c) {
    auto it = amps_.find(k);
    if (it == amps_.end()) {
      if (std::abs(c) > kPruneTolerance) amps_[k] = c;
      return;
    }
    it->second += c;
    if (std::abs(it->second) <= kPruneTolerance) amps_.erase(it);
  }

  StateVector& operator+=(const StateVector& rhs) {
    for (const auto& [k, c] : rhs.amps_) add_amplitude(k, c);
    return *this;
  }

  StateVector& operator*=(Complex s) {
    if (std::abs(s) <= kPruneTolerance) {
      amps_.clear();
      return *this;
    }
    for (auto& [k, c] : amps_) c *= s;
    return *this;
  }

  friend StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
  friend StateVector operator*(StateVector a, Complex s) { return a *= s; }
  friend StateVector operator*(Complex s, StateVector a) { return a *= s; }

 private:
  AmplitudeMap amps_;
};

// Squared norm, exact sum over ket amplitudes.
inline double norm_squared(const StateVector& s) {
  double t = 0.0;
  for (const auto& [k, c] : s.amplitudes()) t += std::norm(c);
  return t;
}

inline double norm(const StateVector& s) { return std::sqrt(norm_squared(s)); }

inline StateVector normalize(const StateVector& s) {
  const double n = norm(s);
  if (n <= 0.0) throw ZeroState("cannot normalize a zero state");
  return s * Complex(1.0 / n, 0.0);
}

// <a|b>; the bra side is conjugated.
inline Complex inner_product(const StateVector& a, const StateVector& b) {
  // Walk the smaller map.
  const StateVector& small = a.amplitudes().size() <= b.amplitudes().size() ? a : b;
  const StateVector& large = &small == &a ? b : a;
  Complex t(0.0, 0.0);
  for (const auto& [k, c] : small.amplitudes()) {
    const Complex other = large.amplitude(k);
    if (&small == &a) {
      t += std::conj(c) * other;
    } else {
      t += std::conj(other) * c;
    }
  }
  return t;
}

// Apply a creation-operator polynomial to the vacuum. A monomial with mode
// exponents {m -> n_m} contributes amplitude prod_m sqrt(n_m!) on the ket
// with occupations {m -> n_m}: (a+)^n |vac> = sqrt(n!) |n>. Monomials map to
// distinct kets, so there are no collisions.
inline StateVector apply_to_vacuum(const OperatorPoly& p) {
  if (p.is_zero()) throw ZeroOperator("cannot apply the zero polynomial to vacuum");
  const double* sf = detail::sqrt_factorials();
  StateVector s;
  for (const auto& [mono, coeff] : p.terms()) {
    double factor = 1.0;
    for (const auto& [m, n] : mono.powers()) factor *= sf[n];
    s.add_amplitude(FockKet::from_occupations(
                        {mono.powers().begin(), mono.powers().end()}),
                    coeff * factor);
  }
  return s;
}

// One entry of an occupation pattern: a required photon count on the modes
// matching (port, pol?, bin?). Absent pol or bin fields are wildcards and
// are traced out. Entries of one pattern must not overlap.
struct PatternTerm {
  std::int32_t port = 0;
  std::optional<Pol> pol;
  std::optional<std::int32_t> bin;
  int count = 1;
};

using OccupationPattern = std::vector<PatternTerm>;

inline bool mode_matches(const ModeLabel& m, const PatternTerm& t) {
  if (m.port != t.port) return false;
  if (t.pol && m.pol != *t.pol) return false;
  if (t.bin && m.bin != *t.bin) return false;
  return true;
}

// Probability that a measurement of occupations on a normalized state finds
// exactly the pattern: the sum of |amplitude|^2 over kets whose occupations
// aggregate to the pattern counts, with wildcarded fields traced out and no
// photons anywhere else.
inline double occupation_probability(const StateVector& s, const OccupationPattern& pattern) {
  const double n2 = norm_squared(s);
  if (std::abs(n2 - 1.0) > 1e-9) {
    throw NotNormalized("occupation_probability requires a normalized state");
  }
  int want_total = 0;
  for (const auto& t : pattern) {
    if (t.count < 0) throw OutOfRange("pattern count must be >= 0");
    want_total += t.count;
  }
  double prob = 0.0;
  for (const auto& [ket, amp] : s.amplitudes()) {
    if (ket.total_photons() != want_total) continue;
    bool ok = true;
    for (const auto& t : pattern) {
      int have = 0;
      for (const auto& [m, n] : ket.occupations()) {
        if (mode_matches(m, t)) have += n;
      }
      if (have != t.count) {
        ok = false;
        break;
      }
    }
    if (ok) prob += std::norm(amp);
  }
  return prob;
}

}  // namespace biphoton
