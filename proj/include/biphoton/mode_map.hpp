#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "biphoton/fock.hpp"

namespace biphoton {

// A (port, polarization) slot. Mode maps act on these; the spectro-temporal
// bin of a mode passes through unchanged, which is what it means for an
// optical element to act identically on every bin.
struct PortPol {
  std::int32_t port = 0;
  Pol pol = Pol::H;

  friend auto operator<=>(const PortPol&, const PortPol&) = default;
};

// Linear substitution on creation operators in the Heisenberg picture:
// a+_x -> sum_y u(x,y) a+_y, applied uniformly across bins. The matrix over
// the declared universe must be unitary (checked by is_unitary, and by
// construction for the optical elements), so norms are preserved and photon
// number is conserved.
class ModeMap {
 public:
  using Image = std::vector<std::pair<PortPol, Complex>>;

  ModeMap() = default;

  static ModeMap identity(const std::vector<std::int32_t>& ports) {
    ModeMap m;
    for (std::int32_t p : ports) {
      for (Pol pol : {Pol::H, Pol::V}) {
        m.images_[{p, pol}] = {{{p, pol}, Complex(1.0, 0.0)}};
      }
    }
    return m;
  }

  void set_image(const PortPol& from, Image to) { images_[from] = std::move(to); }

  bool covers(const PortPol& slot) const { return images_.count(slot) != 0; }

  const std::map<PortPol, Image>& images() const { return images_; }

  std::set<PortPol> domain() const {
    std::set<PortPol> d;
    for (const auto& [from, to] : images_) d.insert(from);
    return d;
  }

  std::set<PortPol> codomain() const {
    std::set<PortPol> c;
    for (const auto& [from, to] : images_) {
      for (const auto& [slot, u] : to) c.insert(slot);
    }
    return c;
  }

  // Image of a full mode label; the bin is carried through.
  std::vector<std::pair<ModeLabel, Complex>> image_of(const ModeLabel& m) const {
    auto it = images_.find(PortPol{m.port, m.pol});
    if (it == images_.end()) {
      throw UnmappedMode("no image for mode " + to_string(m));
    }
    std::vector<std::pair<ModeLabel, Complex>> out;
    out.reserve(it->second.size());
    for (const auto& [slot, u] : it->second) {
      out.push_back({ModeLabel{slot.port, slot.pol, m.bin}, u});
    }
    return out;
  }

  // this followed by next. Every slot this map produces must be covered by
  // next, otherwise the two maps talk about different universes.
  ModeMap then(const ModeMap& next) const {
    for (const auto& slot : codomain()) {
      if (!next.covers(slot)) {
        throw UniverseMismatch("composition output slot not covered by the next map");
      }
    }
    ModeMap r;
    for (const auto& [from, to] : images_) {
      std::map<PortPol, Complex> acc;
      for (const auto& [mid, u] : to) {
        for (const auto& [fin, v] : next.images_.at(mid)) acc[fin] += u * v;
      }
      Image img;
      for (const auto& [fin, u] : acc) {
        if (std::abs(u) > kPruneTolerance) img.push_back({fin, u});
      }
      r.images_[from] = std::move(img);
    }
    return r;
  }

  // Conjugate transpose. For a unitary map this is the inverse.
  ModeMap adjoint() const {
    std::map<PortPol, std::map<PortPol, Complex>> acc;
    for (const auto& [from, to] : images_) {
      for (const auto& [slot, u] : to) acc[slot][from] += std::conj(u);
    }
    ModeMap r;
    for (const auto& [from, row] : acc) {
      Image img;
      for (const auto& [slot, u] : row) {
        if (std::abs(u) > kPruneTolerance) img.push_back({slot, u});
      }
      r.images_[from] = std::move(img);
    }
    return r;
  }

  // Checks that image vectors are orthonormal and that the map is square on
  // its universe (codomain no larger than domain), i.e. unitary within tol.
  bool is_unitary(double tol = 1e-12) const {
    if (codomain().size() > images_.size()) return false;
    for (auto i = images_.begin(); i != images_.end(); ++i) {
      for (auto j = i; j != images_.end(); ++j) {
        Complex dot(0.0, 0.0);
        std::map<PortPol, Complex> lhs;
        for (const auto& [slot, u] : i->second) lhs[slot] += u;
        for (const auto& [slot, u] : j->second) {
          auto it = lhs.find(slot);
          if (it != lhs.end()) dot += std::conj(it->second) * u;
        }
        const double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(dot - Complex(want, 0.0)) > tol) return false;
      }
    }
    return true;
  }

 private:
  std::map<PortPol, Image> images_;
};

// Rewrite a creation-operator polynomial through a mode map. Every mode the
// polynomial references must be covered. Term degrees are preserved, so the
// substitution conserves photon number.
inline OperatorPoly substitute(const OperatorPoly& p, const ModeMap& m) {
  OperatorPoly result;
  for (const auto& [mono, coeff] : p.terms()) {
    OperatorPoly term = OperatorPoly::unit();
    term *= coeff;
    for (const auto& [mode, n] : mono.powers()) {
      OperatorPoly image;
      for (const auto& [out_mode, u] : m.image_of(mode)) {
        image.add_term(CreationMonomial::single(out_mode), u);
      }
      for (int k = 0; k < n; ++k) term = term * image;
    }
    result += term;
  }
  result.prune();
  return result;
}

}  // namespace biphoton
