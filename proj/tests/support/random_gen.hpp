#pragma once

// Deterministic random inputs for property tests.

#include <vector>

#include "biphoton/fock.hpp"
#include "biphoton/mode_map.hpp"
#include "biphoton/rng.hpp"

namespace testsupport {

using biphoton::Complex;
using biphoton::CreationMonomial;
using biphoton::ModeLabel;
using biphoton::ModeMap;
using biphoton::OperatorPoly;
using biphoton::PortPol;
using biphoton::SplitStream;

inline Complex random_coeff(SplitStream& rng) {
  return Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
}

inline OperatorPoly random_poly(SplitStream& rng, const std::vector<ModeLabel>& universe,
                                int max_terms, int max_degree) {
  OperatorPoly p;
  const int terms = 1 + static_cast<int>(rng.below(max_terms));
  for (int t = 0; t < terms; ++t) {
    const int degree = static_cast<int>(rng.below(max_degree + 1));
    CreationMonomial m;
    for (int d = 0; d < degree; ++d) {
      m = m * CreationMonomial::single(universe[rng.below(universe.size())]);
    }
    p.add_term(m, random_coeff(rng));
  }
  return p;
}

// Random unitary over the given slots: Gram-Schmidt on a random complex
// matrix; column j becomes the image of slots[j].
inline ModeMap random_unitary_map(SplitStream& rng, const std::vector<PortPol>& slots) {
  const std::size_t n = slots.size();
  std::vector<std::vector<Complex>> cols(n, std::vector<Complex>(n));
  for (std::size_t j = 0; j < n; ++j) {
    while (true) {
      for (std::size_t i = 0; i < n; ++i) cols[j][i] = random_coeff(rng);
      for (std::size_t k = 0; k < j; ++k) {
        Complex proj(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) proj += std::conj(cols[k][i]) * cols[j][i];
        for (std::size_t i = 0; i < n; ++i) cols[j][i] -= proj * cols[k][i];
      }
      double nrm = 0.0;
      for (std::size_t i = 0; i < n; ++i) nrm += std::norm(cols[j][i]);
      nrm = std::sqrt(nrm);
      if (nrm > 1e-3) {
        for (std::size_t i = 0; i < n; ++i) cols[j][i] /= nrm;
        break;
      }
    }
  }
  ModeMap m;
  for (std::size_t j = 0; j < n; ++j) {
    ModeMap::Image img;
    for (std::size_t i = 0; i < n; ++i) img.push_back({slots[i], cols[j][i]});
    m.set_image(slots[j], std::move(img));
  }
  return m;
}

}  // namespace testsupport
