#pragma once

#include <vector>

#include "pkdyn/errors.hpp"
#include "pkdyn/projective.hpp"
#include "pkdyn/rng.hpp"

namespace pkdyn::testing {

inline ProjectivePoint random_point(SplitRng& rng, int dim = 1) {
  std::vector<cplx> coords(dim + 1);
  for (auto& c : coords) c = cplx(rng.gaussian(), rng.gaussian());
  return ProjectivePoint::normalize(coords);
}

inline std::vector<cplx> random_coords(SplitRng& rng, int dim = 1) {
  std::vector<cplx> coords(dim + 1);
  for (auto& c : coords) c = cplx(rng.gaussian(), rng.gaussian());
  return coords;
}

// A random nondegenerate degree-d map on P^1 with Gaussian coefficients.
inline EndomorphismMap random_p1_map(SplitRng& rng, int degree) {
  for (;;) {
    std::vector<HomogeneousPolynomial> comps;
    for (int c = 0; c < 2; ++c) {
      std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms;
      for (int j = 0; j <= degree; ++j) {
        terms[{j, degree - j}] = cplx(rng.gaussian(), rng.gaussian());
      }
      comps.emplace_back(2, degree, std::move(terms));
    }
    try {
      return EndomorphismMap(std::move(comps));
    } catch (const DegenerateMapError&) {
      // resample; Gaussian coefficient maps are degenerate with probability ~0
    }
  }
}

}  // namespace pkdyn::testing
