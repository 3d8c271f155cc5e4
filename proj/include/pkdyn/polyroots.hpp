#pragma once

#include <span>
#include <vector>

#include "pkdyn/config.hpp"
#include "pkdyn/projective.hpp"

namespace pkdyn {

// Roots of sum_j coeffs[j] z^j with coeffs.back() != 0, one entry per root
// with multiplicity (i.e. degree-many entries, unclustered). Companion-matrix
// eigenvalues below cfg.aberth_min_degree, Aberth-Ehrlich from there on; both
// are polished by Newton iteration.
std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs,
                                   const NumericConfig& cfg = default_config());

// A projective root of a binary form, after cluster merging.
struct BinaryFormRoot {
  ProjectivePoint point;
  int multiplicity;
};

// All d projective roots of the degree-d binary form sum_j coeffs[j] z^j
// w^(d-j), with multiplicities summing to d exactly. Roots at infinity are
// detected from vanishing leading coefficients; nearby roots merge at the
// clustering tolerance; the returned order is deterministic: sorted by
// (re, im) of the affine representative, infinity last.
std::vector<BinaryFormRoot> binary_form_roots(std::span<const cplx> coeffs,
                                              const NumericConfig& cfg = default_config());

}  // namespace pkdyn
