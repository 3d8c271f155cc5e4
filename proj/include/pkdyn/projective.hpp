#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pkdyn/config.hpp"

namespace pkdyn {

using cplx = std::complex<double>;

// A point of P^k held in canonical homogeneous coordinates: the coordinate of
// largest modulus equals 1 exactly (ties broken by lowest index), all other
// moduli <= 1. Immutable after construction.
class ProjectivePoint {
 public:
  // Canonicalizes raw homogeneous coordinates. Throws AllZeroError if every
  // entry is zero or non-finite.
  static ProjectivePoint normalize(std::span<const cplx> raw);
  static ProjectivePoint normalize(std::initializer_list<cplx> raw);

  int dim() const { return static_cast<int>(coords_.size()) - 1; }
  const std::vector<cplx>& coords() const { return coords_; }
  const cplx& operator[](std::size_t i) const { return coords_[i]; }

  // Index of the coordinate fixed to 1.
  int pivot() const { return pivot_; }

  // Affine coordinate z0/z1 on P^1; throws on other dimensions. Infinite
  // points ([1:0]) return an infinite value.
  cplx affine() const;
  bool is_infinity() const;

  std::string str() const;

 private:
  ProjectivePoint(std::vector<cplx> coords, int pivot) : coords_(std::move(coords)), pivot_(pivot) {}
  std::vector<cplx> coords_;
  int pivot_ = 0;
};

// Chordal metric ||z ^ w|| / (||z|| ||w||) in [0, 1]; comparable to the
// Fubini-Study distance. Throws DimMismatchError.
double chordal_distance(const ProjectivePoint& p, const ProjectivePoint& q);

// Same metric on raw coordinate vectors.
double chordal_distance(std::span<const cplx> z, std::span<const cplx> w);

// A homogeneous polynomial in dim variables, stored as a sparse map from
// exponent tuples (summing to the degree) to coefficients.
class HomogeneousPolynomial {
 public:
  using ExponentTuple = std::vector<int>;

  HomogeneousPolynomial(int n_vars, int degree, std::map<ExponentTuple, cplx> terms);

  int n_vars() const { return n_vars_; }
  int degree() const { return degree_; }
  const std::map<ExponentTuple, cplx>& terms() const { return terms_; }

  cplx evaluate(std::span<const cplx> z) const;

  // Coefficient vector b_j of z^j w^(d-j) for binary forms (n_vars == 2).
  std::vector<cplx> binary_coefficients() const;

  // Convenience builder for binary forms from the coefficient vector above.
  static HomogeneousPolynomial from_binary_coefficients(std::span<const cplx> coeffs);

 private:
  int n_vars_;
  int degree_;
  std::map<ExponentTuple, cplx> terms_;
};

// Method + witness recorded when a map passes its nondegeneracy check.
struct NondegeneracyCertificate {
  std::string method;   // "resultant" (k = 1) or "sphere_sampling" (k >= 2, heuristic)
  double witness = 0.0; // |resultant| or min ||F|| over the samples
  bool heuristic = false;
};

// k+1 homogeneous degree-d polynomials with F^{-1}(0) = {0}. Construction
// runs the nondegeneracy check and throws DegenerateMapError on failure.
class EndomorphismMap {
 public:
  EndomorphismMap(std::vector<HomogeneousPolynomial> components,
                  const NumericConfig& cfg = default_config());

  int dim() const { return static_cast<int>(components_.size()) - 1; }
  int degree() const { return components_.front().degree(); }
  const std::vector<HomogeneousPolynomial>& components() const { return components_; }
  const NondegeneracyCertificate& certificate() const { return certificate_; }

  // F(z) on raw coordinates, no normalization.
  std::vector<cplx> apply_raw(std::span<const cplx> z) const;

 private:
  std::vector<HomogeneousPolynomial> components_;
  NondegeneracyCertificate certificate_;
};

struct MapImage {
  ProjectivePoint image;
  double log_scale;  // log of the sup-norm of F at the input coordinates
};

// f(p) together with the renormalization factor consumed by the Green
// accumulator. Throws DegenerateImageError if F(p) vanishes numerically.
MapImage evaluate_map(const EndomorphismMap& f, const ProjectivePoint& p,
                      const NumericConfig& cfg = default_config());

// Runs the nondegeneracy check without constructing a map: Sylvester
// resultant for k = 1, quasi-random sphere sampling for k >= 2. Throws
// DegenerateMapError when the check fails.
NondegeneracyCertificate check_nondegenerate(const std::vector<HomogeneousPolynomial>& components,
                                             const NumericConfig& cfg = default_config());

// Resultant of two binary forms of the same degree via the Sylvester
// determinant (coefficients as returned by binary_coefficients()).
cplx sylvester_resultant(std::span<const cplx> a, std::span<const cplx> b);

// Presets. power: (z_0^d, ..., z_k^d). quadratic_family: the lift
// (z^2 + c w^2, w^2) of z^2 + c on P^1.
EndomorphismMap power_map(int degree, int dim = 1);
EndomorphismMap quadratic_family(cplx c);

// Map construction from the JSON map-definition format, or from a preset
// name such as "power(2)", "power(2,3)", "quadratic_family(-1,0)". If the
// string names a readable file, the file content is parsed instead.
EndomorphismMap map_from_json(const std::string& json_text, const NumericConfig& cfg = default_config());
EndomorphismMap map_from_spec(const std::string& preset_or_path, const NumericConfig& cfg = default_config());
std::string map_to_json(const EndomorphismMap& f);

// Names and signatures of the accepted presets, for the CLI listing.
std::vector<std::string> preset_descriptions();

}  // namespace pkdyn
