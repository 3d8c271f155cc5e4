#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "pkdyn/config.hpp"
#include "pkdyn/fibers.hpp"
#include "pkdyn/projective.hpp"

namespace pkdyn {

// A scalar observable with a declared regularity class and norm. The
// evaluator must be pure; boundedness against the declared norm is probed at
// construction.
class TestFunction {
 public:
  using Evaluator = std::function<double(const ProjectivePoint&)>;

  TestFunction(Evaluator evaluator, double alpha, double norm_alpha, std::string family_tag);

  double operator()(const ProjectivePoint& p) const { return evaluator_(p); }
  double alpha() const { return alpha_; }
  double norm_alpha() const { return norm_alpha_; }
  const std::string& tag() const { return family_tag_; }

 private:
  Evaluator evaluator_;
  double alpha_;
  double norm_alpha_;
  std::string family_tag_;
};

// cos(m * arg z) in the affine circle chart of P^1.
TestFunction trig_moment(int m);
// Smooth radial bump (1 - (dist/radius)^2)^3 of the chordal distance to the
// center; C^2 with analytically bounded norms.
TestFunction bump(const ProjectivePoint& center, double radius);
// Hoelder kernel dist(., center)^alpha, the calibrated family for
// alpha-scaling experiments.
TestFunction holder_kernel(const ProjectivePoint& center, double alpha);
TestFunction constant_function(double c);

struct WeightedAtom {
  ProjectivePoint point;
  double weight;  // > 0
};

// A finite positive measure given by atoms; `normalized` asserts unit mass.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::vector<WeightedAtom> atoms, bool normalized);

  static EmpiricalMeasure from_fiber(const FiberCloud& cloud);  // normalized by total weight

  const std::vector<WeightedAtom>& atoms() const { return atoms_; }
  bool normalized() const { return normalized_; }
  double total_weight() const { return total_weight_; }

 private:
  std::vector<WeightedAtom> atoms_;
  bool normalized_;
  double total_weight_;
};

// <m, phi> = sum w phi / sum w. Throws EmptyMeasureError.
double pair(const EmpiricalMeasure& m, const TestFunction& phi);
double pair(const EmpiricalMeasure& m, const std::function<double(const ProjectivePoint&)>& phi);

// Equilibrium-measure estimators on P^1. Both gate the starting point
// through the exceptional scan and throw ExceptionalBaseError if it is
// flagged.
struct FullFiber {
  ProjectivePoint base;
  int depth;
};

struct InverseIteration {
  ProjectivePoint base;
  std::uint64_t seed;
  int burn_in;
  std::int64_t count;
};

using EquilibriumMethod = std::variant<FullFiber, InverseIteration>;

EmpiricalMeasure equilibrium_estimate(const EndomorphismMap& f, const EquilibriumMethod& method,
                                      const NumericConfig& cfg = default_config(), int threads = 1);

// Geometric rate fit: least squares of log e_n against c - n log rho over
// the entries above the error floor.
struct RateFit {
  std::vector<int> ns;
  std::vector<double> errors;
  double fitted_rho = 1.0;
  double r_squared = 0.0;
};

RateFit fit_rate(const std::vector<int>& ns, const std::vector<double>& errors,
                 const NumericConfig& cfg = default_config());

// Integer-weighted count of exact-fiber atoms inside a region.
std::int64_t count_in_set(const FiberCloud& cloud, const std::function<bool(const ProjectivePoint&)>& inside);

// Regions of P^1 with a notion of distance to their boundary, used by the
// counting experiment and its boundary-shell check.
struct SectorRegion {
  double theta0, theta1;  // affine arg in (theta0, theta1), radians
};
struct DiscRegion {
  cplx center;    // affine chart
  double radius;  // affine modulus
};
struct AllRegion {};
struct EmptyRegion {};

using Region = std::variant<SectorRegion, DiscRegion, AllRegion, EmptyRegion>;

bool region_contains(const Region& region, const ProjectivePoint& p);
// Distance to the boundary in the region's own parameter (angle for sectors,
// affine modulus for discs); infinity for all/empty.
double region_boundary_distance(const Region& region, const ProjectivePoint& p);
std::string region_label(const Region& region);

}  // namespace pkdyn
