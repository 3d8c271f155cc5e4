#pragma once

#include <string>
#include <vector>

#include "pkdyn/config.hpp"
#include "pkdyn/projective.hpp"

namespace pkdyn {

// A renormalized forward orbit: points[j+1] = evaluate_map(f, points[j]).image
// and log_scales[j] is the sup-norm log factor shed at that step.
struct OrbitRecord {
  std::vector<ProjectivePoint> points;  // length n+1
  std::vector<double> log_scales;       // length n
};

OrbitRecord orbit(const EndomorphismMap& f, const ProjectivePoint& p, int n,
                  const NumericConfig& cfg = default_config());

// Finite-depth Green value G_n(z) = d^{-n} log||F^n(z)|| with its tail bound
// |G - G_n| <= map_constant * d^{-n} / (d - 1).
struct GreenEstimate {
  double value;
  int depth;
  double tail_bound;
  double map_constant;
};

// Estimated sup over the unit sup-norm sphere of |log ||F(z)|| | (sup norms
// throughout), from quasi-random samples inflated by cfg.map_constant_safety.
// The value is cached per map.
double estimate_map_constant(const EndomorphismMap& f, const NumericConfig& cfg = default_config());

// G_n at the exact coordinate vector supplied, computed by the telescoping
// sum over the renormalized orbit (no overflow at any depth). G is
// log-homogeneous: G(c z) = log|c| + G(z).
GreenEstimate green_value(const EndomorphismMap& f, std::span<const cplx> raw, int n,
                          const NumericConfig& cfg = default_config());

// Convenience overload at the canonical (sup-norm 1) representative.
GreenEstimate green_value(const EndomorphismMap& f, const ProjectivePoint& p, int n,
                          const NumericConfig& cfg = default_config());

// Closed-form oracle for the map (z_0^d, ..., z_k^d): G(z) = max_i log|z_i|.
double green_exact_monomial(std::span<const cplx> coords);

// Smallest depth whose tail bound is <= target (clamped to [min_depth, 80]).
int green_depth_for_tail(const EndomorphismMap& f, double target, int min_depth = 20,
                         const NumericConfig& cfg = default_config());

// CSV emitter: point_id, re0, im0, ..., n, G_n, tail_bound.
struct GreenCsvRow {
  int point_id;
  std::vector<cplx> coords;
  GreenEstimate estimate;
};

std::string green_csv(const std::vector<GreenCsvRow>& rows);

}  // namespace pkdyn
