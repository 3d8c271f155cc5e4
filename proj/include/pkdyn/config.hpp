#pragma once

#include <cstdint>

namespace pkdyn {

// Every tolerance and threshold used anywhere in the library lives here, so a
// run is fully described by one record. Defaults are the documented values.
struct NumericConfig {
  // Root solving (fibers on P^1).
  double residual_tol = 1e-10;       // chordal distance of f(root) to the target
  double clustering_tol = 1e-6;      // chordal radius for merging a root cluster
  double critical_relax = 0.0;       // 0 means "relax by a factor d" when a multiple root is detected
  int newton_max_iter = 40;
  int aberth_min_degree = 8;         // companion eigenvalues below, Aberth-Ehrlich from here on
  std::int64_t atom_cap = 2'000'000; // maximum number of stored atoms in an exact fiber

  // Map validation.
  double nondegeneracy_tol = 1e-10;  // |resultant| threshold on P^1 (normalized coefficients)
  double sphere_min_norm = 1e-6;     // min ||F|| over sphere samples for k >= 2
  int sphere_samples = 10'000;

  // Green function.
  double degenerate_image_tol = 1e-14;  // sup-norm of F(p) below this means the certificate lied
  double map_constant_safety = 2.0;     // inflation applied to the sampled map constant
  double green_tail_target = 1e-10;     // tail bound requested by potential-based experiments

  // Rate fitting and verdicts.
  double error_floor = 1e-14;        // entries at or below this are not fitted
  double rho_threshold = 1.5;        // geometric-decay verdicts require fitted_rho >= this
  double r2_threshold = 0.9;
  double alpha_order_slack = 0.05;   // slack on log-rates in the alpha-monotonicity verdict

  // Exceptional-set scanning.
  double scan_lambda = 1.5;          // flags kappa rate >= d / scan_lambda
  int scan_depth = 6;

  // Counting verdicts.
  double counting_tol = 0.1;         // |ratio - 1| and |normalized count - 1| at max depth

  // Experiment plumbing.
  double pole_drop_tol = 1e-6;       // orbit point this close to a hypersurface zero is dropped
  double grid_clearance = 1e-3;      // grid points must start at least this far from the zeros
  double survivor_fraction = 0.9;    // potential-decay verdicts need this fraction of the grid alive
  double boundary_shell_eps = 0.01;  // shell half-width for the counting boundary check
  double boundary_shell_frac = 0.05; // shell mass must stay below this fraction of the interior
  double dsh_mass_safety = 0.1;      // rescaling slack in the exponential-integral experiment
};

inline const NumericConfig& default_config() {
  static const NumericConfig cfg{};
  return cfg;
}

}  // namespace pkdyn
