#include "pkdyn/polyroots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "pkdyn/errors.hpp"

namespace pkdyn {

namespace {

// p(z) and p'(z) by Horner.
void horner(std::span<const cplx> c, const cplx& z, cplx& p, cplx& dp) {
  p = cplx(0.0, 0.0);
  dp = cplx(0.0, 0.0);
  for (std::size_t j = c.size(); j-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[j];
  }
}

void newton_polish(std::span<const cplx> c, cplx& z, const NumericConfig& cfg) {
  cplx p, dp;
  horner(c, z, p, dp);
  double best = std::abs(p);
  cplx best_z = z;
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    if (std::abs(dp) == 0.0) break;
    const cplx step = p / dp;
    z -= step;
    horner(c, z, p, dp);
    const double res = std::abs(p);
    if (res < best) {
      best = res;
      best_z = z;
    }
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
  }
  z = best_z;
}

std::vector<cplx> companion_roots(std::span<const cplx> c) {
  const int d = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int j = 0; j < d; ++j) m(j, d - 1) = -c[j] / c[d];
  for (int j = 1; j < d; ++j) m(j, j - 1) = cplx(1.0, 0.0);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw SolverFailureError("companion eigenvalue iteration failed");
  std::vector<cplx> roots(d);
  for (int j = 0; j < d; ++j) roots[j] = solver.eigenvalues()(j);
  return roots;
}

std::vector<cplx> aberth_roots(std::span<const cplx> c, const NumericConfig& cfg) {
  const int d = static_cast<int>(c.size()) - 1;
  // Initial guesses on a circle at the Cauchy-style radius, with a phase
  // offset so no guess starts on a symmetry axis.
  double radius = 0.0;
  for (int j = 0; j < d; ++j) radius = std::max(radius, std::pow(std::abs(c[j] / c[d]), 1.0 / (d - j)));
  radius = std::max(radius, 1e-8) * 1.2;
  std::vector<cplx> z(d);
  for (int j = 0; j < d; ++j) {
    const double theta = 6.283185307179586 * (j + 0.354) / d;
    z[j] = radius * cplx(std::cos(theta), std::sin(theta));
  }
  for (int it = 0; it < 120; ++it) {
    double worst = 0.0;
    for (int i = 0; i < d; ++i) {
      cplx p, dp;
      horner(c, z[i], p, dp);
      if (std::abs(p) == 0.0) continue;
      cplx repel(0.0, 0.0);
      for (int j = 0; j < d; ++j) {
        if (j != i) repel += cplx(1.0, 0.0) / (z[i] - z[j]);
      }
      const cplx newton = (std::abs(dp) > 0.0) ? p / dp : p;
      const cplx denom = cplx(1.0, 0.0) - newton * repel;
      const cplx step = (std::abs(denom) > 1e-300) ? newton / denom : newton;
      z[i] -= step;
      worst = std::max(worst, std::abs(step) / std::max(1.0, std::abs(z[i])));
    }
    if (worst < 1e-15) break;
  }
  (void)cfg;
  return z;
}

struct Cluster {
  std::vector<cplx> members_affine;  // affine representatives; empty for the infinity cluster
  ProjectivePoint rep;
  int multiplicity;
};

}  // namespace

std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs, const NumericConfig& cfg) {
  if (coeffs.size() < 2) throw SolverFailureError("polynomial has no roots to find");
  if (std::abs(coeffs.back()) == 0.0) throw SolverFailureError("leading coefficient is zero");
  const int d = static_cast<int>(coeffs.size()) - 1;
  std::vector<cplx> roots;
  if (d == 1) {
    roots = {-coeffs[0] / coeffs[1]};
  } else if (d < cfg.aberth_min_degree) {
    roots = companion_roots(coeffs);
  } else {
    roots = aberth_roots(coeffs, cfg);
  }
  for (auto& z : roots) newton_polish(coeffs, z, cfg);
  return roots;
}

std::vector<BinaryFormRoot> binary_form_roots(std::span<const cplx> coeffs, const NumericConfig& cfg) {
  const int d = static_cast<int>(coeffs.size()) - 1;
  if (d < 1) throw SolverFailureError("binary form of degree zero");
  double scale = 0.0;
  for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) throw SolverFailureError("binary form is identically zero");

  // Vanishing leading coefficients are roots at infinity of the affine chart.
  const double strip_tol = 1e-12 * scale;
  int degree_affine = d;
  while (degree_affine > 0 && std::abs(coeffs[degree_affine]) <= strip_tol) --degree_affine;
  const int infinity_multiplicity = d - degree_affine;

  std::vector<cplx> finite_roots;
  if (degree_affine > 0) {
    std::vector<cplx> reduced(coeffs.begin(), coeffs.begin() + degree_affine + 1);
    for (auto& c : reduced) c /= scale;
    finite_roots = polynomial_roots(reduced, cfg);
  }

  // Cluster merge at the chordal tolerance; a multiple root shows up as a
  // cluster whose centroid is second-order accurate (the splay cancels).
  std::vector<Cluster> clusters;
  if (infinity_multiplicity > 0) {
    clusters.push_back(Cluster{{}, ProjectivePoint::normalize({cplx(1.0, 0.0), cplx(0.0, 0.0)}), infinity_multiplicity});
  }
  for (const auto& r : finite_roots) {
    const ProjectivePoint p = ProjectivePoint::normalize({r, cplx(1.0, 0.0)});
    bool merged = false;
    for (auto& cl : clusters) {
      if (chordal_distance(p, cl.rep) <= cfg.clustering_tol) {
        cl.members_affine.push_back(r);
        cl.multiplicity += 1;
        merged = true;
        break;
      }
    }
    if (!merged) clusters.push_back(Cluster{{r}, p, 1});
  }
  for (auto& cl : clusters) {
    if (cl.members_affine.size() > 1) {
      cplx centroid(0.0, 0.0);
      for (const auto& m : cl.members_affine) centroid += m;
      centroid /= static_cast<double>(cl.members_affine.size());
      cl.rep = ProjectivePoint::normalize({centroid, cplx(1.0, 0.0)});
    }
  }

  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    const bool ai = a.members_affine.empty(), bi = b.members_affine.empty();
    if (ai != bi) return bi;  // infinity last
    if (ai && bi) return false;
    const cplx za = a.rep.affine(), zb = b.rep.affine();
    if (za.real() != zb.real()) return za.real() < zb.real();
    return za.imag() < zb.imag();
  });

  std::vector<BinaryFormRoot> out;
  out.reserve(clusters.size());
  int total = 0;
  for (auto& cl : clusters) {
    total += cl.multiplicity;
    out.push_back(BinaryFormRoot{cl.rep, cl.multiplicity});
  }
  if (total != d) throw SolverFailureError("root multiplicities do not sum to the degree");
  return out;
}

}  // namespace pkdyn
