#include "pkdyn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "pkdyn/errors.hpp"
#include "pkdyn/parallel.hpp"
#include "pkdyn/rng.hpp"

namespace pkdyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double euclid_norm(std::span<const cplx> z) {
  double s = 0.0;
  for (const auto& c : z) s += std::norm(c);
  return std::sqrt(s);
}

std::vector<cplx> euclid_unit(const ProjectivePoint& p) {
  std::vector<cplx> z = p.coords();
  const double n = euclid_norm(z);
  for (auto& c : z) c /= n;
  return z;
}

void gate_base(const EndomorphismMap& f, const ProjectivePoint& base, const char* role,
               const NumericConfig& cfg) {
  const auto scans = exceptional_scan(f, cfg.scan_lambda, cfg.scan_depth, {base}, cfg);
  if (scans.front().flagged) {
    throw ExceptionalBaseError(std::string(role) + " " + base.str() +
                               " is flagged by the exceptional scan (rate " +
                               std::to_string(scans.front().rate) + ")");
  }
}

// Reference estimator with its self-consistency gap: pairings at ref_depth
// and at ref_depth - 1 against each observable.
struct Reference {
  std::vector<double> pairings;
  std::vector<double> gaps;
};

Reference reference_pairings(const EndomorphismMap& f, const ProjectivePoint& ref_base, int ref_depth,
                             const std::vector<TestFunction>& phis, const NumericConfig& cfg, int threads) {
  if (ref_depth < 1) throw ConfigError("reference depth must be >= 1");
  FiberCloud cloud = backward_orbit_exact(f, ref_base, ref_depth - 1, cfg, threads);
  const EmpiricalMeasure prev = EmpiricalMeasure::from_fiber(cloud);
  cloud.atoms = expand_fiber_level(f, cloud.atoms, cfg, threads);
  cloud.depth = ref_depth;
  const EmpiricalMeasure final = EmpiricalMeasure::from_fiber(cloud);
  Reference ref;
  for (const auto& phi : phis) {
    const double at_depth = pair(final, phi);
    ref.pairings.push_back(at_depth);
    ref.gaps.push_back(std::abs(at_depth - pair(prev, phi)));
  }
  return ref;
}

// Least squares of y against x; returns (slope, r_squared).
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return {0.0, 0.0};
  const double slope = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double yhat = my + slope * (x[i] - mx);
    ss_res += (y[i] - yhat) * (y[i] - yhat);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  return {slope, ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0};
}

struct DecayFit {
  bool fitted = false;
  bool below_floor = false;  // every error at numerical zero: exact agreement
  double rho = 0.0;
  double r2 = 0.0;
  double min_error_used = kInf;
};

DecayFit fit_decay(const std::vector<int>& ns, const std::vector<double>& errors, const NumericConfig& cfg) {
  DecayFit out;
  double max_err = 0.0;
  for (double e : errors) max_err = std::max(max_err, e);
  try {
    const RateFit fit = fit_rate(ns, errors, cfg);
    out.fitted = true;
    out.rho = fit.fitted_rho;
    out.r2 = fit.r_squared;
    for (double e : fit.errors) out.min_error_used = std::min(out.min_error_used, e);
  } catch (const InsufficientDataError&) {
    out.below_floor = max_err <= 10.0 * cfg.error_floor;
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Sup of |h| over quasi-random Euclidean-unit sphere points, used to scale
// the distance proxy to the zero set of h.
double sup_on_sphere(const HomogeneousPolynomial& h) {
  SplitRng rng(0x5106'AB1Eull);
  std::vector<cplx> z(h.n_vars());
  double sup = 0.0;
  for (int s = 0; s < 4000; ++s) {
    double nz = 0.0;
    for (auto& c : z) {
      c = cplx(rng.gaussian(), rng.gaussian());
      nz += std::norm(c);
    }
    nz = std::sqrt(nz);
    for (auto& c : z) c /= nz;
    sup = std::max(sup, std::abs(h.evaluate(z)));
  }
  if (sup == 0.0) throw ConfigError("hypersurface polynomial vanishes on the whole sphere sample");
  return sup;
}

// Scale-free proxy for the distance from a point to {h = 0}: exact for
// linear forms, comparable in general.
double zero_distance_proxy(const HomogeneousPolynomial& h, double h_sup, std::span<const cplx> unit_z) {
  return std::pow(std::abs(h.evaluate(unit_z)) / h_sup, 1.0 / h.degree());
}

}  // namespace

VerdictStatus ExperimentReport::overall() const {
  bool inconclusive = false;
  for (const auto& v : verdicts) {
    if (v.status == VerdictStatus::fail) return VerdictStatus::fail;
    if (v.status == VerdictStatus::inconclusive) inconclusive = true;
  }
  return inconclusive ? VerdictStatus::inconclusive : VerdictStatus::pass;
}

std::vector<ProjectivePoint> known_invariant_points(const EndomorphismMap& f) {
  std::vector<ProjectivePoint> out;
  const int n = f.dim() + 1;
  const int d = f.degree();
  // Diagonal monomial maps (F_i = c_i z_i^d): every coordinate point is
  // totally invariant.
  bool diagonal = true;
  for (int i = 0; i < n && diagonal; ++i) {
    const auto& terms = f.components()[i].terms();
    diagonal = terms.size() == 1 && terms.begin()->first[i] == d;
  }
  if (diagonal) {
    for (int i = 0; i < n; ++i) {
      std::vector<cplx> coords(n, cplx(0.0, 0.0));
      coords[i] = cplx(1.0, 0.0);
      out.push_back(ProjectivePoint::normalize(coords));
    }
    return out;
  }
  // Polynomial lifts on P^1 (F_1 = c w^d with z^d present in F_0): infinity
  // is totally invariant.
  if (f.dim() == 1) {
    const auto c0 = f.components()[0].binary_coefficients();
    const auto c1 = f.components()[1].binary_coefficients();
    bool poly = std::abs(c1[0]) > 0.0 && std::abs(c0[d]) > 0.0;
    for (int j = 1; j <= d && poly; ++j) poly = std::abs(c1[j]) == 0.0;
    if (poly) out.push_back(ProjectivePoint::normalize({cplx(1.0, 0.0), cplx(0.0, 0.0)}));
  }
  return out;
}

std::vector<ProjectivePoint> exceptional_candidates(const EndomorphismMap& f, const NumericConfig& cfg) {
  std::vector<ProjectivePoint> out = known_invariant_points(f);
  if (f.dim() == 1) {
    for (const auto& fp : fixed_points_p1(f, cfg)) {
      bool dup = false;
      for (const auto& p : out) dup = dup || chordal_distance(p, fp.point) < 1e-9;
      if (!dup) out.push_back(fp.point);
    }
  }
  return out;
}

std::vector<ProjectivePoint> torus_grid(int dim, int count) {
  if (dim < 1) throw ConfigError("grid dimension must be >= 1");
  if (count < 1) throw ConfigError("grid needs at least one point");
  std::vector<ProjectivePoint> out;
  out.reserve(count);
  if (dim == 1) {
    for (int j = 0; j < count; ++j) {
      const double theta = 2.0 * M_PI * (j + 0.381966011) / count;
      out.push_back(ProjectivePoint::normalize({cplx(std::cos(theta), std::sin(theta)), cplx(1.0, 0.0)}));
    }
    return out;
  }
  const int m = static_cast<int>(std::ceil(std::pow(static_cast<double>(count), 1.0 / dim)));
  std::vector<int> index(dim, 0);
  while (static_cast<int>(out.size()) < count) {
    std::vector<cplx> coords(dim + 1);
    for (int i = 0; i < dim; ++i) {
      const double offset = 0.381966011 * (i + 1.0) - std::floor(0.381966011 * (i + 1.0));
      const double theta = 2.0 * M_PI * (index[i] + offset) / m;
      coords[i] = cplx(std::cos(theta), std::sin(theta));
    }
    coords[dim] = cplx(1.0, 0.0);
    out.push_back(ProjectivePoint::normalize(coords));
    int i = 0;
    while (i < dim && ++index[i] == m) index[i++] = 0;
    if (i == dim) break;
  }
  return out;
}

ExperimentReport exp_point_equidistribution(const EndomorphismMap& f, const ProjectivePoint& a,
                                            const std::vector<TestFunction>& phis, int n_min, int n_max,
                                            const ProjectivePoint& ref_base, int ref_depth,
                                            std::uint64_t seed, const NumericConfig& cfg, int threads) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("depth range must satisfy 1 <= n_min <= n_max");
  if (phis.empty()) throw ConfigError("need at least one observable");
  gate_base(f, a, "base point", cfg);
  gate_base(f, ref_base, "reference base", cfg);

  ExperimentReport report;
  report.experiment_id = "point_equidistribution";
  report.seed = seed;

  const Reference ref = reference_pairings(f, ref_base, ref_depth, phis, cfg, threads);
  report.self_gap = *std::max_element(ref.gaps.begin(), ref.gaps.end());

  // One incremental expansion serves every depth.
  std::vector<std::vector<double>> errors(phis.size());
  std::vector<int> ns;
  std::vector<FiberAtom> atoms{FiberAtom{a, 1}};
  for (int n = 1; n <= n_max; ++n) {
    atoms = expand_fiber_level(f, atoms, cfg, threads);
    if (n < n_min) continue;
    ns.push_back(n);
    FiberCloud cloud{a, n, atoms, FiberMode::exact, 0, 0};
    const EmpiricalMeasure mu_n = EmpiricalMeasure::from_fiber(cloud);
    for (std::size_t i = 0; i < phis.size(); ++i) {
      errors[i].push_back(std::abs(pair(mu_n, phis[i]) - ref.pairings[i]));
    }
  }

  std::vector<std::pair<double, double>> alpha_rates;  // (alpha, log rho) over the kernel family
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const DecayFit fit = fit_decay(ns, errors[i], cfg);
    for (std::size_t j = 0; j < ns.size(); ++j) {
      ReportRow row;
      row.n = ns[j];
      row.phi_tag = phis[i].tag();
      row.alpha = phis[i].alpha();
      row.error = errors[i][j];
      row.fitted_rho = fit.fitted ? fit.rho : 0.0;
      row.r_squared = fit.fitted ? fit.r2 : 0.0;
      row.extras = {{"ref_gap", ref.gaps[i]}};
      report.rows.push_back(std::move(row));
    }
    Verdict v{"geometric_decay(" + phis[i].tag() + ")", VerdictStatus::pass, 0.0, cfg.rho_threshold};
    if (fit.fitted) {
      v.measured = fit.rho;
      const bool ok = fit.rho >= cfg.rho_threshold && fit.r2 >= cfg.r2_threshold;
      v.status = ok ? VerdictStatus::pass : VerdictStatus::fail;
      // The verdict only stands if the reference is converged below the
      // errors it is asked to resolve.
      if (ref.gaps[i] >= fit.min_error_used) v.status = VerdictStatus::inconclusive;
      if (phis[i].tag().rfind("holder_kernel", 0) == 0) {
        alpha_rates.emplace_back(phis[i].alpha(), std::log(fit.rho));
      }
    } else if (fit.below_floor) {
      v.measured = kInf;  // exact agreement through the solver pipeline
      v.status = VerdictStatus::pass;
    } else {
      v.status = VerdictStatus::inconclusive;
    }
    report.verdicts.push_back(std::move(v));
  }

  if (alpha_rates.size() >= 2) {
    std::sort(alpha_rates.begin(), alpha_rates.end());
    double min_margin = kInf;
    for (std::size_t i = 0; i + 1 < alpha_rates.size(); ++i) {
      min_margin = std::min(min_margin, alpha_rates[i + 1].second - alpha_rates[i].second);
    }
    report.verdicts.push_back(Verdict{"alpha_scaling", min_margin >= -cfg.alpha_order_slack
                                                            ? VerdictStatus::pass
                                                            : VerdictStatus::fail,
                                      min_margin, -cfg.alpha_order_slack});
  }
  return report;
}

ExperimentReport exp_exceptional(const EndomorphismMap& f, const ProjectivePoint& a_exceptional,
                                 const std::vector<TestFunction>& phis, int n_min, int n_max,
                                 const ProjectivePoint& ref_base, int ref_depth, std::uint64_t seed,
                                 const NumericConfig& cfg, int threads) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("depth range must satisfy 1 <= n_min <= n_max");
  gate_base(f, ref_base, "reference base", cfg);

  ExperimentReport report;
  report.experiment_id = "exceptional";
  report.seed = seed;

  const Reference ref = reference_pairings(f, ref_base, ref_depth, phis, cfg, threads);
  report.self_gap = *std::max_element(ref.gaps.begin(), ref.gaps.end());

  std::vector<std::vector<double>> errors(phis.size());  // from n = 1 regardless of n_min
  std::vector<FiberAtom> atoms{FiberAtom{a_exceptional, 1}};
  for (int n = 1; n <= n_max; ++n) {
    atoms = expand_fiber_level(f, atoms, cfg, threads);
    FiberCloud cloud{a_exceptional, n, atoms, FiberMode::exact, 0, 0};
    const EmpiricalMeasure mu_n = EmpiricalMeasure::from_fiber(cloud);
    for (std::size_t i = 0; i < phis.size(); ++i) {
      errors[i].push_back(std::abs(pair(mu_n, phis[i]) - ref.pairings[i]));
    }
  }
  for (std::size_t i = 0; i < phis.size(); ++i) {
    for (int n = n_min; n <= n_max; ++n) {
      ReportRow row;
      row.n = n;
      row.phi_tag = phis[i].tag();
      row.alpha = phis[i].alpha();
      row.error = errors[i][n - 1];
      row.extras = {{"ref_gap", ref.gaps[i]}};
      report.rows.push_back(std::move(row));
    }
    const double e1 = errors[i].front();
    if (e1 <= 10.0 * cfg.error_floor) continue;  // phi does not separate the base from mu
    const double e_min = *std::min_element(errors[i].begin(), errors[i].end());
    Verdict v{"separation(" + phis[i].tag() + ")",
              e_min >= 0.5 * e1 ? VerdictStatus::pass : VerdictStatus::fail, e_min, 0.5 * e1};
    if (ref.gaps[i] >= e_min) v.status = VerdictStatus::inconclusive;
    report.verdicts.push_back(std::move(v));
  }

  // The scan itself must flag the base.
  const auto scans = exceptional_scan(f, cfg.scan_lambda, cfg.scan_depth, {a_exceptional}, cfg);
  report.verdicts.push_back(Verdict{"exceptional_flag",
                                    scans.front().flagged ? VerdictStatus::pass : VerdictStatus::fail,
                                    scans.front().rate, f.degree() / cfg.scan_lambda});
  return report;
}

ExperimentReport exp_counting(const EndomorphismMap& f, const ProjectivePoint& a, const ProjectivePoint& b,
                              const std::vector<Region>& regions, int n_min, int n_max,
                              const ProjectivePoint& ref_base, int ref_depth, std::uint64_t seed,
                              const NumericConfig& cfg, int threads) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("depth range must satisfy 1 <= n_min <= n_max");
  if (regions.empty()) throw ConfigError("need at least one region");
  gate_base(f, a, "base point", cfg);
  gate_base(f, b, "base point", cfg);
  gate_base(f, ref_base, "reference base", cfg);

  ExperimentReport report;
  report.experiment_id = "counting";
  report.seed = seed;

  if (ref_depth < 1) throw ConfigError("reference depth must be >= 1");
  FiberCloud ref_cloud = backward_orbit_exact(f, ref_base, ref_depth - 1, cfg, threads);
  std::vector<double> mu_ref_prev(regions.size());
  for (std::size_t u = 0; u < regions.size(); ++u) {
    const auto& region = regions[u];
    mu_ref_prev[u] = static_cast<double>(count_in_set(
                         ref_cloud, [&](const ProjectivePoint& p) { return region_contains(region, p); })) /
                     static_cast<double>(ref_cloud.total_weight());
  }
  ref_cloud.atoms = expand_fiber_level(f, ref_cloud.atoms, cfg, threads);
  ref_cloud.depth = ref_depth;
  const double ref_total = static_cast<double>(ref_cloud.total_weight());

  std::vector<double> mu_ref(regions.size()), mu_gap(regions.size());
  for (std::size_t u = 0; u < regions.size(); ++u) {
    const auto& region = regions[u];
    mu_ref[u] = static_cast<double>(
                    count_in_set(ref_cloud, [&](const ProjectivePoint& p) { return region_contains(region, p); })) /
                ref_total;
    mu_gap[u] = std::abs(mu_ref[u] - mu_ref_prev[u]);
    report.self_gap = std::max(report.self_gap, mu_gap[u]);
    // Boundary-shell check on the reference cloud: mass near the boundary
    // must stay a small fraction of the interior mass.
    std::int64_t shell = 0, interior = 0;
    for (const auto& atom : ref_cloud.atoms) {
      const bool in = region_contains(region, atom.point);
      const double bdist = region_boundary_distance(region, atom.point);
      if (bdist < cfg.boundary_shell_eps) {
        shell += atom.weight;
      } else if (in) {
        interior += atom.weight;
      }
    }
    const double frac = interior > 0 ? static_cast<double>(shell) / interior : kInf;
    report.verdicts.push_back(Verdict{"boundary_shell(" + region_label(region) + ")",
                                      frac < cfg.boundary_shell_frac ? VerdictStatus::pass
                                                                     : VerdictStatus::inconclusive,
                                      frac, cfg.boundary_shell_frac});
  }

  std::vector<FiberAtom> atoms_a{FiberAtom{a, 1}};
  std::vector<FiberAtom> atoms_b{FiberAtom{b, 1}};
  std::vector<double> final_ratio_err(regions.size(), 0.0), final_norm(regions.size(), 0.0);
  for (int n = 1; n <= n_max; ++n) {
    atoms_a = expand_fiber_level(f, atoms_a, cfg, threads);
    atoms_b = expand_fiber_level(f, atoms_b, cfg, threads);
    if (n < n_min) continue;
    const FiberCloud cloud_a{a, n, atoms_a, FiberMode::exact, 0, 0};
    const FiberCloud cloud_b{b, n, atoms_b, FiberMode::exact, 0, 0};
    const double dn = static_cast<double>(cloud_a.total_weight());
    for (std::size_t u = 0; u < regions.size(); ++u) {
      const auto& region = regions[u];
      auto inside = [&](const ProjectivePoint& p) { return region_contains(region, p); };
      const auto ca = count_in_set(cloud_a, inside);
      const auto cb = count_in_set(cloud_b, inside);
      const double ratio = (ca == 0 && cb == 0) ? 1.0
                           : cb == 0            ? kInf
                                                : static_cast<double>(ca) / static_cast<double>(cb);
      const double normalized = mu_ref[u] > 0.0 ? static_cast<double>(ca) / (mu_ref[u] * dn) : kInf;
      ReportRow row;
      row.n = n;
      row.phi_tag = region_label(region);
      row.error = std::abs(ratio - 1.0);
      row.extras = {{"count_a", static_cast<double>(ca)},
                    {"count_b", static_cast<double>(cb)},
                    {"ratio", ratio},
                    {"normalized", normalized},
                    {"mu_ref", mu_ref[u]},
                    {"mu_ref_gap", mu_gap[u]}};
      report.rows.push_back(std::move(row));
      if (n == n_max) {
        final_ratio_err[u] = std::abs(ratio - 1.0);
        final_norm[u] = normalized;
      }
    }
  }

  for (std::size_t u = 0; u < regions.size(); ++u) {
    const std::string label = region_label(regions[u]);
    report.verdicts.push_back(Verdict{"count_ratio(" + label + ")",
                                      final_ratio_err[u] <= cfg.counting_tol ? VerdictStatus::pass
                                                                             : VerdictStatus::fail,
                                      final_ratio_err[u], cfg.counting_tol});
    if (std::isfinite(final_norm[u])) {
      Verdict v{"normalized_count(" + label + ")",
                std::abs(final_norm[u] - 1.0) <= cfg.counting_tol ? VerdictStatus::pass
                                                                  : VerdictStatus::fail,
                std::abs(final_norm[u] - 1.0), cfg.counting_tol};
      // The reference mass must itself be converged below the tolerance this
      // verdict asserts.
      if (mu_gap[u] >= cfg.counting_tol * mu_ref[u]) v.status = VerdictStatus::inconclusive;
      report.verdicts.push_back(std::move(v));
    } else {
      report.verdicts.push_back(
          Verdict{"normalized_count(" + label + ")", VerdictStatus::inconclusive, kInf, cfg.counting_tol});
    }
  }
  return report;
}

ExperimentReport exp_mixing(const EndomorphismMap& f, const TestFunction& phi, const TestFunction& psi,
                            int n_min, int n_max, std::int64_t sample_size, int burn_in,
                            const ProjectivePoint& base, std::uint64_t seed, const NumericConfig& cfg,
                            int threads) {
  if (n_min < 1 || n_max < n_min) throw ConfigError("mixing range must satisfy 1 <= n_min <= n_max");
  if (sample_size < 2) throw ConfigError("mixing needs at least two samples");

  ExperimentReport report;
  report.experiment_id = "mixing";
  report.seed = seed;

  const EmpiricalMeasure sample =
      equilibrium_estimate(f, InverseIteration{base, seed, burn_in, sample_size}, cfg, threads);
  const std::size_t n_atoms = sample.atoms().size();

  std::vector<double> phi_vals(n_atoms);
  std::vector<std::vector<double>> psi_vals(n_max + 1, std::vector<double>(n_atoms));
  parallel_for(n_atoms, threads, [&](std::size_t i) {
    const ProjectivePoint& x = sample.atoms()[i].point;
    phi_vals[i] = phi(x);
    ProjectivePoint y = x;
    psi_vals[0][i] = psi(y);
    for (int n = 1; n <= n_max; ++n) {
      y = evaluate_map(f, y, cfg).image;
      psi_vals[n][i] = psi(y);
    }
  });

  const double phibar = std::accumulate(phi_vals.begin(), phi_vals.end(), 0.0) / n_atoms;
  double final_corr = 0.0, final_band = 0.0;
  for (int n = n_min; n <= n_max; ++n) {
    const auto& pv = psi_vals[n];
    const double psibar = std::accumulate(pv.begin(), pv.end(), 0.0) / n_atoms;
    double corr = 0.0;
    for (std::size_t i = 0; i < n_atoms; ++i) corr += (phi_vals[i] - phibar) * (pv[i] - psibar);
    corr /= n_atoms;
    double var = 0.0;
    for (std::size_t i = 0; i < n_atoms; ++i) {
      const double z = (phi_vals[i] - phibar) * (pv[i] - psibar) - corr;
      var += z * z;
    }
    var /= (n_atoms - 1);
    const double band = 3.0 * std::sqrt(var / n_atoms);
    ReportRow row;
    row.n = n;
    row.phi_tag = phi.tag() + "*" + psi.tag();
    row.alpha = phi.alpha();
    row.error = std::abs(corr);
    row.extras = {{"correlation", corr}, {"band3", band}};
    report.rows.push_back(std::move(row));
    if (n == n_max) {
      final_corr = std::abs(corr);
      final_band = band;
    }
  }
  report.verdicts.push_back(Verdict{"mixing_decay",
                                    final_corr <= final_band ? VerdictStatus::pass : VerdictStatus::fail,
                                    final_corr, final_band});
  return report;
}

ExperimentReport exp_birkhoff(const EndomorphismMap& f, const std::vector<TestFunction>& phis,
                              std::int64_t n_total, const std::optional<ProjectivePoint>& start,
                              const ProjectivePoint& ref_base, int ref_depth, std::uint64_t seed,
                              const NumericConfig& cfg, int threads) {
  if (n_total < 10) throw ConfigError("birkhoff needs at least 10 iterations");
  gate_base(f, ref_base, "reference base", cfg);

  ExperimentReport report;
  report.experiment_id = "birkhoff";
  report.seed = seed;

  const Reference ref = reference_pairings(f, ref_base, ref_depth, phis, cfg, threads);
  report.self_gap = *std::max_element(ref.gaps.begin(), ref.gaps.end());

  std::vector<std::int64_t> checkpoints;
  for (std::int64_t c = 10; c <= n_total; c *= 10) checkpoints.push_back(c);
  if (checkpoints.back() != n_total) checkpoints.push_back(n_total);

  // Observable values along one forward orbit, plus a short-cycle detector.
  std::vector<std::vector<double>> values(phis.size());
  bool non_generic = false;
  std::int64_t cycle_at = -1;
  std::vector<ProjectivePoint> window;
  auto visit = [&](const ProjectivePoint& x, std::int64_t j) {
    for (std::size_t i = 0; i < phis.size(); ++i) values[i].push_back(phis[i](x));
    if (!non_generic) {
      for (const auto& w : window) {
        if (chordal_distance(w, x) < 1e-12) {
          non_generic = true;
          cycle_at = j;
          break;
        }
      }
      window.push_back(x);
      if (window.size() > 16) window.erase(window.begin());
    }
  };

  if (start.has_value()) {
    // Literal forward iteration for an explicitly chosen start. On the
    // repelling support this escapes after ~50 steps (each step multiplies
    // the rounding defect by d), which is exactly what the non-generic
    // detector is there to report.
    ProjectivePoint x = *start;
    for (std::int64_t j = 0; j < n_total; ++j) {
      visit(x, j);
      if (j + 1 < n_total) x = evaluate_map(f, x, cfg).image;
    }
  } else {
    // A mu-generic forward orbit, realized as the reversal of a stationary
    // backward chain: f maps each chain state to the previous one, so the
    // reversed chain is pathwise a forward orbit of its last state, and it
    // stays on the support instead of collapsing onto an attractor.
    SplitRng rng = SplitRng(seed).split(0xB14Bull);
    ProjectivePoint x = ref_base;
    const int d = f.degree();
    const int chain_burn_in = 128;
    for (std::int64_t step = 0; step < chain_burn_in + n_total; ++step) {
      const PreimageSet pre = preimages_p1(f, x, cfg);
      const double u = rng.uniform() * d;
      double acc = 0.0;
      const BinaryFormRoot* chosen = &pre.roots.back();
      for (const auto& r : pre.roots) {
        acc += r.multiplicity;
        if (u < acc) {
          chosen = &r;
          break;
        }
      }
      x = chosen->point;
      if (step >= chain_burn_in) visit(x, step - chain_burn_in);
    }
    // The forward orbit reads the chain backwards.
    for (auto& v : values) std::reverse(v.begin(), v.end());
  }

  std::vector<std::vector<double>> errors(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i) {
    double sum = 0.0;
    std::size_t next_cp = 0;
    for (std::int64_t j = 0; j < n_total && next_cp < checkpoints.size(); ++j) {
      sum += values[i][j];
      if (j + 1 == checkpoints[next_cp]) {
        errors[i].push_back(std::abs(sum / (j + 1) - ref.pairings[i]));
        ++next_cp;
      }
    }
  }

  for (std::size_t i = 0; i < phis.size(); ++i) {
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      ReportRow row;
      row.n = static_cast<int>(checkpoints[c]);
      row.phi_tag = phis[i].tag();
      row.alpha = phis[i].alpha();
      row.error = errors[i][c];
      row.extras = {{"ref_gap", ref.gaps[i]}};
      report.rows.push_back(std::move(row));
    }
    const std::size_t early = std::min<std::size_t>(1, checkpoints.size() - 1);
    const double e_early = errors[i][early];
    const double e_final = errors[i].back();
    if (e_early <= 10.0 * cfg.error_floor && e_final <= 10.0 * cfg.error_floor) {
      report.verdicts.push_back(
          Verdict{"birkhoff_decay(" + phis[i].tag() + ")", VerdictStatus::pass, 0.0, 0.0});
    } else {
      Verdict v{"birkhoff_decay(" + phis[i].tag() + ")",
                e_final < e_early ? VerdictStatus::pass : VerdictStatus::fail, e_final, e_early};
      if (ref.gaps[i] >= e_final) v.status = VerdictStatus::inconclusive;
      report.verdicts.push_back(std::move(v));
    }
  }
  report.verdicts.push_back(Verdict{"generic_start",
                                    non_generic ? VerdictStatus::fail : VerdictStatus::pass,
                                    static_cast<double>(cycle_at), 0.0});
  (void)threads;
  return report;
}

ExperimentReport exp_hypersurface(const EndomorphismMap& f, const HomogeneousPolynomial& h,
                                  int grid_points, int n_min, int n_max, std::uint64_t seed,
                                  const NumericConfig& cfg, int threads) {
  if (h.n_vars() != f.dim() + 1) throw ConfigError("hypersurface polynomial dimension does not match the map");
  if (n_min < 1 || n_max < n_min) throw ConfigError("depth range must satisfy 1 <= n_min <= n_max");

  ExperimentReport report;
  report.experiment_id = "hypersurface";
  report.seed = seed;

  const int d = f.degree();
  const int q = h.degree();
  const double h_sup = sup_on_sphere(h);
  const int g_depth = green_depth_for_tail(f, cfg.green_tail_target, 20, cfg);

  // Excluded case: the hypersurface passes through a detected invariant
  // point, where the potential cannot decay.
  double min_candidate_dist = kInf;
  std::vector<ProjectivePoint> flagged;
  if (f.dim() == 1) {
    for (const auto& s : scan_invariant_candidates(f, cfg)) flagged.push_back(s.point);
  } else {
    flagged = known_invariant_points(f);
  }
  for (const auto& p : flagged) {
    const auto unit = euclid_unit(p);
    min_candidate_dist = std::min(min_candidate_dist, zero_distance_proxy(h, h_sup, unit));
  }
  const bool excluded = min_candidate_dist < 1e-6;
  report.verdicts.push_back(Verdict{"excluded_case", excluded ? VerdictStatus::fail : VerdictStatus::pass,
                                    min_candidate_dist, 1e-6});

  // Grid, with the required clearance from the zeros of h.
  std::vector<ProjectivePoint> grid;
  int clearance_dropped = 0;
  for (const auto& p : torus_grid(f.dim(), grid_points)) {
    if (zero_distance_proxy(h, h_sup, euclid_unit(p)) < cfg.grid_clearance) {
      ++clearance_dropped;
    } else {
      grid.push_back(p);
    }
  }
  if (grid.empty()) throw ConfigError("every grid point is within the clearance of the hypersurface");

  auto u_value = [&](const ProjectivePoint& p) {
    const auto unit = euclid_unit(p);
    return std::log(std::abs(h.evaluate(unit))) / q -
           green_value(f, std::span<const cplx>(unit), g_depth, cfg).value;
  };

  // Per-point forward orbits; a point whose orbit drifts into the pole
  // neighbourhood is dropped whole.
  const std::size_t n_grid = grid.size();
  std::vector<char> alive(n_grid, 1);
  std::vector<std::vector<double>> values(n_grid);  // |d^{-n} u(f^n p)| for n = n_min..n_max
  parallel_for(n_grid, threads, [&](std::size_t i) {
    ProjectivePoint x = grid[i];
    std::vector<double>& vals = values[i];
    double scale = 1.0;
    for (int n = 1; n <= n_max; ++n) {
      x = evaluate_map(f, x, cfg).image;
      scale /= d;
      if (zero_distance_proxy(h, h_sup, euclid_unit(x)) < cfg.pole_drop_tol) {
        alive[i] = 0;
        return;
      }
      if (n >= n_min) vals.push_back(std::abs(u_value(x)) * scale);
    }
  });

  std::int64_t survivors = 0;
  for (char c : alive) survivors += c;
  const double survivor_frac = static_cast<double>(survivors) / static_cast<double>(n_grid);

  std::vector<int> ns;
  std::vector<double> medians;
  for (int n = n_min; n <= n_max; ++n) {
    std::vector<double> column;
    double max_val = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) {
      if (!alive[i]) continue;
      const double v = values[i][n - n_min];
      column.push_back(v);
      max_val = std::max(max_val, v);
    }
    const double med = median_of(std::move(column));
    ns.push_back(n);
    medians.push_back(med);
    ReportRow row;
    row.n = n;
    row.phi_tag = "u_median";
    row.error = med;
    row.extras = {{"u_max", max_val},
                  {"survivors", static_cast<double>(survivors)},
                  {"clearance_dropped", static_cast<double>(clearance_dropped)},
                  {"green_depth", static_cast<double>(g_depth)}};
    report.rows.push_back(std::move(row));
  }

  const DecayFit fit = fit_decay(ns, medians, cfg);
  for (auto& row : report.rows) {
    row.fitted_rho = fit.fitted ? fit.rho : 0.0;
    row.r_squared = fit.fitted ? fit.r2 : 0.0;
  }
  // The Green evaluation error plays the role of the reference gap here.
  const double green_tail =
      estimate_map_constant(f, cfg) * std::pow(static_cast<double>(d), -g_depth) / (d - 1);
  report.self_gap = green_tail;
  Verdict decay{"median_decay", VerdictStatus::inconclusive, 0.0, cfg.rho_threshold};
  if (fit.fitted) {
    decay.measured = fit.rho;
    decay.status = (fit.rho >= cfg.rho_threshold && fit.r2 >= cfg.r2_threshold) ? VerdictStatus::pass
                                                                                : VerdictStatus::fail;
    if (green_tail >= fit.min_error_used) decay.status = VerdictStatus::inconclusive;
  } else if (fit.below_floor) {
    // The potential vanishes identically on the grid; nothing to fit.
    decay.measured = 0.0;
    decay.status = VerdictStatus::inconclusive;
  }
  report.verdicts.push_back(decay);
  report.verdicts.push_back(Verdict{"survivors",
                                    survivor_frac >= cfg.survivor_fraction ? VerdictStatus::pass
                                                                           : VerdictStatus::fail,
                                    survivor_frac, cfg.survivor_fraction});
  return report;
}

ExperimentReport exp_exponential_estimate(const EndomorphismMap& f, const HomogeneousPolynomial& h,
                                          std::int64_t sample_size, std::uint64_t seed,
                                          const NumericConfig& cfg, int threads) {
  if (h.n_vars() != f.dim() + 1) throw ConfigError("hypersurface polynomial dimension does not match the map");
  if (sample_size < 1) throw ConfigError("need at least one sample");

  ExperimentReport report;
  report.experiment_id = "exponential_estimate";
  report.seed = seed;

  const int q = h.degree();
  const double rescale = 1.0 / (q * (1.0 + cfg.dsh_mass_safety));
  const int g_depth = green_depth_for_tail(f, cfg.green_tail_target, 20, cfg);
  const int n_vars = f.dim() + 1;

  SplitRng root(seed);
  std::vector<double> estimates(3, 0.0);
  parallel_for(3, threads, [&](std::size_t trial) {
    SplitRng rng = root.split(trial);
    double acc = 0.0;
    std::int64_t used = 0;
    std::vector<cplx> z(n_vars);
    for (std::int64_t s = 0; s < sample_size; ++s) {
      double nz = 0.0;
      for (auto& c : z) {
        // Unitarily invariant Gaussians project to the Fubini-Study volume.
        c = cplx(rng.gaussian(), rng.gaussian());
        nz += std::norm(c);
      }
      nz = std::sqrt(nz);
      if (nz == 0.0) continue;
      for (auto& c : z) c /= nz;
      const double habs = std::abs(h.evaluate(z));
      if (habs == 0.0) continue;  // measure-zero pole hit
      const double u = std::log(habs) / q - green_value(f, std::span<const cplx>(z), g_depth, cfg).value;
      acc += std::exp(std::abs(u) * rescale);
      ++used;
    }
    estimates[trial] = used > 0 ? acc / used : 0.0;
  });

  const double mean = (estimates[0] + estimates[1] + estimates[2]) / 3.0;
  const double spread =
      (*std::max_element(estimates.begin(), estimates.end()) - *std::min_element(estimates.begin(), estimates.end())) /
      std::max(mean, 1e-300);
  for (int t = 0; t < 3; ++t) {
    ReportRow row;
    row.n = t;
    row.phi_tag = "exp_integral";
    row.error = estimates[t];
    row.extras = {{"estimate", estimates[t]}, {"rel_spread", spread}, {"rescale", rescale}};
    report.rows.push_back(std::move(row));
  }
  // Report-only: the constant in the exponential estimate is not computable,
  // so there is no pass/fail here.
  return report;
}

ExperimentReport exp_holder_modulus(const EndomorphismMap& f, const TestFunction& phi, int n_pairs,
                                    int n_min, int n_max, std::uint64_t seed, const NumericConfig& cfg,
                                    int threads) {
  if (n_pairs < 8) throw ConfigError("need at least 8 point pairs");
  if (n_min < 0 || n_max < n_min) throw ConfigError("depth range must satisfy 0 <= n_min <= n_max");

  ExperimentReport report;
  report.experiment_id = "holder_modulus";
  report.seed = seed;

  std::vector<ProjectivePoint> flagged;
  for (const auto& s : scan_invariant_candidates(f, cfg)) flagged.push_back(s.point);

  // Pairs on the unit circle at log-spaced separations, kept away from the
  // detected exceptional points.
  std::vector<std::pair<ProjectivePoint, ProjectivePoint>> pairs;
  for (int j = 0; pairs.size() < static_cast<std::size_t>(n_pairs) && j < 8 * n_pairs; ++j) {
    const double theta = 2.0 * M_PI * (j * 0.381966011 - std::floor(j * 0.381966011)) + 0.37;
    const double delta = std::pow(10.0, -4.0 + 3.0 * (j % n_pairs) / (n_pairs - 1.0));
    ProjectivePoint x = ProjectivePoint::normalize({cplx(std::cos(theta), std::sin(theta)), cplx(1.0, 0.0)});
    ProjectivePoint y =
        ProjectivePoint::normalize({cplx(std::cos(theta + delta), std::sin(theta + delta)), cplx(1.0, 0.0)});
    bool clear = true;
    for (const auto& e : flagged) {
      clear = clear && chordal_distance(x, e) >= 0.1 && chordal_distance(y, e) >= 0.1;
    }
    if (clear) pairs.emplace_back(std::move(x), std::move(y));
  }
  if (pairs.size() < 8) throw ConfigError("could not place enough pairs away from the exceptional points");

  for (int n = n_min; n <= n_max; ++n) {
    const double dn = std::pow(static_cast<double>(f.degree()), n);
    std::vector<double> vx(pairs.size()), vy(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
      auto eval = [&phi](const ProjectivePoint& p) { return phi(p); };
      vx[i] = lambda_apply(f, eval, pairs[i].first, n, cfg) / dn;
      vy[i] = lambda_apply(f, eval, pairs[i].second, n, cfg) / dn;
    });
    std::vector<double> log_dist, log_diff;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double diff = std::abs(vx[i] - vy[i]);
      if (diff > cfg.error_floor) {
        log_dist.push_back(std::log(chordal_distance(pairs[i].first, pairs[i].second)));
        log_diff.push_back(std::log(diff));
      }
    }
    ReportRow row;
    row.n = n;
    row.phi_tag = phi.tag();
    row.alpha = phi.alpha();
    if (log_dist.size() >= 3) {
      const auto [slope, r2] = linear_fit(log_dist, log_diff);
      row.error = 0.0;
      row.r_squared = r2;
      row.extras = {{"holder_exponent", slope}, {"pairs_used", static_cast<double>(log_dist.size())}};
    } else {
      row.extras = {{"holder_exponent", 0.0}, {"pairs_used", static_cast<double>(log_dist.size())}};
    }
    report.rows.push_back(std::move(row));
  }
  // Report-only: the modulus constants are existential, so no verdicts.
  return report;
}

const char* verdict_status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::pass:
      return "PASS";
    case VerdictStatus::fail:
      return "FAIL";
    default:
      return "INCONCLUSIVE";
  }
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "experiment_id,n,phi_tag,alpha,error,fitted_rho,r_squared";
  if (!report.rows.empty()) {
    for (const auto& [name, _] : report.rows.front().extras) out += "," + name;
  }
  out += "\n";
  for (const auto& row : report.rows) {
    out += report.experiment_id + "," + std::to_string(row.n) + "," + row.phi_tag + "," + g17(row.alpha) +
           "," + g17(row.error) + "," + g17(row.fitted_rho) + "," + g17(row.r_squared);
    for (const auto& [_, value] : row.extras) out += "," + g17(value);
    out += "\n";
  }
  return out;
}

std::string verdicts_text(const ExperimentReport& report) {
  std::string out;
  for (const auto& v : report.verdicts) {
    out += std::string(verdict_status_name(v.status)) + " " + v.label + " measured=" + g17(v.measured) +
           " threshold=" + g17(v.threshold) + "\n";
  }
  out += std::string("OVERALL: ") + verdict_status_name(report.overall()) + "\n";
  return out;
}

std::string summary_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["experiment_id"] = report.experiment_id;
  j["config_digest"] = report.config_digest;
  j["seed"] = report.seed;
  j["overall"] = verdict_status_name(report.overall());
  j["self_gap"] = report.self_gap;
  auto verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back({{"label", v.label},
                        {"status", verdict_status_name(v.status)},
                        {"measured", std::isfinite(v.measured) ? nlohmann::json(v.measured) : nlohmann::json(nullptr)},
                        {"threshold", std::isfinite(v.threshold) ? nlohmann::json(v.threshold) : nlohmann::json(nullptr)}});
  }
  j["verdicts"] = verdicts;
  j["rows_csv"] = "report.csv";
  return j.dump(2);
}

std::string write_report(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_dir) / (report.config_digest.empty() ? "undigested" : report.config_digest);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "report.csv");
    f << report_csv(report);
  }
  {
    std::ofstream f(dir / "verdicts.txt");
    f << verdicts_text(report);
  }
  {
    std::ofstream f(dir / "summary.json");
    f << summary_json(report) << "\n";
  }
  // Two-column (n, log10 error) files per observable, for plotting.
  fs::create_directories(dir / "plots");
  std::vector<std::string> tags;
  for (const auto& row : report.rows) {
    if (std::find(tags.begin(), tags.end(), row.phi_tag) == tags.end()) tags.push_back(row.phi_tag);
  }
  for (const auto& tag : tags) {
    std::string safe = tag;
    for (char& c : safe) {
      if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    }
    std::ofstream f(dir / "plots" / (safe + ".dat"));
    for (const auto& row : report.rows) {
      if (row.phi_tag == tag && row.error > 0.0) {
        f << row.n << " " << g17(std::log10(row.error)) << "\n";
      }
    }
  }
  return dir.string();
}

}  // namespace pkdyn
