#include "pkdyn/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pkdyn/errors.hpp"
#include "pkdyn/parallel.hpp"
#include "pkdyn/rng.hpp"

namespace pkdyn {

namespace {

// Boundedness probe for the TestFunction invariant |phi| <= norm_alpha.
void probe_bounded(const TestFunction::Evaluator& phi, double norm_alpha, const std::string& tag) {
  SplitRng rng(0xB0B0B0B0ull);
  for (int i = 0; i < 1000; ++i) {
    const cplx z(rng.gaussian(), rng.gaussian());
    const cplx w(rng.gaussian(), rng.gaussian());
    ProjectivePoint p = ProjectivePoint::normalize({z, w});
    const double v = phi(p);
    if (!std::isfinite(v) || std::abs(v) > norm_alpha * (1.0 + 1e-12)) {
      throw ConfigError("test function \"" + tag + "\" exceeds its declared norm on a probe point");
    }
  }
}

double affine_arg(const ProjectivePoint& p) {
  const cplx z = p.affine();
  if (std::isinf(z.real()) || (z.real() == 0.0 && z.imag() == 0.0)) return 0.0;
  return std::arg(z);
}

}  // namespace

TestFunction::TestFunction(Evaluator evaluator, double alpha, double norm_alpha, std::string family_tag)
    : evaluator_(std::move(evaluator)), alpha_(alpha), norm_alpha_(norm_alpha), family_tag_(std::move(family_tag)) {
  if (!(alpha_ > 0.0) || alpha_ > 2.0) throw ConfigError("test function regularity must lie in (0, 2]");
  if (!(norm_alpha_ >= 0.0)) throw ConfigError("test function norm must be >= 0");
  probe_bounded(evaluator_, norm_alpha_, family_tag_);
}

TestFunction trig_moment(int m) {
  if (m < 1) throw ConfigError("trig moment order must be >= 1");
  auto eval = [m](const ProjectivePoint& p) { return std::cos(m * affine_arg(p)); };
  // cos(m arg) is Lipschitz on the circle with constant m; declare the C^2-ish
  // norm 1 + m + m^2 so the bound also covers second differences there.
  return TestFunction(eval, 2.0, 1.0 + m + static_cast<double>(m) * m, "trig_moment(" + std::to_string(m) + ")");
}

TestFunction bump(const ProjectivePoint& center, double radius) {
  if (!(radius > 0.0) || radius > 1.0) throw ConfigError("bump radius must lie in (0, 1]");
  ProjectivePoint c = center;
  auto eval = [c, radius](const ProjectivePoint& p) {
    const double t = chordal_distance(p, c) / radius;
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t * t;
    return s * s * s;
  };
  // eta(t) = (1-t^2)^3: sup 1, |eta'| <= 1.72, |eta''| <= 6, scaled by radius.
  const double norm = 1.0 + 1.72 / radius + 6.0 / (radius * radius);
  char tag[64];
  std::snprintf(tag, sizeof tag, "bump(%.6g,%.6g,r=%.6g)", c.affine().real(), c.affine().imag(), radius);
  return TestFunction(eval, 2.0, norm, tag);
}

TestFunction holder_kernel(const ProjectivePoint& center, double alpha) {
  if (!(alpha > 0.0) || alpha > 2.0) throw ConfigError("kernel exponent must lie in (0, 2]");
  ProjectivePoint c = center;
  auto eval = [c, alpha](const ProjectivePoint& p) { return std::pow(chordal_distance(p, c), alpha); };
  char tag[64];
  std::snprintf(tag, sizeof tag, "holder_kernel(%.6g,%.6g,a=%.3g)", c.affine().real(), c.affine().imag(), alpha);
  // dist^alpha <= 1 on the chordal-unit space; Hoelder seminorm <= 1 for
  // alpha <= 1 and <= 2 up to alpha = 2.
  return TestFunction(eval, alpha, 2.0, tag);
}

TestFunction constant_function(double c) {
  auto eval = [c](const ProjectivePoint&) { return c; };
  char tag[32];
  std::snprintf(tag, sizeof tag, "const(%.6g)", c);
  return TestFunction(eval, 2.0, std::abs(c), tag);
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<WeightedAtom> atoms, bool normalized)
    : atoms_(std::move(atoms)), normalized_(normalized), total_weight_(0.0) {
  for (const auto& a : atoms_) {
    if (!(a.weight > 0.0)) throw ConfigError("measure atoms need positive weight");
    total_weight_ += a.weight;
  }
  if (normalized_ && std::abs(total_weight_ - 1.0) > 1e-12) {
    throw ConfigError("normalized measure has total mass " + std::to_string(total_weight_));
  }
}

EmpiricalMeasure EmpiricalMeasure::from_fiber(const FiberCloud& cloud) {
  const double total = static_cast<double>(cloud.total_weight());
  if (total <= 0.0) throw EmptyMeasureError();
  std::vector<WeightedAtom> atoms;
  atoms.reserve(cloud.atoms.size());
  // Normalize by the exact integer total; the atom weights then sum to 1 up
  // to one rounding per atom.
  double acc = 0.0;
  for (const auto& a : cloud.atoms) {
    atoms.push_back(WeightedAtom{a.point, static_cast<double>(a.weight) / total});
    acc += atoms.back().weight;
  }
  const bool unit = std::abs(acc - 1.0) <= 1e-12;
  return EmpiricalMeasure(std::move(atoms), unit);
}

double pair(const EmpiricalMeasure& m, const std::function<double(const ProjectivePoint&)>& phi) {
  if (m.atoms().empty()) throw EmptyMeasureError();
  double num = 0.0;
  for (const auto& a : m.atoms()) num += a.weight * phi(a.point);
  return num / m.total_weight();
}

double pair(const EmpiricalMeasure& m, const TestFunction& phi) {
  return pair(m, [&phi](const ProjectivePoint& p) { return phi(p); });
}

namespace {

void gate_base(const EndomorphismMap& f, const ProjectivePoint& base, const NumericConfig& cfg) {
  const auto scans = exceptional_scan(f, cfg.scan_lambda, cfg.scan_depth, {base}, cfg);
  if (scans.front().flagged) {
    throw ExceptionalBaseError("base point " + base.str() + " is flagged by the exceptional scan (rate " +
                               std::to_string(scans.front().rate) + ")");
  }
}

}  // namespace

EmpiricalMeasure equilibrium_estimate(const EndomorphismMap& f, const EquilibriumMethod& method,
                                      const NumericConfig& cfg, int threads) {
  if (const auto* full = std::get_if<FullFiber>(&method)) {
    gate_base(f, full->base, cfg);
    return EmpiricalMeasure::from_fiber(backward_orbit_exact(f, full->base, full->depth, cfg, threads));
  }
  const auto& inv = std::get<InverseIteration>(method);
  gate_base(f, inv.base, cfg);
  if (inv.count < 1) throw ConfigError("inverse iteration needs count >= 1");
  if (inv.burn_in < 0) throw ConfigError("burn-in must be >= 0");
  // Fixed chain decomposition: eight chains regardless of the thread count,
  // each with its own seed stream, so output does not depend on scheduling.
  const int chains = static_cast<int>(std::min<std::int64_t>(8, inv.count));
  const std::int64_t per_chain = (inv.count + chains - 1) / chains;
  SplitRng root(inv.seed);
  std::vector<std::vector<ProjectivePoint>> samples(chains);
  const int d = f.degree();
  parallel_for(static_cast<std::size_t>(chains), threads, [&](std::size_t chain) {
    SplitRng rng = root.split(chain);
    ProjectivePoint x = inv.base;
    const std::int64_t want =
        std::min<std::int64_t>(per_chain, inv.count - static_cast<std::int64_t>(chain) * per_chain);
    if (want <= 0) return;
    auto& slot = samples[chain];
    slot.reserve(want);
    for (std::int64_t step = 0; static_cast<std::int64_t>(slot.size()) < want; ++step) {
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
      if (step >= inv.burn_in) slot.push_back(x);
    }
  });
  std::vector<WeightedAtom> atoms;
  atoms.reserve(inv.count);
  const double w = 1.0 / static_cast<double>(inv.count);
  for (const auto& chain : samples) {
    for (const auto& p : chain) atoms.push_back(WeightedAtom{p, w});
  }
  return EmpiricalMeasure(std::move(atoms), std::abs(atoms.size() * w - 1.0) <= 1e-12);
}

RateFit fit_rate(const std::vector<int>& ns, const std::vector<double>& errors, const NumericConfig& cfg) {
  if (ns.size() != errors.size()) throw ConfigError("rate fit needs matching n and error lists");
  RateFit fit;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (errors[i] > cfg.error_floor) {
      fit.ns.push_back(ns[i]);
      fit.errors.push_back(errors[i]);
    }
  }
  const std::size_t m = fit.ns.size();
  if (m < 3) {
    throw InsufficientDataError("rate fit needs at least 3 errors above the floor, got " + std::to_string(m));
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += fit.ns[i];
    sy += std::log(fit.errors[i]);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = fit.ns[i] - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(fit.errors[i]) - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("rate fit needs at least two distinct depths");
  const double slope = sxy / sxx;
  fit.fitted_rho = std::exp(-slope);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double y = std::log(fit.errors[i]);
    const double yhat = my + slope * (fit.ns[i] - mx);
    ss_res += (y - yhat) * (y - yhat);
    ss_tot += (y - my) * (y - my);
  }
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

std::int64_t count_in_set(const FiberCloud& cloud, const std::function<bool(const ProjectivePoint&)>& inside) {
  std::int64_t count = 0;
  for (const auto& atom : cloud.atoms) {
    if (inside(atom.point)) count += atom.weight;
  }
  return count;
}

bool region_contains(const Region& region, const ProjectivePoint& p) {
  if (std::holds_alternative<AllRegion>(region)) return true;
  if (std::holds_alternative<EmptyRegion>(region)) return false;
  if (const auto* sector = std::get_if<SectorRegion>(&region)) {
    const cplx z = p.affine();
    if (std::isinf(z.real())) return false;
    double theta = std::arg(z);
    // Fold into [theta0, theta0 + 2 pi).
    const double span = sector->theta1 - sector->theta0;
    double rel = std::fmod(theta - sector->theta0, 2.0 * M_PI);
    if (rel < 0) rel += 2.0 * M_PI;
    return rel < span;
  }
  const auto& disc = std::get<DiscRegion>(region);
  const cplx z = p.affine();
  if (std::isinf(z.real())) return false;
  return std::abs(z - disc.center) < disc.radius;
}

double region_boundary_distance(const Region& region, const ProjectivePoint& p) {
  if (std::holds_alternative<AllRegion>(region) || std::holds_alternative<EmptyRegion>(region)) {
    return std::numeric_limits<double>::infinity();
  }
  if (const auto* sector = std::get_if<SectorRegion>(&region)) {
    const cplx z = p.affine();
    if (std::isinf(z.real())) return std::numeric_limits<double>::infinity();
    const double theta = std::arg(z);
    auto angdist = [](double a, double b) {
      double d = std::fmod(std::abs(a - b), 2.0 * M_PI);
      return std::min(d, 2.0 * M_PI - d);
    };
    return std::min(angdist(theta, sector->theta0), angdist(theta, sector->theta1));
  }
  const auto& disc = std::get<DiscRegion>(region);
  const cplx z = p.affine();
  if (std::isinf(z.real())) return std::numeric_limits<double>::infinity();
  return std::abs(std::abs(z - disc.center) - disc.radius);
}

std::string region_label(const Region& region) {
  char buf[96];
  if (std::holds_alternative<AllRegion>(region)) return "all";
  if (std::holds_alternative<EmptyRegion>(region)) return "empty";
  if (const auto* sector = std::get_if<SectorRegion>(&region)) {
    std::snprintf(buf, sizeof buf, "sector(%.6g,%.6g)", sector->theta0, sector->theta1);
    return buf;
  }
  const auto& disc = std::get<DiscRegion>(region);
  std::snprintf(buf, sizeof buf, "disc(%.6g%+.6gi,r=%.6g)", disc.center.real(), disc.center.imag(), disc.radius);
  return buf;
}

}  // namespace pkdyn
