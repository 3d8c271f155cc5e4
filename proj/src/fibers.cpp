#include "pkdyn/fibers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "pkdyn/errors.hpp"
#include "pkdyn/parallel.hpp"
#include "pkdyn/rng.hpp"

namespace pkdyn {

namespace {

void require_p1(const EndomorphismMap& f, const char* what) {
  if (f.dim() != 1) {
    throw NotSupportedError(std::string(what) + " requires k = 1; fibers on P^k for k >= 2 are not supported");
  }
}

// Coefficients of the degree-d binary form a1 F0(z, w) - a0 F1(z, w), whose
// projective roots are exactly f^{-1}(a).
std::vector<cplx> fiber_form(const EndomorphismMap& f, const ProjectivePoint& a) {
  const auto c0 = f.components()[0].binary_coefficients();
  const auto c1 = f.components()[1].binary_coefficients();
  const cplx a0 = a[0], a1 = a[1];
  std::vector<cplx> b(c0.size());
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = a1 * c0[j] - a0 * c1[j];
  return b;
}

std::int64_t pow_weight(int d, int n) {
  // Guards the exact-mode invariant: total weight d^n must stay representable.
  std::int64_t w = 1;
  for (int i = 0; i < n; ++i) {
    if (w > std::numeric_limits<std::int64_t>::max() / d) {
      throw CapExceededError("total fiber weight d^n overflows at depth " + std::to_string(n));
    }
    w *= d;
  }
  return w;
}

}  // namespace

PreimageSet preimages_p1(const EndomorphismMap& f, const ProjectivePoint& a, const NumericConfig& cfg) {
  require_p1(f, "preimages_p1");
  if (a.dim() != 1) throw DimMismatchError();
  const auto form = fiber_form(f, a);
  auto roots = binary_form_roots(form, cfg);

  bool multiple = false;
  for (const auto& r : roots) multiple = multiple || r.multiplicity > 1;
  // A multiple root means the target sits at (numerically at) a critical
  // value, where root positions have O(eps^(1/m)) sensitivity; the residual
  // tolerance is relaxed by the documented factor d in that regime.
  const double relax = (cfg.critical_relax > 0.0) ? cfg.critical_relax : static_cast<double>(f.degree());
  const double tol = cfg.residual_tol * (multiple ? relax : 1.0);

  PreimageSet out{a, std::move(roots), {}};
  out.residuals.reserve(out.roots.size());
  for (const auto& r : out.roots) {
    const MapImage img = evaluate_map(f, r.point, cfg);
    const double res = chordal_distance(img.image, a);
    if (res > tol) {
      throw SolverFailureError("preimage residual " + std::to_string(res) + " exceeds tolerance at target " +
                               a.str() + "; the solve is ill-conditioned");
    }
    out.residuals.push_back(res);
  }
  return out;
}

std::int64_t FiberCloud::total_weight() const {
  std::int64_t t = 0;
  for (const auto& atom : atoms) t += atom.weight;
  return t;
}

int FiberCloud::distinct_atoms(const NumericConfig& cfg) const {
  // Reporting helper only; exact-mode bookkeeping never merges across
  // branches. A hash grid at the clustering resolution keeps this linear in
  // the atom count.
  const double cell = std::max(cfg.clustering_tol, 1e-15);
  std::unordered_map<std::uint64_t, std::vector<const ProjectivePoint*>> grid;
  auto cell_key = [](int chart, std::int64_t cx, std::int64_t cy) {
    std::uint64_t h = static_cast<std::uint64_t>(chart) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(cx) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(cy) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
  };
  int count = 0;
  for (const auto& atom : atoms) {
    const int chart = atom.point.pivot();
    const cplx v = atom.point[chart == 0 ? 1 : 0];
    const auto cx = static_cast<std::int64_t>(std::floor(v.real() / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(v.imag() / cell));
    bool found = false;
    for (std::int64_t dx = -1; dx <= 1 && !found; ++dx) {
      for (std::int64_t dy = -1; dy <= 1 && !found; ++dy) {
        auto it = grid.find(cell_key(chart, cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (const auto* rep : it->second) {
          if (chordal_distance(*rep, atom.point) <= cfg.clustering_tol) {
            found = true;
            break;
          }
        }
      }
    }
    if (!found) {
      grid[cell_key(chart, cx, cy)].push_back(&atom.point);
      ++count;
    }
  }
  return count;
}

std::vector<FiberAtom> expand_fiber_level(const EndomorphismMap& f, const std::vector<FiberAtom>& atoms,
                                          const NumericConfig& cfg, int threads) {
  if (static_cast<std::int64_t>(atoms.size()) * f.degree() > cfg.atom_cap) {
    throw CapExceededError("fiber expansion would exceed the atom cap of " + std::to_string(cfg.atom_cap));
  }
  std::vector<std::vector<FiberAtom>> children(atoms.size());
  parallel_for(atoms.size(), threads, [&](std::size_t i) {
    const PreimageSet pre = preimages_p1(f, atoms[i].point, cfg);
    auto& slot = children[i];
    slot.reserve(pre.roots.size());
    for (const auto& r : pre.roots) {
      slot.push_back(FiberAtom{r.point, atoms[i].weight * r.multiplicity});
    }
  });
  std::vector<FiberAtom> next;
  std::size_t total = 0;
  for (const auto& slot : children) total += slot.size();
  next.reserve(total);
  for (auto& slot : children) {
    for (auto& atom : slot) next.push_back(std::move(atom));
  }
  return next;
}

FiberCloud backward_orbit_exact(const EndomorphismMap& f, const ProjectivePoint& a, int n,
                                const NumericConfig& cfg, int threads) {
  require_p1(f, "backward_orbit");
  if (n < 0) throw ConfigError("fiber depth must be >= 0");
  pow_weight(f.degree(), n);
  FiberCloud cloud{a, n, {FiberAtom{a, 1}}, FiberMode::exact, 0, 0};
  for (int level = 0; level < n; ++level) {
    cloud.atoms = expand_fiber_level(f, cloud.atoms, cfg, threads);
  }
  return cloud;
}

FiberCloud backward_orbit_sampled(const EndomorphismMap& f, const ProjectivePoint& a, int n,
                                  std::int64_t count, std::uint64_t seed, const NumericConfig& cfg,
                                  int threads) {
  require_p1(f, "backward_orbit");
  if (n < 0) throw ConfigError("fiber depth must be >= 0");
  if (count < 1) throw ConfigError("sampled mode needs count >= 1");
  const int d = f.degree();
  std::vector<FiberAtom> atoms(count, FiberAtom{a, 1});
  SplitRng root(seed);
  parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t s) {
    SplitRng rng = root.split(s);  // per-sample stream: results do not depend on scheduling
    ProjectivePoint x = a;
    for (int step = 0; step < n; ++step) {
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
    }
    atoms[s].point = x;
  });
  FiberCloud cloud{a, n, std::move(atoms), FiberMode::sampled, count, seed};
  return cloud;
}

double lambda_apply(const EndomorphismMap& f, const std::function<double(const ProjectivePoint&)>& phi,
                    const ProjectivePoint& a, int n, const NumericConfig& cfg, int threads) {
  const FiberCloud cloud = backward_orbit_exact(f, a, n, cfg, threads);
  double acc = 0.0;
  for (const auto& atom : cloud.atoms) acc += static_cast<double>(atom.weight) * phi(atom.point);
  return acc;
}

namespace {

// kappa_1(y): multiplicity of y inside f^{-1}(f(y)), located by cluster
// membership.
int kappa_one(const EndomorphismMap& f, const ProjectivePoint& y, const NumericConfig& cfg) {
  const MapImage img = evaluate_map(f, y, cfg);
  const PreimageSet pre = preimages_p1(f, img.image, cfg);
  double best = 2.0;
  int mult = 0;
  for (const auto& r : pre.roots) {
    const double dist = chordal_distance(r.point, y);
    if (dist < best) {
      best = dist;
      mult = r.multiplicity;
    }
  }
  if (best > 100.0 * cfg.clustering_tol) {
    throw SolverFailureError("point is not recovered among the preimages of its own image (distance " +
                             std::to_string(best) + ")");
  }
  return mult;
}

}  // namespace

MultiplicityReport multiplicity_kappa(const EndomorphismMap& f, const ProjectivePoint& x, int n,
                                      const NumericConfig& cfg) {
  require_p1(f, "multiplicity_kappa");
  if (n < 0) throw ConfigError("multiplicity depth must be >= 0");
  MultiplicityReport rep{x, {}, 1, 1, n};
  // Forward chain rule: kappa_n(x) = prod_j kappa_1(f^j(x)).
  ProjectivePoint y = x;
  for (int j = 0; j < n; ++j) {
    const int k1 = kappa_one(f, y, cfg);
    rep.kappa_along_orbit.push_back(k1);
    rep.kappa_n *= k1;
    y = evaluate_map(f, y, cfg).image;
  }
  // Backward max: expand the tree below x keeping the running product of
  // edge multiplicities; each edge multiplicity is kappa_1 of the child.
  struct Node {
    ProjectivePoint point;
    std::int64_t product;
  };
  std::vector<Node> frontier{{x, 1}};
  for (int level = 0; level < n; ++level) {
    std::vector<Node> next;
    next.reserve(frontier.size() * f.degree());
    for (const auto& node : frontier) {
      const PreimageSet pre = preimages_p1(f, node.point, cfg);
      for (const auto& r : pre.roots) {
        next.push_back(Node{r.point, node.product * r.multiplicity});
      }
    }
    if (static_cast<std::int64_t>(next.size()) > cfg.atom_cap) {
      throw CapExceededError("backward multiplicity tree exceeds the atom cap");
    }
    frontier = std::move(next);
  }
  for (const auto& node : frontier) rep.kappa_minus_n = std::max(rep.kappa_minus_n, node.product);
  return rep;
}

std::vector<ScanResult> exceptional_scan(const EndomorphismMap& f, double lambda, int depth,
                                         const std::vector<ProjectivePoint>& candidates,
                                         const NumericConfig& cfg) {
  require_p1(f, "exceptional_scan");
  if (depth < 1) throw ConfigError("scan depth must be >= 1");
  if (!(lambda > 1.0) || !(lambda < f.degree())) {
    throw ConfigError("scan lambda must lie in (1, d)");
  }
  const double threshold = f.degree() / lambda;
  std::vector<ScanResult> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    const MultiplicityReport rep = multiplicity_kappa(f, c, depth, cfg);
    const double rate = std::pow(static_cast<double>(rep.kappa_minus_n), 1.0 / depth);
    out.push_back(ScanResult{c, rate >= threshold, rate});
  }
  return out;
}

std::vector<BinaryFormRoot> fixed_points_p1(const EndomorphismMap& f, const NumericConfig& cfg) {
  require_p1(f, "fixed_points_p1");
  // z F1 - w F0 has degree d+1; its projective roots are the fixed points.
  const auto c0 = f.components()[0].binary_coefficients();
  const auto c1 = f.components()[1].binary_coefficients();
  const int d = f.degree();
  std::vector<cplx> form(d + 2, cplx(0.0, 0.0));
  for (int j = 0; j <= d; ++j) {
    form[j + 1] += c1[j];  // z * (coeff of z^j w^(d-j)) -> degree j+1 in z
    form[j] -= c0[j];      // w * F0
  }
  return binary_form_roots(form, cfg);
}

std::vector<ScanResult> scan_invariant_candidates(const EndomorphismMap& f, const NumericConfig& cfg) {
  std::vector<ProjectivePoint> candidates;
  for (const auto& fp : fixed_points_p1(f, cfg)) candidates.push_back(fp.point);
  auto scans = exceptional_scan(f, cfg.scan_lambda, cfg.scan_depth, candidates, cfg);
  std::vector<ScanResult> flagged;
  for (auto& s : scans) {
    if (s.flagged) flagged.push_back(s);
  }
  return flagged;
}

std::string fiber_csv(const FiberCloud& cloud) {
  std::string out = "atom_re,atom_im,chart,weight\n";
  char buf[96];
  for (const auto& atom : cloud.atoms) {
    const int chart = atom.point.pivot();
    const cplx value = atom.point[chart == 0 ? 1 : 0];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%lld\n", value.real(), value.imag(), chart,
                  static_cast<long long>(atom.weight));
    out += buf;
  }
  return out;
}

namespace {

constexpr char kFibcMagic[4] = {'F', 'I', 'B', 'C'};
constexpr std::uint8_t kFibcVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void fiber_write_binary(const FiberCloud& cloud, std::ostream& out) {
  out.write(kFibcMagic, 4);
  out.put(static_cast<char>(kFibcVersion));
  out.put(static_cast<char>(cloud.mode == FiberMode::exact ? 0 : 1));
  out.put(0);
  out.put(0);
  put_u64(out, static_cast<std::uint64_t>(cloud.depth));
  put_u64(out, cloud.atoms.size());
  put_u64(out, cloud.seed);
  put_u64(out, static_cast<std::uint64_t>(cloud.sample_count));
  for (const auto& c : cloud.base.coords()) {
    put_f64(out, c.real());
    put_f64(out, c.imag());
  }
  for (const auto& atom : cloud.atoms) {
    const int chart = atom.point.pivot();
    const cplx value = atom.point[chart == 0 ? 1 : 0];
    put_f64(out, value.real());
    put_f64(out, value.imag());
    put_f64(out, static_cast<double>(chart));
    put_f64(out, static_cast<double>(atom.weight));
  }
  if (!out) throw IoError("fiber cache write failed");
}

FiberCloud fiber_read_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFibcMagic, 4) != 0) throw IoError("not a FIBC fiber cache");
  const int version = in.get();
  if (version != kFibcVersion) throw IoError("unsupported FIBC version " + std::to_string(version));
  const int mode = in.get();
  in.get();
  in.get();
  const int depth = static_cast<int>(get_u64(in));
  const std::uint64_t n_atoms = get_u64(in);
  const std::uint64_t seed = get_u64(in);
  const std::int64_t sample_count = static_cast<std::int64_t>(get_u64(in));
  const double br0 = get_f64(in), bi0 = get_f64(in), br1 = get_f64(in), bi1 = get_f64(in);
  FiberCloud cloud{ProjectivePoint::normalize({cplx(br0, bi0), cplx(br1, bi1)}), depth, {},
                   mode == 0 ? FiberMode::exact : FiberMode::sampled, sample_count, seed};
  cloud.atoms.reserve(n_atoms);
  for (std::uint64_t i = 0; i < n_atoms; ++i) {
    const double re = get_f64(in), im = get_f64(in);
    const int chart = static_cast<int>(get_f64(in));
    const auto weight = static_cast<std::int64_t>(get_f64(in));
    const cplx v(re, im);
    ProjectivePoint p = chart == 0 ? ProjectivePoint::normalize({cplx(1.0, 0.0), v})
                                   : ProjectivePoint::normalize({v, cplx(1.0, 0.0)});
    cloud.atoms.push_back(FiberAtom{std::move(p), weight});
  }
  if (!in) throw IoError("fiber cache truncated");
  return cloud;
}

void fiber_write_binary_file(const FiberCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  fiber_write_binary(cloud, out);
}

FiberCloud fiber_read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return fiber_read_binary(in);
}

}  // namespace pkdyn
