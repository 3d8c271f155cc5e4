#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pkdyn/config.hpp"
#include "pkdyn/polyroots.hpp"
#include "pkdyn/projective.hpp"

namespace pkdyn {

// The full preimage f^{-1}(a) on P^1: multiplicities sum to the degree
// exactly, every root maps back to the target within the residual tolerance.
struct PreimageSet {
  ProjectivePoint target;
  std::vector<BinaryFormRoot> roots;  // deterministic order: (re, im) of the affine rep, infinity last
  std::vector<double> residuals;      // chordal distance of f(root) to the target, per root
};

PreimageSet preimages_p1(const EndomorphismMap& f, const ProjectivePoint& a,
                         const NumericConfig& cfg = default_config());

struct FiberAtom {
  ProjectivePoint point;
  std::int64_t weight;
};

enum class FiberMode { exact, sampled };

// The fiber measure at depth n: in exact mode a weighted multiset with total
// weight d^n exactly; in sampled mode i.i.d. draws with weight 1 each.
struct FiberCloud {
  ProjectivePoint base;
  int depth = 0;
  std::vector<FiberAtom> atoms;
  FiberMode mode = FiberMode::exact;
  std::int64_t sample_count = 0;  // sampled mode only
  std::uint64_t seed = 0;         // sampled mode only

  std::int64_t total_weight() const;
  int distinct_atoms(const NumericConfig& cfg = default_config()) const;
};

// One backward expansion step: the depth-(n+1) atoms below the given ones.
std::vector<FiberAtom> expand_fiber_level(const EndomorphismMap& f, const std::vector<FiberAtom>& atoms,
                                          const NumericConfig& cfg = default_config(), int threads = 1);

FiberCloud backward_orbit_exact(const EndomorphismMap& f, const ProjectivePoint& a, int n,
                                const NumericConfig& cfg = default_config(), int threads = 1);

FiberCloud backward_orbit_sampled(const EndomorphismMap& f, const ProjectivePoint& a, int n,
                                  std::int64_t count, std::uint64_t seed,
                                  const NumericConfig& cfg = default_config(), int threads = 1);

// Lambda^n phi (a) = sum over the exact depth-n fiber of weight * phi(atom),
// so that d^{-n} * result is the pairing of the fiber measure with phi.
double lambda_apply(const EndomorphismMap& f, const std::function<double(const ProjectivePoint&)>& phi,
                    const ProjectivePoint& a, int n, const NumericConfig& cfg = default_config(),
                    int threads = 1);

// Local multiplicities along and below a point: kappa_n as the chain-rule
// product of one-step multiplicities, kappa_{-n} as the max over the
// depth-n backward tree.
struct MultiplicityReport {
  ProjectivePoint point;
  std::vector<int> kappa_along_orbit;  // kappa_1 at x, f(x), ..., f^{n-1}(x)
  std::int64_t kappa_n = 1;
  std::int64_t kappa_minus_n = 1;
  int depth = 0;
};

MultiplicityReport multiplicity_kappa(const EndomorphismMap& f, const ProjectivePoint& x, int n,
                                      const NumericConfig& cfg = default_config());

// Finite-depth heuristic for the exceptional set: flags candidates whose
// backward multiplicity rate kappa_{-depth}^{1/depth} reaches degree/lambda.
struct ScanResult {
  ProjectivePoint point;
  bool flagged;
  double rate;
};

std::vector<ScanResult> exceptional_scan(const EndomorphismMap& f, double lambda, int depth,
                                         const std::vector<ProjectivePoint>& candidates,
                                         const NumericConfig& cfg = default_config());

// The d+1 fixed points of f on P^1 (roots of z F_1 - w F_0), the natural
// candidate list for exceptional-point scanning.
std::vector<BinaryFormRoot> fixed_points_p1(const EndomorphismMap& f,
                                            const NumericConfig& cfg = default_config());

// Convenience: scan the fixed points and return the flagged ones.
std::vector<ScanResult> scan_invariant_candidates(const EndomorphismMap& f,
                                                  const NumericConfig& cfg = default_config());

// CSV export with columns atom_re, atom_im, chart, weight. chart is the
// pivot index: chart 0 stores z1 of [1 : z1], chart 1 stores z0 of [z0 : 1].
std::string fiber_csv(const FiberCloud& cloud);

// Binary cache: magic "FIBC", version byte, then little-endian payload.
void fiber_write_binary(const FiberCloud& cloud, std::ostream& out);
FiberCloud fiber_read_binary(std::istream& in);
void fiber_write_binary_file(const FiberCloud& cloud, const std::string& path);
FiberCloud fiber_read_binary_file(const std::string& path);

}  // namespace pkdyn
