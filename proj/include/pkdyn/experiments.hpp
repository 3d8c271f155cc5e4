#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pkdyn/config.hpp"
#include "pkdyn/fibers.hpp"
#include "pkdyn/green.hpp"
#include "pkdyn/measures.hpp"
#include "pkdyn/projective.hpp"

namespace pkdyn {

enum class VerdictStatus { pass, fail, inconclusive };

struct Verdict {
  std::string label;
  VerdictStatus status;
  double measured;
  double threshold;
};

// One measurement record. The base columns follow the report schema
// (experiment_id, n, phi_tag, alpha, error, fitted_rho, r_squared); extras
// carry experiment-specific named columns appended after the base ones.
struct ReportRow {
  int n = 0;
  std::string phi_tag;
  double alpha = 0.0;
  double error = 0.0;
  double fitted_rho = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<std::string, double>> extras;
};

struct ExperimentReport {
  std::string experiment_id;
  std::string config_digest;  // filled by the runner
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<Verdict> verdicts;
  double self_gap = 0.0;  // reference-estimator self-consistency gap, where applicable

  VerdictStatus overall() const;
};

// Invariant points known structurally from the presets (coordinate points of
// power maps, infinity for polynomial lifts); empty for maps with no
// recognized structure. Works in any dimension.
std::vector<ProjectivePoint> known_invariant_points(const EndomorphismMap& f);

// Candidates for exceptional-point detection: the scan-flagged fixed points
// for k = 1 plus the known preset invariants.
std::vector<ProjectivePoint> exceptional_candidates(const EndomorphismMap& f,
                                                    const NumericConfig& cfg = default_config());

// Grid of unit-torus points used by the potential experiments: for k = 1 a
// circle grid with a golden-ratio phase offset, for k = 2 the corresponding
// square torus grid.
std::vector<ProjectivePoint> torus_grid(int dim, int count);

// Fiber-measure convergence with rate fitting and the alpha-scaling check.
ExperimentReport exp_point_equidistribution(const EndomorphismMap& f, const ProjectivePoint& a,
                                            const std::vector<TestFunction>& phis, int n_min, int n_max,
                                            const ProjectivePoint& ref_base, int ref_depth,
                                            std::uint64_t seed, const NumericConfig& cfg = default_config(),
                                            int threads = 1);

// Non-convergence over an exceptional base point.
ExperimentReport exp_exceptional(const EndomorphismMap& f, const ProjectivePoint& a_exceptional,
                                 const std::vector<TestFunction>& phis, int n_min, int n_max,
                                 const ProjectivePoint& ref_base, int ref_depth, std::uint64_t seed,
                                 const NumericConfig& cfg = default_config(), int threads = 1);

// Fiber point counts inside regions, compared across two bases and against
// the reference measure.
ExperimentReport exp_counting(const EndomorphismMap& f, const ProjectivePoint& a, const ProjectivePoint& b,
                              const std::vector<Region>& regions, int n_min, int n_max,
                              const ProjectivePoint& ref_base, int ref_depth, std::uint64_t seed,
                              const NumericConfig& cfg = default_config(), int threads = 1);

// Correlation decay <mu, phi (psi o f^n)> - <mu, phi><mu, psi> over an
// inverse-iteration sample.
ExperimentReport exp_mixing(const EndomorphismMap& f, const TestFunction& phi, const TestFunction& psi,
                            int n_min, int n_max, std::int64_t sample_size, int burn_in,
                            const ProjectivePoint& base, std::uint64_t seed,
                            const NumericConfig& cfg = default_config(), int threads = 1);

// Orbit averages against the reference measure at logarithmic checkpoints.
// When `start` is absent the start point is sampled by inverse iteration.
ExperimentReport exp_birkhoff(const EndomorphismMap& f, const std::vector<TestFunction>& phis,
                              std::int64_t n_total, const std::optional<ProjectivePoint>& start,
                              const ProjectivePoint& ref_base, int ref_depth, std::uint64_t seed,
                              const NumericConfig& cfg = default_config(), int threads = 1);

// Decay of d^{-n} u(f^n p) for the hypersurface potential
// u = deg(h)^{-1} log|h| - G, with the excluded-case flag when the
// hypersurface passes through a detected invariant point.
ExperimentReport exp_hypersurface(const EndomorphismMap& f, const HomogeneousPolynomial& h,
                                  int grid_points, int n_min, int n_max, std::uint64_t seed,
                                  const NumericConfig& cfg = default_config(), int threads = 1);

// Monte Carlo estimate of the exponential integral of |u| against the
// Fubini-Study volume; report-only.
ExperimentReport exp_exponential_estimate(const EndomorphismMap& f, const HomogeneousPolynomial& h,
                                          std::int64_t sample_size, std::uint64_t seed,
                                          const NumericConfig& cfg = default_config(), int threads = 1);

// Empirical Hoelder exponents of the normalized pushforwards d^{-n} Lambda^n
// phi over a family of point pairs; report-only.
ExperimentReport exp_holder_modulus(const EndomorphismMap& f, const TestFunction& phi, int n_pairs,
                                    int n_min, int n_max, std::uint64_t seed,
                                    const NumericConfig& cfg = default_config(), int threads = 1);

// Writes report.csv, verdicts.txt, summary.json and plots/*.dat under
// out_dir/<config_digest>/ and returns that directory.
std::string write_report(const ExperimentReport& report, const std::string& out_dir);

std::string report_csv(const ExperimentReport& report);
std::string verdicts_text(const ExperimentReport& report);
std::string summary_json(const ExperimentReport& report);

const char* verdict_status_name(VerdictStatus s);

}  // namespace pkdyn
