// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit code 0 iff everything passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pkdyn/errors.hpp"
#include "pkdyn/experiments.hpp"
#include "pkdyn/fibers.hpp"
#include "pkdyn/green.hpp"
#include "pkdyn/measures.hpp"
#include "pkdyn/projective.hpp"
#include "pkdyn/rng.hpp"
#include "pkdyn/run_config.hpp"

using namespace pkdyn;

namespace {

int failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {
    start_ = std::chrono::steady_clock::now();
  }

  void check(bool ok, const std::string& detail) {
    if (!ok) {
      ok_ = false;
      if (!detail.empty()) details_.push_back(detail);
    }
  }

  void note(const std::string& detail) { details_.push_back(detail); }

  void finish(double budget_seconds) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (elapsed >= budget_seconds) {
      ok_ = false;
      details_.push_back("runtime " + std::to_string(elapsed) + "s over budget");
    }
    std::printf("%s criterion %d: %s (%.2fs)", ok_ ? "PASS" : "FAIL", number_, title_.c_str(), elapsed);
    for (const auto& d : details_) std::printf(" [%s]", d.c_str());
    std::printf("\n");
    std::fflush(stdout);
    if (!ok_) ++failures;
  }

 private:
  int number_;
  std::string title_;
  bool ok_ = true;
  std::vector<std::string> details_;
  std::chrono::steady_clock::time_point start_;
};

ProjectivePoint affine_point(double re, double im = 0.0) {
  return ProjectivePoint::normalize({cplx(re, im), cplx(1, 0)});
}

EndomorphismMap random_map(SplitRng& rng, int degree) {
  for (;;) {
    std::vector<HomogeneousPolynomial> comps;
    for (int c = 0; c < 2; ++c) {
      std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms;
      for (int j = 0; j <= degree; ++j) terms[{j, degree - j}] = cplx(rng.gaussian(), rng.gaussian());
      comps.emplace_back(2, degree, std::move(terms));
    }
    try {
      return EndomorphismMap(std::move(comps));
    } catch (const DegenerateMapError&) {
    }
  }
}

ProjectivePoint random_point(SplitRng& rng) {
  return ProjectivePoint::normalize({cplx(rng.gaussian(), rng.gaussian()), cplx(rng.gaussian(), rng.gaussian())});
}

const Verdict* find_verdict(const ExperimentReport& report, const std::string& prefix) {
  for (const auto& v : report.verdicts) {
    if (v.label.rfind(prefix, 0) == 0) return &v;
  }
  return nullptr;
}

void criterion_1_bezout() {
  Criterion c(1, "Bezout mass over random maps");
  SplitRng rng(0xACCE5501ull);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const EndomorphismMap f = random_map(rng, d);
    for (int t = 0; t < 20; ++t) {
      const PreimageSet pre = preimages_p1(f, random_point(rng));
      int total = 0;
      for (const auto& r : pre.roots) total += r.multiplicity;
      c.check(total == d, "multiplicity sum " + std::to_string(total) + " != " + std::to_string(d));
      for (double res : pre.residuals) {
        c.check(res <= 1e-8, "residual " + std::to_string(res));
      }
    }
  }
  c.finish(10.0);
}

void criterion_2_green_oracle() {
  Criterion c(2, "Green oracle for monomial maps");
  SplitRng rng(0xACCE5502ull);
  for (int d : {2, 3}) {
    const EndomorphismMap f = power_map(d);
    for (int i = 0; i < 100; ++i) {
      std::vector<cplx> z{cplx(rng.gaussian(), rng.gaussian()), cplx(rng.gaussian(), rng.gaussian())};
      const double exact = green_exact_monomial(z);
      const GreenEstimate g40 = green_value(f, z, 40);
      c.check(std::abs(g40.value - exact) <= 1e-10,
              "depth-40 value off by " + std::to_string(std::abs(g40.value - exact)));
      for (int depth = 5; depth <= 40; depth += 5) {
        const GreenEstimate g = green_value(f, z, depth);
        c.check(g.tail_bound >= std::abs(g.value - exact), "tail bound below the true residual");
      }
    }
  }
  c.finish(5.0);
}

void criterion_3_haar_moments() {
  Criterion c(3, "Haar equidistribution of power-map fibers");
  const EndomorphismMap f = power_map(2);
  const ProjectivePoint base = affine_point(2);
  std::vector<FiberAtom> atoms{FiberAtom{base, 1}};
  for (int n = 1; n <= 12; ++n) {
    atoms = expand_fiber_level(f, atoms);
    if (n < 4) continue;
    FiberCloud cloud{base, n, atoms, FiberMode::exact, 0, 0};
    const EmpiricalMeasure mu = EmpiricalMeasure::from_fiber(cloud);
    for (int m = 1; m <= 8; ++m) {
      const double moment = std::abs(pair(mu, trig_moment(m)));
      c.check(moment <= 1e-9,
              "moment m=" + std::to_string(m) + " at n=" + std::to_string(n) + " is " + std::to_string(moment));
    }
  }
  c.finish(30.0);
}

void criteria_4_5_rate_and_alpha() {
  Criterion c4(4, "exponential equidistribution rate for z^2 - 1");
  const EndomorphismMap f = quadratic_family(cplx(-1, 0));
  const ProjectivePoint kernel_center = affine_point(1.6180339887498949);
  std::vector<TestFunction> phis;
  phis.push_back(bump(affine_point(0), 0.9));
  phis.push_back(holder_kernel(kernel_center, 0.5));
  phis.push_back(holder_kernel(kernel_center, 1.0));
  phis.push_back(holder_kernel(kernel_center, 2.0));
  const ExperimentReport report =
      exp_point_equidistribution(f, affine_point(3), phis, 1, 18, affine_point(2.5), 20, 42);

  const Verdict* bump_v = find_verdict(report, "geometric_decay(bump");
  c4.check(bump_v != nullptr, "missing bump verdict");
  if (bump_v != nullptr) {
    c4.check(bump_v->status == VerdictStatus::pass,
             "bump decay " + std::string(verdict_status_name(bump_v->status)) + " measured rho " +
                 std::to_string(bump_v->measured));
    c4.note("rho=" + std::to_string(bump_v->measured));
  }
  double bump_r2 = 0.0, bump_gap = 0.0, min_err = 1e9;
  for (const auto& row : report.rows) {
    if (row.phi_tag.rfind("bump", 0) == 0) {
      bump_r2 = row.r_squared;
      for (const auto& [k, v] : row.extras) {
        if (k == "ref_gap") bump_gap = v;
      }
      if (row.error > 1e-14) min_err = std::min(min_err, row.error);
    }
  }
  c4.check(bump_r2 >= 0.9, "R^2 " + std::to_string(bump_r2));
  c4.check(bump_gap < min_err, "self gap " + std::to_string(bump_gap) + " not below min error " +
                                   std::to_string(min_err));
  c4.finish(120.0);

  Criterion c5(5, "alpha-scaling of the Hoelder kernel rates");
  const Verdict* alpha_v = find_verdict(report, "alpha_scaling");
  c5.check(alpha_v != nullptr, "missing alpha verdict");
  if (alpha_v != nullptr) {
    c5.check(alpha_v->status == VerdictStatus::pass,
             "log-rate margin " + std::to_string(alpha_v->measured));
    std::ostringstream rates;
    for (const auto& row : report.rows) {
      if (row.n == 1 && row.phi_tag.rfind("holder_kernel", 0) == 0) {
        rates << " rho(a=" << row.alpha << ")=" << row.fitted_rho;
      }
    }
    c5.note(rates.str());
  }
  c5.finish(1.0);  // shares criterion 4's run
}

void criterion_6_exceptional() {
  Criterion c(6, "exceptional base breaks equidistribution");
  const EndomorphismMap f = power_map(2);
  const ExperimentReport report =
      exp_exceptional(f, affine_point(0), {bump(affine_point(0), 0.8)}, 1, 8, affine_point(2.5), 12, 1);
  double e1 = -1.0, emin = 1e300, emax = 0.0;
  for (const auto& row : report.rows) {
    if (row.n == 1) e1 = row.error;
    emin = std::min(emin, row.error);
    emax = std::max(emax, row.error);
  }
  c.check(e1 > 0.0, "first error vanishes");
  c.check(emin >= 0.5 * e1, "error dips below half of e_1");
  c.check(emax - emin <= 1e-9 * std::max(1.0, emax), "error is not constant across n");
  const Verdict* flag = find_verdict(report, "exceptional_flag");
  c.check(flag != nullptr && flag->status == VerdictStatus::pass, "scan did not flag the base");
  if (flag != nullptr) {
    c.check(std::abs(flag->measured - 2.0) < 1e-9, "rate " + std::to_string(flag->measured) + " != 2");
  }
  c.finish(5.0);
}

void criterion_7_counting() {
  Criterion c(7, "fiber counting in a quarter sector");
  const EndomorphismMap f = power_map(2);
  const std::vector<Region> regions{SectorRegion{-M_PI / 4, M_PI / 4}};
  const ExperimentReport report =
      exp_counting(f, affine_point(2), affine_point(3), regions, 4, 12, affine_point(2.5), 14, 1);
  for (const auto& row : report.rows) {
    if (row.n != 12) continue;
    double ratio = 0.0, normalized = 0.0, mu_ref = 0.0;
    for (const auto& [k, v] : row.extras) {
      if (k == "ratio") ratio = v;
      if (k == "normalized") normalized = v;
      if (k == "mu_ref") mu_ref = v;
    }
    c.check(ratio == 1.0, "count ratio " + std::to_string(ratio) + " not exactly 1");
    c.check(std::abs(normalized - 1.0) <= 0.05, "normalized count " + std::to_string(normalized));
    c.check(std::abs(mu_ref - 0.25) <= 0.05 * 0.25, "reference sector mass " + std::to_string(mu_ref));
    c.note("ratio=" + std::to_string(ratio) + " normalized=" + std::to_string(normalized));
  }
  c.finish(20.0);
}

void criterion_8_mixing() {
  Criterion c(8, "mixing correlations sit inside the Monte Carlo band");
  const EndomorphismMap f = power_map(2);
  const ExperimentReport report =
      exp_mixing(f, trig_moment(1), trig_moment(1), 1, 8, 10000, 50, affine_point(2), 7);
  for (const auto& row : report.rows) {
    double band = 0.0;
    for (const auto& [k, v] : row.extras) {
      if (k == "band3") band = v;
    }
    c.check(row.error <= band, "correlation " + std::to_string(row.error) + " outside 3 sigma " +
                                   std::to_string(band) + " at n=" + std::to_string(row.n));
  }
  c.finish(30.0);
}

void criterion_9_hypersurface() {
  Criterion c(9, "hypersurface potential decay and its excluded case");
  const EndomorphismMap f = power_map(2);
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> diff_terms{{{1, 0}, cplx(1, 0)}, {{0, 1}, cplx(-1, 0)}};
  const HomogeneousPolynomial h_generic(2, 1, diff_terms);
  const ExperimentReport good = exp_hypersurface(f, h_generic, 400, 1, 12, 3);
  const Verdict* decay = find_verdict(good, "median_decay");
  c.check(decay != nullptr && decay->status == VerdictStatus::pass, "median decay verdict not passed");
  if (decay != nullptr) c.note("rho=" + std::to_string(decay->measured));
  double r2 = 0.0;
  for (const auto& row : good.rows) r2 = row.r_squared;
  c.check(r2 >= 0.9, "R^2 " + std::to_string(r2));
  const Verdict* excl = find_verdict(good, "excluded_case");
  c.check(excl != nullptr && excl->status == VerdictStatus::pass, "generic hypersurface wrongly flagged");

  std::map<HomogeneousPolynomial::ExponentTuple, cplx> z_terms{{{1, 0}, cplx(1, 0)}};
  const HomogeneousPolynomial h_invariant(2, 1, z_terms);
  const ExperimentReport control = exp_hypersurface(f, h_invariant, 400, 1, 12, 3);
  const Verdict* control_excl = find_verdict(control, "excluded_case");
  c.check(control_excl != nullptr && control_excl->status == VerdictStatus::fail,
          "invariant hypersurface not flagged");
  const Verdict* control_decay = find_verdict(control, "median_decay");
  c.check(control_decay != nullptr && control_decay->status != VerdictStatus::pass,
          "control shows decay where none is possible");
  c.finish(30.0);
}

void criterion_10_determinism() {
  Criterion c(10, "byte-identical reports across thread counts");
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pkdyn_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path config = dir / "config.json";
  {
    std::ofstream f(config);
    f << R"json({"experiment":"mixing","map":"power(2)","seed":17,)json"
      << R"json("params":{"sample_size":4000,"n_max":6,"burn_in":40}})json";
  }
  auto run = [&](int threads, const fs::path& out) {
    const std::string cmd = std::string(PKDYN_CLI_PATH) + " run --config " + config.string() + " --out " +
                            out.string() + " --threads " + std::to_string(threads) + " >" +
                            (out.string() + ".log") + " 2>&1";
    return std::system(cmd.c_str());
  };
  const int s1 = run(1, dir / "t1");
  const int s8 = run(8, dir / "t8");
  c.check(WIFEXITED(s1) && WEXITSTATUS(s1) == 0, "threads=1 run failed");
  c.check(WIFEXITED(s8) && WEXITSTATUS(s8) == 0, "threads=8 run failed");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::string rows1, rows8;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "t1")) {
    if (entry.path().filename() == "report.csv") rows1 = slurp(entry.path());
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir / "t8")) {
    if (entry.path().filename() == "report.csv") rows8 = slurp(entry.path());
  }
  c.check(!rows1.empty(), "no report rows written");
  c.check(rows1 == rows8, "reports differ between thread counts");
  fs::remove_all(dir);
  c.finish(60.0);
}

}  // namespace

int main() {
  std::printf("pkdyn acceptance suite\n");
  criterion_1_bezout();
  criterion_2_green_oracle();
  criterion_3_haar_moments();
  criteria_4_5_rate_and_alpha();
  criterion_6_exceptional();
  criterion_7_counting();
  criterion_8_mixing();
  criterion_9_hypersurface();
  criterion_10_determinism();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
