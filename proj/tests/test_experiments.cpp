#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pkdyn/errors.hpp"
#include "pkdyn/experiments.hpp"
#include "pkdyn/run_config.hpp"
#include "test_support.hpp"

using namespace pkdyn;

namespace {

ProjectivePoint affine_point(double re, double im = 0.0) {
  return ProjectivePoint::normalize({cplx(re, im), cplx(1, 0)});
}

const Verdict& find_verdict(const ExperimentReport& report, const std::string& prefix) {
  for (const auto& v : report.verdicts) {
    if (v.label.rfind(prefix, 0) == 0) return v;
  }
  REQUIRE_MESSAGE(false, "missing verdict ", prefix);
  static Verdict dummy{};
  return dummy;
}

double row_extra(const ReportRow& row, const std::string& name) {
  for (const auto& [key, value] : row.extras) {
    if (key == name) return value;
  }
  REQUIRE_MESSAGE(false, "missing extra column ", name);
  return 0.0;
}

}  // namespace

TEST_CASE("point equidistribution: trig moments vanish through the solver pipeline") {
  const auto f = power_map(2);
  const auto report = exp_point_equidistribution(f, affine_point(2), {trig_moment(1)}, 1, 8,
                                                 affine_point(2.5), 10, 1);
  CHECK(report.overall() == VerdictStatus::pass);
  for (const auto& row : report.rows) {
    if (row.n >= 4) CHECK(row.error <= 1e-10);
  }
  CHECK(find_verdict(report, "geometric_decay").status == VerdictStatus::pass);
}

TEST_CASE("point equidistribution: constants give exactly zero error") {
  const auto f = quadratic_family(cplx(-1, 0));
  const auto report = exp_point_equidistribution(f, affine_point(3), {constant_function(1.0)}, 1, 6,
                                                 affine_point(2.5), 8, 1);
  for (const auto& row : report.rows) CHECK(row.error == 0.0);
  CHECK(report.overall() == VerdictStatus::pass);
}

TEST_CASE("point equidistribution: degenerate self test is exactly zero at full depth") {
  const auto f = quadratic_family(cplx(-1, 0));
  const auto base = affine_point(3);
  const auto report = exp_point_equidistribution(f, base, {bump(affine_point(0), 0.9)}, 1, 8, base, 8, 1);
  // Same base and depth as the reference: the last error must be exactly 0.
  double last_error = -1.0;
  for (const auto& row : report.rows) {
    if (row.n == 8) last_error = row.error;
  }
  CHECK(last_error == 0.0);
}

TEST_CASE("point equidistribution rejects flagged bases") {
  const auto f = power_map(2);
  CHECK_THROWS_AS(exp_point_equidistribution(f, affine_point(0), {trig_moment(1)}, 1, 6,
                                             affine_point(2.5), 8, 1),
                  ExceptionalBaseError);
}

TEST_CASE("exceptional base keeps the error bounded away from zero") {
  const auto f = power_map(2);
  const auto report =
      exp_exceptional(f, affine_point(0), {bump(affine_point(0), 0.8)}, 1, 8, affine_point(2.5), 10, 1);
  CHECK(report.overall() == VerdictStatus::pass);
  const auto& sep = find_verdict(report, "separation");
  CHECK(sep.status == VerdictStatus::pass);
  // mu_n^a is the Dirac mass at 0 for every n, so the error is constant.
  double first = -1.0;
  for (const auto& row : report.rows) {
    if (first < 0) first = row.error;
    CHECK(row.error == doctest::Approx(first).epsilon(1e-12));
    CHECK(row.error > 0.5);
  }
  const auto& flag = find_verdict(report, "exceptional_flag");
  CHECK(flag.status == VerdictStatus::pass);
  CHECK(flag.measured == doctest::Approx(2.0));
}

TEST_CASE("exceptional experiment: constants do not separate and get no verdict") {
  const auto f = power_map(2);
  const auto report =
      exp_exceptional(f, affine_point(0), {constant_function(1.0)}, 1, 5, affine_point(2.5), 8, 1);
  for (const auto& v : report.verdicts) CHECK(v.label.rfind("separation", 0) != 0);
  for (const auto& row : report.rows) CHECK(row.error == 0.0);
}

TEST_CASE("the inverted power map alternates between the two exceptional Diracs") {
  // F = (w^2, z^2) lifts z -> z^{-2}; fibers of 0 alternate between infinity and 0.
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> f0{{{0, 2}, cplx(1, 0)}};
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> f1{{{2, 0}, cplx(1, 0)}};
  std::vector<HomogeneousPolynomial> comps;
  comps.emplace_back(2, 2, std::move(f0));
  comps.emplace_back(2, 2, std::move(f1));
  const EndomorphismMap f(std::move(comps));
  const auto phi = bump(affine_point(0), 0.8);
  const auto report = exp_exceptional(f, affine_point(0), {phi}, 1, 6, affine_point(2.5), 10, 1);
  // Pairings oscillate between phi(infinity) = 0 and phi(0) = 1.
  const double mu_phi = report.rows.front().error;  // n = 1 fiber is delta_infinity: |0 - <mu,phi>|
  for (const auto& row : report.rows) {
    if (row.n % 2 == 1) {
      CHECK(row.error == doctest::Approx(mu_phi).epsilon(1e-9));
    } else {
      CHECK(row.error == doctest::Approx(1.0 - mu_phi).epsilon(1e-6));
    }
  }
}

TEST_CASE("counting: sectors of the power map count exactly") {
  const auto f = power_map(2);
  const std::vector<Region> regions{SectorRegion{-M_PI / 4, M_PI / 4}, AllRegion{}};
  const auto report =
      exp_counting(f, affine_point(2), affine_point(3), regions, 4, 10, affine_point(2.5), 12, 1);
  CHECK(report.overall() == VerdictStatus::pass);
  for (const auto& row : report.rows) {
    if (row.phi_tag == "all") {
      CHECK(row_extra(row, "ratio") == 1.0);
      CHECK(row_extra(row, "count_a") == std::pow(2.0, row.n));
    } else {
      // Both fibers are rigid rotations of the same root set.
      CHECK(row_extra(row, "ratio") == 1.0);
      CHECK(row_extra(row, "normalized") == doctest::Approx(1.0).epsilon(0.05));
    }
  }
}

TEST_CASE("counting: empty region is inconclusive for the normalized verdict") {
  const auto f = power_map(2);
  const auto report = exp_counting(f, affine_point(2), affine_point(3), {EmptyRegion{}}, 2, 4,
                                   affine_point(2.5), 8, 1);
  for (const auto& row : report.rows) {
    CHECK(row_extra(row, "count_a") == 0.0);
    CHECK(row_extra(row, "ratio") == 1.0);
  }
  CHECK(find_verdict(report, "normalized_count").status == VerdictStatus::inconclusive);
}

TEST_CASE("mixing: trig moments decorrelate within the Monte Carlo band") {
  const auto f = power_map(2);
  const auto report =
      exp_mixing(f, trig_moment(1), trig_moment(1), 1, 8, 10000, 50, affine_point(2), 7);
  CHECK(report.overall() == VerdictStatus::pass);
  for (const auto& row : report.rows) {
    CHECK(row.error <= row_extra(row, "band3"));
  }
}

TEST_CASE("mixing: constants have exactly zero correlation") {
  const auto f = power_map(2);
  const auto report =
      exp_mixing(f, constant_function(1.0), trig_moment(2), 1, 4, 2000, 30, affine_point(2), 11);
  for (const auto& row : report.rows) CHECK(row.error == 0.0);
  CHECK(report.overall() == VerdictStatus::pass);
}

TEST_CASE("birkhoff averages converge from a sampled start") {
  const auto f = power_map(2);
  const auto report =
      exp_birkhoff(f, {trig_moment(1)}, 10000, std::nullopt, affine_point(2.5), 12, 5);
  CHECK(find_verdict(report, "generic_start").status == VerdictStatus::pass);
  CHECK(find_verdict(report, "birkhoff_decay").status == VerdictStatus::pass);
  CHECK(report.overall() == VerdictStatus::pass);
}

TEST_CASE("birkhoff flags a fixed-point start as non-generic") {
  const auto f = power_map(2);
  const auto report =
      exp_birkhoff(f, {trig_moment(1)}, 1000, affine_point(1), affine_point(2.5), 10, 5);
  CHECK(find_verdict(report, "generic_start").status == VerdictStatus::fail);
}

TEST_CASE("birkhoff: constants give zero error at every checkpoint") {
  const auto f = power_map(2);
  const auto report =
      exp_birkhoff(f, {constant_function(3.0)}, 1000, std::nullopt, affine_point(2.5), 10, 5);
  for (const auto& row : report.rows) CHECK(row.error == 0.0);
  CHECK(find_verdict(report, "birkhoff_decay").status == VerdictStatus::pass);
}

TEST_CASE("hypersurface potential decays for z - w under the power map") {
  const auto f = power_map(2);
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms{{{1, 0}, cplx(1, 0)}, {{0, 1}, cplx(-1, 0)}};
  const HomogeneousPolynomial h(2, 1, terms);
  const auto report = exp_hypersurface(f, h, 400, 1, 12, 3);
  CHECK(find_verdict(report, "excluded_case").status == VerdictStatus::pass);
  CHECK(find_verdict(report, "survivors").status == VerdictStatus::pass);
  const auto& decay = find_verdict(report, "median_decay");
  CHECK(decay.status == VerdictStatus::pass);
  CHECK(decay.measured == doctest::Approx(2.0).epsilon(0.15));  // medians shrink by about 1/2 per step
  CHECK(report.overall() == VerdictStatus::pass);
}

TEST_CASE("hypersurface through the invariant point is flagged, with no decay") {
  const auto f = power_map(2);
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms{{{1, 0}, cplx(1, 0)}};
  const HomogeneousPolynomial h(2, 1, terms);  // h = z, V = {0}
  const auto report = exp_hypersurface(f, h, 200, 1, 8, 3);
  CHECK(find_verdict(report, "excluded_case").status == VerdictStatus::fail);
  CHECK(find_verdict(report, "median_decay").status != VerdictStatus::pass);
  CHECK(report.overall() == VerdictStatus::fail);
}

TEST_CASE("hypersurface decay on the projective plane") {
  const auto f = power_map(2, 2);
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms{
      {{1, 0, 0}, cplx(1, 0)}, {{0, 1, 0}, cplx(1, 0)}, {{0, 0, 1}, cplx(1, 0)}};
  const HomogeneousPolynomial h(3, 1, terms);
  const auto report = exp_hypersurface(f, h, 400, 1, 8, 3);
  CHECK(find_verdict(report, "excluded_case").status == VerdictStatus::pass);
  const auto& decay = find_verdict(report, "median_decay");
  CHECK(decay.status == VerdictStatus::pass);
  CHECK(decay.measured >= 1.5);
}

TEST_CASE("exponential integral estimate is finite, stable, and convex in the scale") {
  const auto f = power_map(2);
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms{{{1, 0}, cplx(1, 0)}, {{0, 1}, cplx(-1, 0)}};
  const HomogeneousPolynomial h(2, 1, terms);
  const auto report = exp_exponential_estimate(f, h, 20000, 7);
  CHECK(report.verdicts.empty());  // report-only
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.error > 1.0);
    CHECK(std::isfinite(row.error));
    CHECK(row_extra(row, "rel_spread") < 0.1);
  }

  // Scaling the potential up by 10 (mass safety chosen so the rescale is
  // exactly tenfold) grows the estimate superlinearly: on the same sample,
  // mean(e^{10 u}) >= mean(e^{u})^{10}.
  NumericConfig big;
  big.dsh_mass_safety = (1.0 + big.dsh_mass_safety) / 10.0 - 1.0;
  const auto scaled = exp_exponential_estimate(f, h, 20000, 7, big);
  const double base = report.rows[0].error;
  const double ten = scaled.rows[0].error;
  CHECK(ten >= std::pow(base, 10.0) * 0.999);
  CHECK(ten > base);
}

TEST_CASE("exponential integral of the zero potential is exactly one") {
  const auto f = power_map(2);
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms{{{1, 0}, cplx(1, 0)}, {{0, 1}, cplx(-1, 0)}};
  const HomogeneousPolynomial h(2, 1, terms);
  NumericConfig flat;
  flat.dsh_mass_safety = 1e12;  // rescale -> 0, integrand -> e^0
  const auto report = exp_exponential_estimate(f, h, 500, 7, flat);
  for (const auto& row : report.rows) CHECK(row.error == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("holder modulus: depth zero of a smooth function is Lipschitz") {
  const auto f = power_map(2);
  const auto report = exp_holder_modulus(f, bump(affine_point(1), 0.6), 48, 0, 3, 13);
  CHECK(report.verdicts.empty());  // report-only
  const auto& row0 = report.rows.front();
  CHECK(row0.n == 0);
  CHECK(row_extra(row0, "holder_exponent") == doctest::Approx(1.0).epsilon(0.2));
  // Exponents trend downward as the pushforward roughens.
  const double last = row_extra(report.rows.back(), "holder_exponent");
  CHECK(last <= row_extra(row0, "holder_exponent") + 0.25);
}

TEST_CASE("reports are deterministic across thread counts") {
  const auto f = quadratic_family(cplx(-1, 0));
  const auto r1 = exp_mixing(f, trig_moment(1), trig_moment(2), 1, 5, 2000, 40, affine_point(3), 99,
                             default_config(), 1);
  const auto r8 = exp_mixing(f, trig_moment(1), trig_moment(2), 1, 5, 2000, 40, affine_point(3), 99,
                             default_config(), 8);
  CHECK(report_csv(r1) == report_csv(r8));

  const auto h1 = exp_point_equidistribution(f, affine_point(3), {bump(affine_point(0), 0.9)}, 1, 8,
                                             affine_point(2.5), 10, 1, default_config(), 1);
  const auto h4 = exp_point_equidistribution(f, affine_point(3), {bump(affine_point(0), 0.9)}, 1, 8,
                                             affine_point(2.5), 10, 1, default_config(), 4);
  CHECK(report_csv(h1) == report_csv(h4));
}

TEST_CASE("write_report emits the documented files") {
  const auto f = power_map(2);
  auto report = exp_exceptional(f, affine_point(0), {bump(affine_point(0), 0.8)}, 1, 4,
                                affine_point(2.5), 8, 1);
  report.config_digest = "cafef00d";
  const auto dir = std::filesystem::temp_directory_path() / "pkdyn_report_test";
  std::filesystem::remove_all(dir);
  const std::string where = write_report(report, dir.string());
  CHECK(std::filesystem::exists(std::filesystem::path(where) / "report.csv"));
  CHECK(std::filesystem::exists(std::filesystem::path(where) / "verdicts.txt"));
  CHECK(std::filesystem::exists(std::filesystem::path(where) / "summary.json"));
  std::ifstream summary(std::filesystem::path(where) / "summary.json");
  nlohmann::json j;
  summary >> j;
  CHECK(j["experiment_id"] == "exceptional");
  CHECK(j["config_digest"] == "cafef00d");
  CHECK(j["overall"] == "PASS");
  std::filesystem::remove_all(dir);
}

TEST_CASE("torus grids have the requested size and live on the unit torus") {
  const auto g1 = torus_grid(1, 400);
  CHECK(g1.size() == 400);
  for (const auto& p : g1) CHECK(std::abs(std::abs(p.affine()) - 1.0) < 1e-12);
  const auto g2 = torus_grid(2, 900);
  CHECK(g2.size() == 900);
}
