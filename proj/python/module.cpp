#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pkdyn/errors.hpp"
#include "pkdyn/experiments.hpp"
#include "pkdyn/fibers.hpp"
#include "pkdyn/green.hpp"
#include "pkdyn/measures.hpp"
#include "pkdyn/polyroots.hpp"
#include "pkdyn/projective.hpp"
#include "pkdyn/run_config.hpp"

namespace py = pybind11;
using namespace pkdyn;

namespace {

ProjectivePoint point_from_list(const std::vector<cplx>& coords) {
  return ProjectivePoint::normalize(coords);
}

py::dict green_to_dict(const GreenEstimate& g) {
  py::dict d;
  d["value"] = g.value;
  d["depth"] = g.depth;
  d["tail_bound"] = g.tail_bound;
  d["map_constant"] = g.map_constant;
  return d;
}

py::dict report_to_dict(const ExperimentReport& report) {
  py::dict d;
  d["experiment_id"] = report.experiment_id;
  d["config_digest"] = report.config_digest;
  d["seed"] = report.seed;
  d["overall"] = verdict_status_name(report.overall());
  d["self_gap"] = report.self_gap;
  py::list verdicts;
  for (const auto& v : report.verdicts) {
    py::dict vd;
    vd["label"] = v.label;
    vd["status"] = verdict_status_name(v.status);
    vd["measured"] = v.measured;
    vd["threshold"] = v.threshold;
    verdicts.append(vd);
  }
  d["verdicts"] = verdicts;
  py::list rows;
  for (const auto& r : report.rows) {
    py::dict rd;
    rd["n"] = r.n;
    rd["phi_tag"] = r.phi_tag;
    rd["alpha"] = r.alpha;
    rd["error"] = r.error;
    rd["fitted_rho"] = r.fitted_rho;
    rd["r_squared"] = r.r_squared;
    for (const auto& [name, value] : r.extras) rd[name.c_str()] = value;
    rows.append(rd);
  }
  d["rows"] = rows;
  d["csv"] = report_csv(report);
  return d;
}

}  // namespace

PYBIND11_MODULE(_pkdyn, m) {
  m.doc() = "dynamics of holomorphic endomorphisms of projective space: "
            "fibers, Green functions, equilibrium measures, experiments";

  py::register_exception<Error>(m, "PkdynError");

  py::class_<ProjectivePoint>(m, "Point")
      .def(py::init(&point_from_list), py::arg("coords"))
      .def_property_readonly("coords", [](const ProjectivePoint& p) { return p.coords(); })
      .def_property_readonly("dim", &ProjectivePoint::dim)
      .def_property_readonly("pivot", &ProjectivePoint::pivot)
      .def("affine", &ProjectivePoint::affine)
      .def("is_infinity", &ProjectivePoint::is_infinity)
      .def("__repr__", &ProjectivePoint::str);

  m.def("normalize", &point_from_list, py::arg("coords"));
  m.def("distance",
        [](const ProjectivePoint& p, const ProjectivePoint& q) { return chordal_distance(p, q); },
        py::arg("p"), py::arg("q"));

  py::class_<EndomorphismMap>(m, "Map")
      .def(py::init([](const std::string& spec) { return map_from_spec(spec); }), py::arg("spec"))
      .def_property_readonly("dim", &EndomorphismMap::dim)
      .def_property_readonly("degree", &EndomorphismMap::degree)
      .def_property_readonly("certificate",
                             [](const EndomorphismMap& f) {
                               py::dict d;
                               d["method"] = f.certificate().method;
                               d["witness"] = f.certificate().witness;
                               d["heuristic"] = f.certificate().heuristic;
                               return d;
                             })
      .def("to_json", &map_to_json)
      .def("__call__", [](const EndomorphismMap& f, const ProjectivePoint& p) {
        const MapImage img = evaluate_map(f, p);
        return py::make_tuple(img.image, img.log_scale);
      });

  m.def("presets", &preset_descriptions);

  m.def("orbit",
        [](const EndomorphismMap& f, const ProjectivePoint& p, int n) {
          const OrbitRecord rec = orbit(f, p, n);
          return py::make_tuple(rec.points, rec.log_scales);
        },
        py::arg("f"), py::arg("p"), py::arg("n"));

  m.def("green",
        [](const EndomorphismMap& f, const std::vector<cplx>& coords, int depth) {
          return green_to_dict(green_value(f, std::span<const cplx>(coords), depth));
        },
        py::arg("f"), py::arg("coords"), py::arg("depth"));
  m.def("green_exact_monomial",
        [](const std::vector<cplx>& coords) { return green_exact_monomial(std::span<const cplx>(coords)); },
        py::arg("coords"));

  m.def("preimages",
        [](const EndomorphismMap& f, const ProjectivePoint& a) {
          const PreimageSet pre = preimages_p1(f, a);
          py::list out;
          for (std::size_t i = 0; i < pre.roots.size(); ++i) {
            py::dict d;
            d["point"] = pre.roots[i].point;
            d["multiplicity"] = pre.roots[i].multiplicity;
            d["residual"] = pre.residuals[i];
            out.append(d);
          }
          return out;
        },
        py::arg("f"), py::arg("a"));

  py::class_<FiberCloud>(m, "Fiber")
      .def_property_readonly("depth", [](const FiberCloud& c) { return c.depth; })
      .def_property_readonly("base", [](const FiberCloud& c) { return c.base; })
      .def_property_readonly("total_weight", &FiberCloud::total_weight)
      .def("distinct_atoms", [](const FiberCloud& c) { return c.distinct_atoms(); })
      .def("atoms",
           [](const FiberCloud& c) {
             py::list out;
             for (const auto& a : c.atoms) out.append(py::make_tuple(a.point, a.weight));
             return out;
           })
      .def("csv", &fiber_csv);

  m.def("fiber",
        [](const EndomorphismMap& f, const ProjectivePoint& a, int depth, const std::string& mode,
           std::int64_t count, std::uint64_t seed, int threads) {
          if (mode == "exact") return backward_orbit_exact(f, a, depth, default_config(), threads);
          if (mode == "sampled") return backward_orbit_sampled(f, a, depth, count, seed, default_config(), threads);
          throw ConfigError("mode must be exact or sampled");
        },
        py::arg("f"), py::arg("a"), py::arg("depth"), py::arg("mode") = "exact", py::arg("count") = 1000,
        py::arg("seed") = 1, py::arg("threads") = 1);
  m.def("write_fiber", &fiber_write_binary_file, py::arg("fiber"), py::arg("path"));
  m.def("read_fiber", &fiber_read_binary_file, py::arg("path"));

  m.def("lambda_apply",
        [](const EndomorphismMap& f, const std::function<double(const ProjectivePoint&)>& phi,
           const ProjectivePoint& a, int n) { return lambda_apply(f, phi, a, n); },
        py::arg("f"), py::arg("phi"), py::arg("a"), py::arg("n"));

  m.def("multiplicity",
        [](const EndomorphismMap& f, const ProjectivePoint& x, int n) {
          const MultiplicityReport rep = multiplicity_kappa(f, x, n);
          py::dict d;
          d["kappa_along_orbit"] = rep.kappa_along_orbit;
          d["kappa_n"] = rep.kappa_n;
          d["kappa_minus_n"] = rep.kappa_minus_n;
          d["depth"] = rep.depth;
          return d;
        },
        py::arg("f"), py::arg("x"), py::arg("n"));

  m.def("exceptional_scan",
        [](const EndomorphismMap& f, double lam, int depth, const std::vector<ProjectivePoint>& candidates) {
          py::list out;
          for (const auto& s : exceptional_scan(f, lam, depth, candidates)) {
            out.append(py::make_tuple(s.point, s.flagged, s.rate));
          }
          return out;
        },
        py::arg("f"), py::arg("lam"), py::arg("depth"), py::arg("candidates"));

  m.def("fit_rate",
        [](const std::vector<int>& ns, const std::vector<double>& errors) {
          const RateFit fit = fit_rate(ns, errors);
          py::dict d;
          d["fitted_rho"] = fit.fitted_rho;
          d["r_squared"] = fit.r_squared;
          return d;
        },
        py::arg("ns"), py::arg("errors"));

  m.def("config_digest",
        [](const std::string& config_text) { return parse_run_config(config_text).digest; },
        py::arg("config_text"));

  m.def("run_experiment",
        [](const std::string& config_text, int threads, bool write) {
          const RunConfig config = parse_run_config(config_text);
          const ExperimentReport report = execute_run(config, threads);
          py::dict d = report_to_dict(report);
          if (write) d["report_dir"] = write_report(report, config.out);
          return d;
        },
        py::arg("config_text"), py::arg("threads") = 1, py::arg("write") = false);
}
