// pkdyn command-line frontend: reproducible runs of the dynamics experiments
// plus direct access to fibers and Green values.

#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pkdyn/errors.hpp"
#include "pkdyn/experiments.hpp"
#include "pkdyn/fibers.hpp"
#include "pkdyn/green.hpp"
#include "pkdyn/projective.hpp"
#include "pkdyn/run_config.hpp"

namespace {

using pkdyn::cplx;

pkdyn::ProjectivePoint parse_point_arg(const std::string& text) {
  std::vector<double> reals;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) reals.push_back(std::stod(piece));
  if (reals.size() < 4 || reals.size() % 2 != 0) {
    throw pkdyn::ConfigError("point must be re0,im0,re1,im1[,...]");
  }
  std::vector<cplx> coords;
  for (std::size_t i = 0; i < reals.size(); i += 2) coords.emplace_back(reals[i], reals[i + 1]);
  return pkdyn::ProjectivePoint::normalize(coords);
}

std::vector<std::vector<cplx>> parse_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pkdyn::IoError("cannot open points file " + path);
  std::vector<std::vector<cplx>> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> reals;
    std::stringstream ss(line);
    std::string piece;
    while (std::getline(ss, piece, ',')) reals.push_back(std::stod(piece));
    if (reals.size() < 4 || reals.size() % 2 != 0) {
      throw pkdyn::ConfigError("points file line \"" + line + "\" must be re0,im0,re1,im1[,...]");
    }
    std::vector<cplx> coords;
    for (std::size_t i = 0; i < reals.size(); i += 2) coords.emplace_back(reals[i], reals[i + 1]);
    points.push_back(std::move(coords));
  }
  return points;
}

int cmd_run(const std::string& config_path, const pkdyn::RunOverrides& overrides, int threads) {
  const pkdyn::RunConfig config = pkdyn::parse_run_config_file(config_path, overrides);
  pkdyn::ExperimentReport report = pkdyn::execute_run(config, threads);
  const std::string dir = pkdyn::write_report(report, config.out);
  std::cout << "experiment: " << report.experiment_id << "\n"
            << "config_digest: " << config.digest << "\n"
            << "report: " << dir << "\n"
            << pkdyn::verdicts_text(report);
  switch (report.overall()) {
    case pkdyn::VerdictStatus::pass:
      return 0;
    case pkdyn::VerdictStatus::fail:
      return 2;
    default:
      return 3;
  }
}

int cmd_fiber(const std::string& map_spec, const std::string& target, int depth, const std::string& format,
              const std::string& out_path, int threads) {
  const pkdyn::EndomorphismMap f = pkdyn::map_from_spec(map_spec);
  const pkdyn::ProjectivePoint a = parse_point_arg(target);
  const pkdyn::FiberCloud cloud = pkdyn::backward_orbit_exact(f, a, depth, pkdyn::default_config(), threads);
  if (format == "csv") {
    std::ofstream out(out_path);
    if (!out) throw pkdyn::IoError("cannot open " + out_path + " for writing");
    out << pkdyn::fiber_csv(cloud);
  } else if (format == "bin") {
    pkdyn::fiber_write_binary_file(cloud, out_path);
  } else {
    throw pkdyn::ConfigError("format must be csv or bin");
  }
  std::cout << "total_weight: " << cloud.total_weight() << "\n"
            << "distinct_atoms: " << cloud.distinct_atoms() << "\n"
            << "file: " << out_path << "\n";
  return 0;
}

int cmd_green(const std::string& map_spec, const std::string& points_path, int depth,
              const std::string& out_path) {
  if (depth < 1) throw pkdyn::ConfigError("green depth must be >= 1");
  const pkdyn::EndomorphismMap f = pkdyn::map_from_spec(map_spec);
  std::vector<pkdyn::GreenCsvRow> rows;
  int id = 0;
  for (const auto& coords : parse_points_file(points_path)) {
    if (static_cast<int>(coords.size()) != f.dim() + 1) {
      throw pkdyn::ConfigError("point " + std::to_string(id) + " has wrong dimension for the map");
    }
    rows.push_back(pkdyn::GreenCsvRow{id++, coords, pkdyn::green_value(f, coords, depth)});
  }
  const std::string csv = pkdyn::green_csv(rows);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path);
    if (!out) throw pkdyn::IoError("cannot open " + out_path + " for writing");
    out << csv;
  }
  return 0;
}

int cmd_validate(const std::string& config_path, const pkdyn::RunOverrides& overrides) {
  const pkdyn::RunConfig config = pkdyn::parse_run_config_file(config_path, overrides);
  const pkdyn::EndomorphismMap f = pkdyn::map_from_spec(config.map_spec, config.numeric);
  std::cout << "config: ok\n"
            << "experiment: " << config.experiment << "\n"
            << "config_digest: " << config.digest << "\n"
            << "map: dim " << f.dim() << ", degree " << f.degree() << ", nondegenerate ("
            << f.certificate().method << ", witness " << f.certificate().witness
            << (f.certificate().heuristic ? ", heuristic)" : ")") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for holomorphic dynamics on projective space"};
  app.require_subcommand(1);

  std::string config_path, map_spec, target, points_path, out_path, format = "csv";
  int depth = 8, threads = 1;
  std::uint64_t seed = 0;
  bool seed_set = false, deterministic_flag = false;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "worker thread cap");
  run->add_flag("--deterministic", deterministic_flag, "force deterministic mode");

  auto* fiber = app.add_subcommand("fiber", "write an exact backward-orbit fiber");
  fiber->add_option("--map", map_spec, "preset name, map file, or inline JSON")->required();
  fiber->add_option("--target", target, "target point re0,im0,re1,im1")->required();
  fiber->add_option("--depth", depth, "backward depth")->required();
  fiber->add_option("--format", format, "csv or bin");
  fiber->add_option("--out", out_path, "output file")->required();
  fiber->add_option("--threads", threads, "worker thread cap");

  auto* green = app.add_subcommand("green", "Green values for a file of points");
  green->add_option("--map", map_spec, "preset name, map file, or inline JSON")->required();
  green->add_option("--points", points_path, "points file, one re0,im0,re1,im1,... per line")->required();
  green->add_option("--depth", depth, "iteration depth")->required();
  green->add_option("--out", out_path, "output CSV (stdout when omitted)");

  auto* presets = app.add_subcommand("presets", "list the accepted map presets");

  auto* validate = app.add_subcommand("validate", "check a config file and its map, then exit");
  validate->add_option("--config", config_path, "config file path")->required();

  CLI11_PARSE(app, argc, argv);

  pkdyn::RunOverrides overrides;
  if (seed_set) overrides.seed = seed;
  if (!out_dir.empty()) overrides.out = out_dir;
  if (deterministic_flag) overrides.deterministic = true;

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, threads);
    if (fiber->parsed()) return cmd_fiber(map_spec, target, depth, format, out_path, threads);
    if (green->parsed()) return cmd_green(map_spec, points_path, depth, out_path);
    if (presets->parsed()) {
      for (const auto& line : pkdyn::preset_descriptions()) std::cout << line << "\n";
      return 0;
    }
    if (validate->parsed()) return cmd_validate(config_path, overrides);
  } catch (const pkdyn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
