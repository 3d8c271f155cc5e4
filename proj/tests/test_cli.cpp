#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pkdyn/run_config.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "pkdyn_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  const fs::path out = scratch_dir() / "stdout.txt";
  const fs::path err = scratch_dir() / "stderr.txt";
  const std::string cmd =
      std::string(PKDYN_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch_dir() / name;
  std::ofstream f(p);
  f << content;
  return p;
}

}  // namespace

TEST_CASE("presets lists the known map families") {
  const auto r = run_cli("presets");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("power(d)") != std::string::npos);
  CHECK(r.out.find("quadratic_family") != std::string::npos);
}

TEST_CASE("fiber subcommand writes the depth-3 fiber") {
  const fs::path out = scratch_dir() / "fiber.csv";
  const auto r = run_cli("fiber --map 'power(2)' --target 1,0,1,0 --depth 3 --format csv --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("total_weight: 8") != std::string::npos);
  CHECK(r.out.find("distinct_atoms: 8") != std::string::npos);
  std::ifstream csv(out);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "atom_re,atom_im,chart,weight");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 8);
}

TEST_CASE("fiber subcommand writes and reloads the binary cache") {
  const fs::path out = scratch_dir() / "fiber.fibc";
  const auto r = run_cli("fiber --map 'quadratic_family(-1,0)' --target 3,0,1,0 --depth 4 --format bin --out " +
                         out.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(out, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "FIBC");
}

TEST_CASE("fiber depth over the cap exits 1") {
  const auto r = run_cli("fiber --map 'power(2)' --target 1,0,1,0 --depth 25 --format csv --out " +
                         (scratch_dir() / "too_deep.csv").string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("cap") != std::string::npos);
}

TEST_CASE("invalid target point exits 1") {
  const auto r = run_cli("fiber --map 'power(2)' --target 1,0 --depth 2 --format csv --out " +
                         (scratch_dir() / "bad.csv").string());
  CHECK(r.exit_code == 1);
}

TEST_CASE("green subcommand emits the documented CSV") {
  const fs::path points = write_file("points.txt", "2,0,1,0\n# comment\n0.5,0,1,0\n");
  const auto r = run_cli("green --map 'power(2)' --points " + points.string() + " --depth 30");
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("point_id,re0,im0,re1,im1,n,G_n,tail_bound", 0) == 0);
  std::stringstream ss(r.out);
  std::string line;
  std::getline(ss, line);  // header
  std::getline(ss, line);
  CHECK(line.find("0,2,0,1,0,30,0.6931471805") != std::string::npos);
}

TEST_CASE("green depth zero is rejected") {
  const fs::path points = write_file("one_point.txt", "2,0,1,0\n");
  const auto r = run_cli("green --map 'power(2)' --points " + points.string() + " --depth 0");
  CHECK(r.exit_code == 1);
}

TEST_CASE("validate accepts a well-formed config and prints its digest") {
  const fs::path config = write_file("good.json", R"json({
    "experiment": "exceptional",
    "map": "power(2)",
    "seed": 3,
    "params": {"n_max": 5}
  })json");
  const auto r = run_cli("validate --config " + config.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("config_digest:") != std::string::npos);
  CHECK(r.out.find("nondegenerate (resultant") != std::string::npos);
}

TEST_CASE("validate rejects unknown keys, naming the offender") {
  const fs::path config = write_file("bad_key.json", R"json({
    "experiment": "exceptional",
    "map": "power(2)",
    "misspelled": true
  })json");
  const auto r = run_cli("validate --config " + config.string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("misspelled") != std::string::npos);
}

TEST_CASE("validate rejects a degenerate map, citing nondegeneracy") {
  const fs::path config = write_file("degenerate.json", R"json({
    "experiment": "exceptional",
    "map": {"dim": 1, "degree": 2,
            "components": [[{"exps": [1, 1], "re": 1, "im": 0}],
                           [{"exps": [0, 2], "re": 1, "im": 0}]]}
  })json");
  const auto r = run_cli("validate --config " + config.string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("root") != std::string::npos);
}

TEST_CASE("config digest ignores key order and whitespace") {
  const std::string a = R"json({"experiment":"exceptional","map":"power(2)","seed":5})json";
  const std::string b = "{ \"seed\": 5,\n  \"map\": \"power(2)\",\n  \"experiment\": \"exceptional\" }";
  CHECK(pkdyn::parse_run_config(a).digest == pkdyn::parse_run_config(b).digest);
  const std::string c = R"json({"experiment":"exceptional","map":"power(2)","seed":6})json";
  CHECK(pkdyn::parse_run_config(a).digest != pkdyn::parse_run_config(c).digest);
}

TEST_CASE("seed and out overrides feed the effective config") {
  const std::string text = R"json({"experiment":"exceptional","map":"power(2)","seed":5})json";
  pkdyn::RunOverrides ov;
  ov.seed = 9;
  const auto cfg = pkdyn::parse_run_config(text, ov);
  CHECK(cfg.seed == 9);
  CHECK(cfg.digest != pkdyn::parse_run_config(text).digest);
  pkdyn::RunOverrides out_only;
  out_only.out = "elsewhere";
  // The output directory is not part of the run identity.
  CHECK(pkdyn::parse_run_config(text, out_only).digest == pkdyn::parse_run_config(text).digest);
}

TEST_CASE("run executes the exceptional experiment end to end") {
  const fs::path outdir = scratch_dir() / "run_out";
  const fs::path config = write_file("run_exceptional.json", R"json({
    "experiment": "exceptional",
    "map": "power(2)",
    "seed": 3,
    "params": {"n_max": 6, "ref_depth": 10}
  })json");
  const auto r = run_cli("run --config " + config.string() + " --out " + outdir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("OVERALL: PASS") != std::string::npos);
  // Files land under <out>/<digest>/.
  const auto cfgparsed = pkdyn::parse_run_config_file(config.string());
  CHECK(fs::exists(outdir / cfgparsed.digest / "report.csv"));
  CHECK(fs::exists(outdir / cfgparsed.digest / "verdicts.txt"));
  CHECK(fs::exists(outdir / cfgparsed.digest / "summary.json"));
}

TEST_CASE("run with bare defaults passes on the power preset") {
  const fs::path config = write_file("run_defaults.json", R"json({
    "experiment": "point_equidistribution",
    "map": "power(2)"
  })json");
  const fs::path outdir = scratch_dir() / "defaults_out";
  const auto r = run_cli("run --config " + config.string() + " --out " + outdir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("OVERALL: PASS") != std::string::npos);
  const auto digest = pkdyn::parse_run_config_file(config.string()).digest;
  CHECK(fs::exists(outdir / digest / "report.csv"));
}

TEST_CASE("run exit code 2 on a failing verdict") {
  // The hypersurface through the totally invariant point must flag and fail.
  const fs::path config = write_file("run_excluded.json", R"json({
    "experiment": "hypersurface",
    "map": "power(2)",
    "params": {"h": [{"exps": [1, 0], "re": 1, "im": 0}], "grid_points": 64, "n_max": 6}
  })json");
  const auto r = run_cli("run --config " + config.string() + " --out " + (scratch_dir() / "fail_out").string());
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("FAIL excluded_case") != std::string::npos);
}

TEST_CASE("run is byte-identical across thread counts") {
  const fs::path config = write_file("run_mixing.json", R"json({
    "experiment": "mixing",
    "map": "power(2)",
    "seed": 17,
    "params": {"sample_size": 1000, "n_max": 4, "burn_in": 30}
  })json");
  const fs::path out1 = scratch_dir() / "mix1";
  const fs::path out8 = scratch_dir() / "mix8";
  const auto r1 = run_cli("run --config " + config.string() + " --out " + out1.string() + " --threads 1");
  const auto r8 = run_cli("run --config " + config.string() + " --out " + out8.string() + " --threads 8");
  CHECK(r1.exit_code == 0);
  CHECK(r8.exit_code == 0);
  const auto digest = pkdyn::parse_run_config_file(config.string()).digest;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string rows1 = slurp(out1 / digest / "report.csv");
  const std::string rows8 = slurp(out8 / digest / "report.csv");
  CHECK(!rows1.empty());
  CHECK(rows1 == rows8);
}

TEST_CASE("missing config file exits 1") {
  const auto r = run_cli("run --config /nonexistent/config.json");
  CHECK(r.exit_code == 1);
}
