#include "pkdyn/run_config.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "pkdyn/errors.hpp"

namespace pkdyn {

namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

ProjectivePoint parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() < 2) {
    throw ConfigError(where + " must be an array of [re, im] coordinate pairs");
  }
  std::vector<cplx> coords;
  for (const auto& entry : j) {
    if (!entry.is_array() || entry.size() != 2) {
      throw ConfigError(where + " coordinates must be [re, im] pairs");
    }
    coords.emplace_back(entry[0].get<double>(), entry[1].get<double>());
  }
  return ProjectivePoint::normalize(coords);
}

TestFunction parse_phi(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("family")) {
    throw ConfigError(where + " must be an object with a \"family\" key");
  }
  const std::string family = j.at("family").get<std::string>();
  if (family == "trig_moment") {
    require_keys(j, {"family", "m"}, where);
    return trig_moment(j.at("m").get<int>());
  }
  if (family == "bump") {
    require_keys(j, {"family", "center", "radius"}, where);
    return bump(parse_point(j.at("center"), where + ".center"), j.at("radius").get<double>());
  }
  if (family == "holder_kernel") {
    require_keys(j, {"family", "center", "alpha"}, where);
    return holder_kernel(parse_point(j.at("center"), where + ".center"), j.at("alpha").get<double>());
  }
  if (family == "constant") {
    require_keys(j, {"family", "value"}, where);
    return constant_function(j.at("value").get<double>());
  }
  throw ConfigError("unknown test-function family \"" + family + "\" in " + where);
}

Region parse_region(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError(where + " must be an object with a \"type\" key");
  const std::string type = j.at("type").get<std::string>();
  if (type == "sector") {
    require_keys(j, {"type", "theta0", "theta1"}, where);
    return SectorRegion{j.at("theta0").get<double>(), j.at("theta1").get<double>()};
  }
  if (type == "disc") {
    require_keys(j, {"type", "center", "radius"}, where);
    const auto& c = j.at("center");
    if (!c.is_array() || c.size() != 2) throw ConfigError(where + ".center must be [re, im]");
    return DiscRegion{cplx(c[0].get<double>(), c[1].get<double>()), j.at("radius").get<double>()};
  }
  if (type == "all") {
    require_keys(j, {"type"}, where);
    return AllRegion{};
  }
  if (type == "empty") {
    require_keys(j, {"type"}, where);
    return EmptyRegion{};
  }
  throw ConfigError("unknown region type \"" + type + "\" in " + where);
}

HomogeneousPolynomial parse_hypersurface(const json& j, int n_vars, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nonempty array of terms");
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms;
  int degree = -1;
  for (const auto& term : j) {
    require_keys(term, {"exps", "re", "im"}, where);
    auto exps = term.at("exps").get<std::vector<int>>();
    if (static_cast<int>(exps.size()) != n_vars) {
      throw ConfigError(where + " exponent tuples must have length " + std::to_string(n_vars));
    }
    int total = 0;
    for (int e : exps) total += e;
    if (degree < 0) degree = total;
    if (total != degree) throw ConfigError(where + " terms do not share one degree");
    terms[exps] += cplx(term.value("re", 0.0), term.value("im", 0.0));
  }
  return HomogeneousPolynomial(n_vars, degree, std::move(terms));
}

void apply_tolerances(const json& j, NumericConfig& cfg) {
  require_keys(j,
               {"residual", "clustering", "nondegeneracy", "atom_cap", "error_floor", "rho_threshold",
                "r2_threshold", "scan_lambda", "scan_depth", "counting_tol", "alpha_slack", "green_tail",
                "pole_drop", "grid_clearance", "survivor_fraction", "boundary_shell_eps",
                "boundary_shell_frac", "dsh_mass_safety", "aberth_min_degree", "map_constant_safety"},
               "tolerances");
  if (j.contains("residual")) cfg.residual_tol = j.at("residual").get<double>();
  if (j.contains("clustering")) cfg.clustering_tol = j.at("clustering").get<double>();
  if (j.contains("nondegeneracy")) cfg.nondegeneracy_tol = j.at("nondegeneracy").get<double>();
  if (j.contains("atom_cap")) cfg.atom_cap = j.at("atom_cap").get<std::int64_t>();
  if (j.contains("error_floor")) cfg.error_floor = j.at("error_floor").get<double>();
  if (j.contains("rho_threshold")) cfg.rho_threshold = j.at("rho_threshold").get<double>();
  if (j.contains("r2_threshold")) cfg.r2_threshold = j.at("r2_threshold").get<double>();
  if (j.contains("scan_lambda")) cfg.scan_lambda = j.at("scan_lambda").get<double>();
  if (j.contains("scan_depth")) cfg.scan_depth = j.at("scan_depth").get<int>();
  if (j.contains("counting_tol")) cfg.counting_tol = j.at("counting_tol").get<double>();
  if (j.contains("alpha_slack")) cfg.alpha_order_slack = j.at("alpha_slack").get<double>();
  if (j.contains("green_tail")) cfg.green_tail_target = j.at("green_tail").get<double>();
  if (j.contains("pole_drop")) cfg.pole_drop_tol = j.at("pole_drop").get<double>();
  if (j.contains("grid_clearance")) cfg.grid_clearance = j.at("grid_clearance").get<double>();
  if (j.contains("survivor_fraction")) cfg.survivor_fraction = j.at("survivor_fraction").get<double>();
  if (j.contains("boundary_shell_eps")) cfg.boundary_shell_eps = j.at("boundary_shell_eps").get<double>();
  if (j.contains("boundary_shell_frac")) cfg.boundary_shell_frac = j.at("boundary_shell_frac").get<double>();
  if (j.contains("dsh_mass_safety")) cfg.dsh_mass_safety = j.at("dsh_mass_safety").get<double>();
  if (j.contains("aberth_min_degree")) cfg.aberth_min_degree = j.at("aberth_min_degree").get<int>();
  if (j.contains("map_constant_safety")) cfg.map_constant_safety = j.at("map_constant_safety").get<double>();
}

// Per-experiment parameter key sets, validated strictly at parse time.
void validate_params(const std::string& experiment, const json& params) {
  const std::string where = "params (" + experiment + ")";
  if (experiment == "point_equidistribution") {
    require_keys(params, {"base", "ref_base", "ref_depth", "n_min", "n_max", "phis"}, where);
  } else if (experiment == "exceptional") {
    require_keys(params, {"base", "ref_base", "ref_depth", "n_min", "n_max", "phis"}, where);
  } else if (experiment == "counting") {
    require_keys(params, {"base_a", "base_b", "ref_base", "ref_depth", "n_min", "n_max", "regions"}, where);
  } else if (experiment == "mixing") {
    require_keys(params, {"phi", "psi", "n_min", "n_max", "sample_size", "burn_in", "base"}, where);
  } else if (experiment == "birkhoff") {
    require_keys(params, {"phis", "n_total", "start", "ref_base", "ref_depth"}, where);
  } else if (experiment == "hypersurface") {
    require_keys(params, {"h", "grid_points", "n_min", "n_max"}, where);
  } else if (experiment == "exponential_estimate") {
    require_keys(params, {"h", "sample_size"}, where);
  } else if (experiment == "holder_modulus") {
    require_keys(params, {"phi", "n_pairs", "n_min", "n_max"}, where);
  } else {
    throw ConfigError("unknown experiment \"" + experiment + "\"");
  }
}

json default_point(double a0re, double a0im, double a1re, double a1im) {
  return json::array({json::array({a0re, a0im}), json::array({a1re, a1im})});
}

}  // namespace

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, text.data(), text.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

RunConfig parse_run_config(const std::string& json_text, const RunOverrides& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  require_keys(j, {"experiment", "map", "seed", "deterministic", "out", "tolerances", "params"}, "config");
  if (!j.contains("experiment")) throw ConfigError("config needs key \"experiment\"");
  if (!j.contains("map")) throw ConfigError("config needs key \"map\"");

  RunConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  cfg.deterministic = j.value("deterministic", true);
  if (overrides.deterministic) cfg.deterministic = *overrides.deterministic;
  cfg.seed = j.value("seed", std::uint64_t{1});
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (!cfg.deterministic) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  cfg.out = j.value("out", std::string("out"));
  if (overrides.out) cfg.out = *overrides.out;

  if (j.contains("tolerances")) apply_tolerances(j.at("tolerances"), cfg.numeric);

  const json& map_j = j.at("map");
  if (map_j.is_string()) {
    cfg.map_spec = map_j.get<std::string>();
  } else if (map_j.is_object()) {
    cfg.map_spec = map_j.dump();
  } else {
    throw ConfigError("config key \"map\" must be a preset string, a file path, or an inline object");
  }

  json params = j.value("params", json::object());
  validate_params(cfg.experiment, params);
  cfg.params_json = params.dump();

  // Canonical text: the effective config, key-sorted and whitespace-free,
  // with the output location stripped (it does not change the run identity).
  json effective = j;
  effective["seed"] = cfg.seed;
  effective["deterministic"] = cfg.deterministic;
  effective.erase("out");
  cfg.canonical_text = effective.dump();
  cfg.digest = sha256_hex(cfg.canonical_text);
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path, const RunOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), overrides);
}

namespace {

std::vector<TestFunction> parse_phi_list(const json& params, const char* key, std::vector<TestFunction> defaults) {
  if (!params.contains(key)) return defaults;
  std::vector<TestFunction> out;
  int i = 0;
  for (const auto& spec : params.at(key)) {
    out.push_back(parse_phi(spec, std::string(key) + "[" + std::to_string(i++) + "]"));
  }
  if (out.empty()) throw ConfigError(std::string(key) + " must not be empty");
  return out;
}

ProjectivePoint point_or(const json& params, const char* key, const json& fallback) {
  return parse_point(params.contains(key) ? params.at(key) : fallback, key);
}

json default_hypersurface(int n_vars) {
  // z0 - z1 on P^1; the all-ones linear form in higher dimension.
  json terms = json::array();
  if (n_vars == 2) {
    terms.push_back({{"exps", json::array({1, 0})}, {"re", 1.0}, {"im", 0.0}});
    terms.push_back({{"exps", json::array({0, 1})}, {"re", -1.0}, {"im", 0.0}});
    return terms;
  }
  for (int i = 0; i < n_vars; ++i) {
    json exps = json::array();
    for (int k = 0; k < n_vars; ++k) exps.push_back(k == i ? 1 : 0);
    terms.push_back({{"exps", exps}, {"re", 1.0}, {"im", 0.0}});
  }
  return terms;
}

}  // namespace

ExperimentReport execute_run(const RunConfig& config, int threads) {
  const EndomorphismMap f = map_from_spec(config.map_spec, config.numeric);
  const json params = json::parse(config.params_json);
  const NumericConfig& nc = config.numeric;
  ExperimentReport report;

  if (config.experiment == "point_equidistribution") {
    const auto base = point_or(params, "base", default_point(2, 0, 1, 0));
    const auto ref_base = point_or(params, "ref_base", default_point(5, 0, 2, 0));
    const int ref_depth = params.value("ref_depth", 14);
    const int n_min = params.value("n_min", 1);
    const int n_max = params.value("n_max", 12);
    std::vector<TestFunction> defaults;
    defaults.push_back(trig_moment(1));
    defaults.push_back(bump(ProjectivePoint::normalize({cplx(0, 0), cplx(1, 0)}), 0.9));
    const ProjectivePoint kernel_center = ProjectivePoint::normalize({cplx(1.6180339887498949, 0), cplx(1, 0)});
    defaults.push_back(holder_kernel(kernel_center, 0.5));
    defaults.push_back(holder_kernel(kernel_center, 1.0));
    defaults.push_back(holder_kernel(kernel_center, 2.0));
    const auto phis = parse_phi_list(params, "phis", std::move(defaults));
    report = exp_point_equidistribution(f, base, phis, n_min, n_max, ref_base, ref_depth, config.seed, nc,
                                        threads);
  } else if (config.experiment == "exceptional") {
    const auto base = point_or(params, "base", default_point(0, 0, 1, 0));
    const auto ref_base = point_or(params, "ref_base", default_point(5, 0, 2, 0));
    const int ref_depth = params.value("ref_depth", 12);
    const int n_min = params.value("n_min", 1);
    const int n_max = params.value("n_max", 8);
    std::vector<TestFunction> defaults;
    defaults.push_back(bump(base, 0.8));
    const auto phis = parse_phi_list(params, "phis", std::move(defaults));
    report = exp_exceptional(f, base, phis, n_min, n_max, ref_base, ref_depth, config.seed, nc, threads);
  } else if (config.experiment == "counting") {
    const auto base_a = point_or(params, "base_a", default_point(2, 0, 1, 0));
    const auto base_b = point_or(params, "base_b", default_point(3, 0, 1, 0));
    const auto ref_base = point_or(params, "ref_base", default_point(5, 0, 2, 0));
    const int ref_depth = params.value("ref_depth", 14);
    const int n_min = params.value("n_min", 4);
    const int n_max = params.value("n_max", 12);
    std::vector<Region> regions;
    if (params.contains("regions")) {
      int i = 0;
      for (const auto& r : params.at("regions")) {
        regions.push_back(parse_region(r, "regions[" + std::to_string(i++) + "]"));
      }
    } else {
      regions.push_back(SectorRegion{-M_PI / 4, M_PI / 4});
    }
    report = exp_counting(f, base_a, base_b, regions, n_min, n_max, ref_base, ref_depth, config.seed, nc,
                          threads);
  } else if (config.experiment == "mixing") {
    const auto phi = params.contains("phi") ? parse_phi(params.at("phi"), "phi") : trig_moment(1);
    const auto psi = params.contains("psi") ? parse_phi(params.at("psi"), "psi") : trig_moment(1);
    const int n_min = params.value("n_min", 1);
    const int n_max = params.value("n_max", 8);
    const std::int64_t sample_size = params.value("sample_size", std::int64_t{10000});
    const int burn_in = params.value("burn_in", 50);
    const auto base = point_or(params, "base", default_point(2, 0, 1, 0));
    report = exp_mixing(f, phi, psi, n_min, n_max, sample_size, burn_in, base, config.seed, nc, threads);
  } else if (config.experiment == "birkhoff") {
    std::vector<TestFunction> defaults;
    defaults.push_back(trig_moment(1));
    const auto phis = parse_phi_list(params, "phis", std::move(defaults));
    const std::int64_t n_total = params.value("n_total", std::int64_t{10000});
    std::optional<ProjectivePoint> start;
    if (params.contains("start")) start = parse_point(params.at("start"), "start");
    const auto ref_base = point_or(params, "ref_base", default_point(5, 0, 2, 0));
    const int ref_depth = params.value("ref_depth", 14);
    report = exp_birkhoff(f, phis, n_total, start, ref_base, ref_depth, config.seed, nc, threads);
  } else if (config.experiment == "hypersurface") {
    const json h_json = params.contains("h") ? params.at("h") : default_hypersurface(f.dim() + 1);
    const HomogeneousPolynomial h = parse_hypersurface(h_json, f.dim() + 1, "h");
    const int grid_points = params.value("grid_points", f.dim() == 1 ? 400 : 900);
    const int n_min = params.value("n_min", 1);
    const int n_max = params.value("n_max", 12);
    report = exp_hypersurface(f, h, grid_points, n_min, n_max, config.seed, nc, threads);
  } else if (config.experiment == "exponential_estimate") {
    const json h_json = params.contains("h") ? params.at("h") : default_hypersurface(f.dim() + 1);
    const HomogeneousPolynomial h = parse_hypersurface(h_json, f.dim() + 1, "h");
    const std::int64_t sample_size = params.value("sample_size", std::int64_t{20000});
    report = exp_exponential_estimate(f, h, sample_size, config.seed, nc, threads);
  } else if (config.experiment == "holder_modulus") {
    const auto phi = params.contains("phi")
                         ? parse_phi(params.at("phi"), "phi")
                         : bump(ProjectivePoint::normalize({cplx(1, 0), cplx(1, 0)}), 0.6);
    const int n_pairs = params.value("n_pairs", 48);
    const int n_min = params.value("n_min", 0);
    const int n_max = params.value("n_max", 4);
    report = exp_holder_modulus(f, phi, n_pairs, n_min, n_max, config.seed, nc, threads);
  } else {
    throw ConfigError("unknown experiment \"" + config.experiment + "\"");
  }

  report.config_digest = config.digest;
  return report;
}

}  // namespace pkdyn
