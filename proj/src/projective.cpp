#include "pkdyn/projective.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "pkdyn/errors.hpp"
#include "pkdyn/rng.hpp"

namespace pkdyn {

namespace {

bool finite(const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

double sup_norm(std::span<const cplx> z) {
  double m = 0.0;
  for (const auto& c : z) m = std::max(m, std::abs(c));
  return m;
}

double euclid_norm(std::span<const cplx> z) {
  double s = 0.0;
  for (const auto& c : z) s += std::norm(c);
  return std::sqrt(s);
}

}  // namespace

ProjectivePoint ProjectivePoint::normalize(std::span<const cplx> raw) {
  if (raw.empty()) throw AllZeroError("empty coordinate vector");
  int pivot = -1;
  double best = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!finite(raw[i])) throw AllZeroError("non-finite coordinate");
    const double m = std::abs(raw[i]);
    if (m > best) {
      best = m;
      pivot = static_cast<int>(i);
    }
  }
  if (pivot < 0 || best == 0.0) throw AllZeroError();
  std::vector<cplx> coords(raw.begin(), raw.end());
  const cplx scale = coords[pivot];
  for (auto& c : coords) c /= scale;
  coords[pivot] = cplx(1.0, 0.0);  // exact, not up to rounding
  for (const auto& c : coords) {
    if (!finite(c)) throw AllZeroError("normalization produced a non-finite coordinate");
  }
  return ProjectivePoint(std::move(coords), pivot);
}

ProjectivePoint ProjectivePoint::normalize(std::initializer_list<cplx> raw) {
  return normalize(std::span<const cplx>(raw.begin(), raw.size()));
}

cplx ProjectivePoint::affine() const {
  if (dim() != 1) throw DimMismatchError("affine chart is defined on P^1 only");
  if (pivot_ == 1) return coords_[0];
  // coords_[0] == 1; the affine value 1/z1 may be infinite.
  const cplx z1 = coords_[1];
  if (z1 == cplx(0.0, 0.0)) return cplx(std::numeric_limits<double>::infinity(), 0.0);
  return cplx(1.0, 0.0) / z1;
}

bool ProjectivePoint::is_infinity() const {
  return dim() == 1 && pivot_ == 0 && coords_[1] == cplx(0.0, 0.0);
}

std::string ProjectivePoint::str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (i) os << " : ";
    os << coords_[i].real();
    if (coords_[i].imag() != 0.0) os << (coords_[i].imag() > 0 ? "+" : "") << coords_[i].imag() << "i";
  }
  os << "]";
  return os.str();
}

double chordal_distance(std::span<const cplx> z, std::span<const cplx> w) {
  if (z.size() != w.size()) throw DimMismatchError();
  double wedge = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      wedge += std::norm(z[i] * w[j] - z[j] * w[i]);
    }
  }
  const double denom = euclid_norm(z) * euclid_norm(w);
  if (denom == 0.0) throw AllZeroError("chordal distance of a zero vector");
  return std::min(1.0, std::sqrt(wedge) / denom);
}

double chordal_distance(const ProjectivePoint& p, const ProjectivePoint& q) {
  if (p.dim() != q.dim()) throw DimMismatchError();
  return chordal_distance(std::span<const cplx>(p.coords()), std::span<const cplx>(q.coords()));
}

HomogeneousPolynomial::HomogeneousPolynomial(int n_vars, int degree,
                                             std::map<ExponentTuple, cplx> terms)
    : n_vars_(n_vars), degree_(degree), terms_(std::move(terms)) {
  if (n_vars_ < 2) throw ConfigError("homogeneous polynomial needs at least two variables");
  if (degree_ < 1) throw ConfigError("homogeneous polynomial degree must be >= 1");
  bool any_nonzero = false;
  for (const auto& [exps, coeff] : terms_) {
    if (static_cast<int>(exps.size()) != n_vars_)
      throw ConfigError("exponent tuple length does not match the variable count");
    int total = 0;
    for (int e : exps) {
      if (e < 0) throw ConfigError("negative exponent");
      total += e;
    }
    if (total != degree_) throw ConfigError("exponent tuple does not sum to the degree");
    if (!finite(coeff)) throw ConfigError("non-finite coefficient");
    if (coeff != cplx(0.0, 0.0)) any_nonzero = true;
  }
  if (!any_nonzero) throw ConfigError("homogeneous polynomial has no nonzero coefficient");
}

cplx HomogeneousPolynomial::evaluate(std::span<const cplx> z) const {
  if (static_cast<int>(z.size()) != n_vars_) throw DimMismatchError();
  cplx acc(0.0, 0.0);
  for (const auto& [exps, coeff] : terms_) {
    if (coeff == cplx(0.0, 0.0)) continue;
    cplx mono(1.0, 0.0);
    for (int i = 0; i < n_vars_; ++i) {
      for (int e = 0; e < exps[i]; ++e) mono *= z[i];
    }
    acc += coeff * mono;
  }
  return acc;
}

std::vector<cplx> HomogeneousPolynomial::binary_coefficients() const {
  if (n_vars_ != 2) throw DimMismatchError("binary coefficients need a two-variable form");
  std::vector<cplx> coeffs(degree_ + 1, cplx(0.0, 0.0));
  for (const auto& [exps, coeff] : terms_) coeffs[exps[0]] += coeff;
  return coeffs;
}

HomogeneousPolynomial HomogeneousPolynomial::from_binary_coefficients(std::span<const cplx> coeffs) {
  if (coeffs.size() < 2) throw ConfigError("binary form needs degree >= 1");
  const int d = static_cast<int>(coeffs.size()) - 1;
  std::map<ExponentTuple, cplx> terms;
  for (int j = 0; j <= d; ++j) {
    if (coeffs[j] != cplx(0.0, 0.0)) terms[{j, d - j}] = coeffs[j];
  }
  if (terms.empty()) terms[{d, 0}] = cplx(0.0, 0.0);  // let the ctor reject it
  return HomogeneousPolynomial(2, d, std::move(terms));
}

cplx sylvester_resultant(std::span<const cplx> a, std::span<const cplx> b) {
  const int da = static_cast<int>(a.size()) - 1;
  const int db = static_cast<int>(b.size()) - 1;
  const int n = da + db;
  Eigen::MatrixXcd syl = Eigen::MatrixXcd::Zero(n, n);
  // Rows of a-coefficients (descending powers), then rows of b-coefficients.
  for (int r = 0; r < db; ++r) {
    for (int j = 0; j <= da; ++j) syl(r, r + j) = a[da - j];
  }
  for (int r = 0; r < da; ++r) {
    for (int j = 0; j <= db; ++j) syl(db + r, r + j) = b[db - j];
  }
  return syl.determinant();
}

EndomorphismMap::EndomorphismMap(std::vector<HomogeneousPolynomial> components,
                                 const NumericConfig& cfg)
    : components_(std::move(components)) {
  if (components_.size() < 2) throw ConfigError("a map on P^k needs k+1 >= 2 components");
  const int n_vars = components_.front().n_vars();
  const int degree = components_.front().degree();
  if (n_vars != static_cast<int>(components_.size()))
    throw ConfigError("component count must equal the variable count");
  for (const auto& c : components_) {
    if (c.n_vars() != n_vars) throw ConfigError("components disagree on the variable count");
    if (c.degree() != degree) throw ConfigError("components disagree on the degree");
  }
  if (degree < 2) throw ConfigError("algebraic degree must be at least 2");
  certificate_ = check_nondegenerate(components_, cfg);
}

std::vector<cplx> EndomorphismMap::apply_raw(std::span<const cplx> z) const {
  std::vector<cplx> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(c.evaluate(z));
  return out;
}

MapImage evaluate_map(const EndomorphismMap& f, const ProjectivePoint& p, const NumericConfig& cfg) {
  if (p.dim() != f.dim()) throw DimMismatchError();
  const std::vector<cplx> w = f.apply_raw(p.coords());
  const double m = sup_norm(w);
  if (!(m > cfg.degenerate_image_tol)) {
    throw DegenerateImageError("F vanishes at " + p.str() + "; the nondegeneracy certificate failed here");
  }
  return MapImage{ProjectivePoint::normalize(w), std::log(m)};
}

NondegeneracyCertificate check_nondegenerate(const std::vector<HomogeneousPolynomial>& components,
                                             const NumericConfig& cfg) {
  const int k = static_cast<int>(components.size()) - 1;
  if (k == 1) {
    // Exact route: the resultant of the two binary forms, on coefficients
    // normalized to unit sup so the threshold is scale-free.
    auto a = components[0].binary_coefficients();
    auto b = components[1].binary_coefficients();
    const double sa = sup_norm(a), sb = sup_norm(b);
    for (auto& c : a) c /= sa;
    for (auto& c : b) c /= sb;
    const double witness = std::abs(sylvester_resultant(a, b));
    if (!(witness > cfg.nondegeneracy_tol)) {
      throw DegenerateMapError("resultant magnitude " + std::to_string(witness) +
                               " below tolerance: the components share a projective root");
    }
    return NondegeneracyCertificate{"resultant", witness, false};
  }
  // Heuristic route for k >= 2: min ||F|| over quasi-random unit-sphere
  // samples, recorded as such in the certificate.
  SplitRng rng(0x5EEDD1CEull);  // fixed stream; the check is part of the map definition
  const int n = static_cast<int>(components.size());
  double min_norm = std::numeric_limits<double>::infinity();
  std::vector<cplx> z(n);
  for (int s = 0; s < cfg.sphere_samples; ++s) {
    double nz = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = cplx(rng.gaussian(), rng.gaussian());
      nz += std::norm(z[i]);
    }
    nz = std::sqrt(nz);
    if (nz == 0.0) continue;
    for (auto& c : z) c /= nz;
    double fz = 0.0;
    for (const auto& comp : components) fz += std::norm(comp.evaluate(z));
    min_norm = std::min(min_norm, std::sqrt(fz));
    if (min_norm <= cfg.sphere_min_norm) break;
  }
  if (!(min_norm > cfg.sphere_min_norm)) {
    throw DegenerateMapError("a sphere sample has ||F|| = " + std::to_string(min_norm) +
                             " below threshold: F is (numerically) degenerate");
  }
  return NondegeneracyCertificate{"sphere_sampling", min_norm, true};
}

EndomorphismMap power_map(int degree, int dim) {
  if (degree < 2) throw ConfigError("power map needs degree >= 2");
  if (dim < 1) throw ConfigError("power map needs dim >= 1");
  std::vector<HomogeneousPolynomial> comps;
  for (int i = 0; i <= dim; ++i) {
    HomogeneousPolynomial::ExponentTuple exps(dim + 1, 0);
    exps[i] = degree;
    comps.emplace_back(dim + 1, degree, std::map<HomogeneousPolynomial::ExponentTuple, cplx>{{exps, cplx(1.0, 0.0)}});
  }
  return EndomorphismMap(std::move(comps));
}

EndomorphismMap quadratic_family(cplx c) {
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> f0{{{2, 0}, cplx(1.0, 0.0)}};
  if (c != cplx(0.0, 0.0)) f0[{0, 2}] = c;
  std::map<HomogeneousPolynomial::ExponentTuple, cplx> f1{{{0, 2}, cplx(1.0, 0.0)}};
  std::vector<HomogeneousPolynomial> comps;
  comps.emplace_back(2, 2, std::move(f0));
  comps.emplace_back(2, 2, std::move(f1));
  return EndomorphismMap(std::move(comps));
}

namespace {

using nlohmann::json;

EndomorphismMap map_from_json_value(const json& j, const NumericConfig& cfg) {
  if (!j.is_object()) throw ConfigError("map definition must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "dim" && key != "degree" && key != "components")
      throw ConfigError("unknown key in map definition: \"" + key + "\"");
  }
  if (!j.contains("dim") || !j.contains("degree") || !j.contains("components"))
    throw ConfigError("map definition needs keys dim, degree, components");
  const int k = j.at("dim").get<int>();
  const int d = j.at("degree").get<int>();
  if (k < 1) throw ConfigError("map dim must be >= 1");
  const auto& comps_json = j.at("components");
  if (!comps_json.is_array() || static_cast<int>(comps_json.size()) != k + 1)
    throw ConfigError("components must be an array of k+1 term lists");
  std::vector<HomogeneousPolynomial> comps;
  for (const auto& comp : comps_json) {
    if (!comp.is_array()) throw ConfigError("each component must be an array of terms");
    std::map<HomogeneousPolynomial::ExponentTuple, cplx> terms;
    for (const auto& term : comp) {
      for (const auto& [key, _] : term.items()) {
        if (key != "exps" && key != "re" && key != "im")
          throw ConfigError("unknown key in map term: \"" + key + "\"");
      }
      HomogeneousPolynomial::ExponentTuple exps = term.at("exps").get<std::vector<int>>();
      const double re = term.value("re", 0.0);
      const double im = term.value("im", 0.0);
      terms[exps] += cplx(re, im);
    }
    comps.emplace_back(k + 1, d, std::move(terms));
  }
  return EndomorphismMap(std::move(comps), cfg);
}

// Parses "name(arg1, arg2, ...)" into name + numeric args.
bool parse_preset(const std::string& text, std::string& name, std::vector<double>& args) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') return false;
  name = text.substr(0, open);
  const std::string inner = text.substr(open + 1, text.size() - open - 2);
  args.clear();
  std::stringstream ss(inner);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(piece, &used);
      while (used < piece.size() && std::isspace(static_cast<unsigned char>(piece[used]))) ++used;
      if (used != piece.size()) return false;
      args.push_back(v);
    } catch (const std::exception&) {
      return false;
    }
  }
  return !name.empty();
}

}  // namespace

EndomorphismMap map_from_json(const std::string& json_text, const NumericConfig& cfg) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("map JSON parse error: ") + e.what());
  }
  return map_from_json_value(j, cfg);
}

EndomorphismMap map_from_spec(const std::string& preset_or_path, const NumericConfig& cfg) {
  std::string name;
  std::vector<double> args;
  if (parse_preset(preset_or_path, name, args)) {
    if (name == "power") {
      if (args.size() == 1) return power_map(static_cast<int>(args[0]));
      if (args.size() == 2) return power_map(static_cast<int>(args[0]), static_cast<int>(args[1]));
      throw ConfigError("power preset takes (degree) or (degree, dim)");
    }
    if (name == "quadratic_family") {
      if (args.size() != 2) throw ConfigError("quadratic_family preset takes (c_re, c_im)");
      return quadratic_family(cplx(args[0], args[1]));
    }
    throw ConfigError("unknown preset \"" + name + "\"");
  }
  std::error_code ec;
  if (std::filesystem::exists(preset_or_path, ec)) {
    std::ifstream in(preset_or_path);
    if (!in) throw IoError("cannot open map file " + preset_or_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return map_from_json(buf.str(), cfg);
  }
  // Last resort: inline JSON text.
  if (!preset_or_path.empty() && preset_or_path.front() == '{') return map_from_json(preset_or_path, cfg);
  throw ConfigError("map spec \"" + preset_or_path + "\" is neither a preset, a file, nor inline JSON");
}

std::string map_to_json(const EndomorphismMap& f) {
  nlohmann::json j;
  j["dim"] = f.dim();
  j["degree"] = f.degree();
  auto comps = nlohmann::json::array();
  for (const auto& c : f.components()) {
    auto terms = nlohmann::json::array();
    for (const auto& [exps, coeff] : c.terms()) {
      terms.push_back({{"exps", exps}, {"re", coeff.real()}, {"im", coeff.imag()}});
    }
    comps.push_back(terms);
  }
  j["components"] = comps;
  return j.dump();
}

std::vector<std::string> preset_descriptions() {
  return {
      "power(d)           (z0^d, z1^d) on P^1",
      "power(d, k)        (z0^d, ..., zk^d) on P^k",
      "quadratic_family(c_re, c_im)   lift (z^2 + c w^2, w^2) of z^2 + c on P^1",
  };
}

}  // namespace pkdyn
