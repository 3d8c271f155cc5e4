#include "pkdyn/green.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <unordered_map>

#include "pkdyn/errors.hpp"
#include "pkdyn/rng.hpp"

namespace pkdyn {

namespace {

double sup_norm(std::span<const cplx> z) {
  double m = 0.0;
  for (const auto& c : z) m = std::max(m, std::abs(c));
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

OrbitRecord orbit(const EndomorphismMap& f, const ProjectivePoint& p, int n, const NumericConfig& cfg) {
  if (n < 0) throw ConfigError("orbit length must be >= 0");
  OrbitRecord rec;
  rec.points.reserve(n + 1);
  rec.log_scales.reserve(n);
  rec.points.push_back(p);
  for (int j = 0; j < n; ++j) {
    MapImage step = evaluate_map(f, rec.points.back(), cfg);
    rec.points.push_back(std::move(step.image));
    rec.log_scales.push_back(step.log_scale);
  }
  return rec;
}

double estimate_map_constant(const EndomorphismMap& f, const NumericConfig& cfg) {
  // The constant is intrinsic to the map, so cache it by value (the
  // serialized coefficients round-trip exactly).
  const std::string key = map_to_json(f) + "#" + std::to_string(cfg.sphere_samples) + "#" +
                          std::to_string(cfg.map_constant_safety);
  static std::mutex mu;
  static std::unordered_map<std::string, double> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  SplitRng rng(0xC0457A47ull);
  const int n = f.dim() + 1;
  double worst = 0.0;
  std::vector<cplx> z(n);
  for (int s = 0; s < cfg.sphere_samples; ++s) {
    for (auto& c : z) c = cplx(rng.gaussian(), rng.gaussian());
    ProjectivePoint p = ProjectivePoint::normalize(z);  // sup-norm 1 representative
    const double m = sup_norm(f.apply_raw(p.coords()));
    if (m > 0.0) worst = std::max(worst, std::abs(std::log(m)));
  }
  const double inflated = worst * cfg.map_constant_safety;
  std::lock_guard<std::mutex> lock(mu);
  cache[key] = inflated;
  return inflated;
}

GreenEstimate green_value(const EndomorphismMap& f, std::span<const cplx> raw, int n,
                          const NumericConfig& cfg) {
  if (n < 1) throw ConfigError("green_value needs depth >= 1");
  const double m0 = sup_norm(raw);
  if (m0 == 0.0) throw AllZeroError();
  ProjectivePoint p = ProjectivePoint::normalize(raw);
  const int d = f.degree();
  double value = std::log(m0);
  double weight = 1.0;
  for (int j = 1; j <= n; ++j) {
    weight /= d;
    MapImage step = evaluate_map(f, p, cfg);
    value += weight * step.log_scale;
    p = std::move(step.image);
  }
  const double mc = estimate_map_constant(f, cfg);
  const double tail = mc * std::pow(static_cast<double>(d), -n) / (d - 1);
  return GreenEstimate{value, n, tail, mc};
}

GreenEstimate green_value(const EndomorphismMap& f, const ProjectivePoint& p, int n,
                          const NumericConfig& cfg) {
  return green_value(f, std::span<const cplx>(p.coords()), n, cfg);
}

double green_exact_monomial(std::span<const cplx> coords) {
  double m = sup_norm(coords);
  if (m == 0.0) throw AllZeroError();
  return std::log(m);
}

int green_depth_for_tail(const EndomorphismMap& f, double target, int min_depth, const NumericConfig& cfg) {
  const double mc = estimate_map_constant(f, cfg);
  const int d = f.degree();
  int depth = min_depth;
  double tail = mc * std::pow(static_cast<double>(d), -depth) / (d - 1);
  while (tail > target && depth < 80) {
    ++depth;
    tail /= d;
  }
  return depth;
}

std::string green_csv(const std::vector<GreenCsvRow>& rows) {
  std::string out = "point_id";
  const int width = rows.empty() ? 2 : static_cast<int>(rows.front().coords.size());
  for (int i = 0; i < width; ++i) {
    out += ",re" + std::to_string(i) + ",im" + std::to_string(i);
  }
  out += ",n,G_n,tail_bound\n";
  for (const auto& row : rows) {
    out += std::to_string(row.point_id);
    for (const auto& c : row.coords) {
      out += "," + format_double(c.real()) + "," + format_double(c.imag());
    }
    out += "," + std::to_string(row.estimate.depth);
    out += "," + format_double(row.estimate.value);
    out += "," + format_double(row.estimate.tail_bound);
    out += "\n";
  }
  return out;
}

}  // namespace pkdyn
