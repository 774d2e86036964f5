#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace localstar::cli {

namespace {

const std::map<std::string, std::string>& default_entries() {
  static const std::map<std::string, std::string> d = {
      {"seed", "1"},
      {"output.dir", "out"},
      {"geometry.kind", "flat"},
      {"geometry.dim", "2"},
      {"base.point", "0, 0"},
      {"base.lo", "-0.6, -0.6"},
      {"base.hi", "0.6, 0.6"},
      {"grid.base", "3"},
      {"grid.fiber", "128"},
      {"grid.m", "96"},
      {"grid.v", "32"},
      {"fiber.dim", "2"},
      {"fiber.margin", "1.2"},
      {"bundle.metric", "1, 0; 0, 1"},
      {"bundle.sections", "1, 0; 0, 1"},
      {"bundle.radius", "1.1"},
      {"theta.matrix", "0, 1; -1, 0"},
      {"theta.scale", "0.1"},
      {"engine.torus_points", "128"},
      {"engine.half_width", "1.6"},
      {"engine.edge_band", "0.1"},
      {"engine.edge_tolerance", "1e-8"},
      {"tower.radius", "0.5"},
      {"tower.margin", "1.1"},
      {"tower.frame", "orthonormal"},
      {"tower.vanishing_point", "0.2, 0"},
      {"tower.vanishing_length", "0.3"},
      {"norms.basis", "fourier"},
      {"norms.q_samples", "3"},
      {"functions.fiber.f", "bump(0.05, 0, 0.06) * exp(3*i*x1)"},
      {"functions.fiber.g", "i * bump(-0.05, 0.08, 0.06)"},
      {"functions.tm.f", "bump(0.02, 0.01, 0.03) * exp(-(p1^2 + p2^2))"},
      {"functions.tm.g", "bump(-0.01, 0.02, 0.03) * exp(2*i*v2) * cos(p1)"},
      {"functions.mxm.f", "bump(-0.02, -0.01, 0.02, 0.01, 0.04)"},
      {"functions.mxm.g", "bump(0.01, -0.02, -0.01, 0.02, 0.04) * exp(-i*a1)"},
      {"functions.m.f", "bump(0.02, 0.01, 0.04) + bump(0.55, 0.55, 0.04)"},
      {"functions.m.g", "bump(-0.01, 0.02, 0.04) * exp(3*i*q2) + bump(0.55, 0.5, 0.04)"},
      {"tolerance.roundtrip", "1e-10"},
      {"tolerance.equivariance", "1e-10"},
      {"tolerance.flow", "1e-6"},
      {"tolerance.oracle", "1e-5"},
      {"tolerance.inclusion", "1e-9"},
      {"tolerance.delta", "1e-6"},
      {"tolerance.associativity", "1e-8"},
      {"tolerance.involution", "1e-10"},
      {"tolerance.phi_roundtrip", "1e-8"},
      {"tolerance.tower_flat", "1e-6"},
      {"tolerance.tower_hyperbolic", "1e-5"},
      {"tolerance.semiclassical_order", "1.9"},
      {"tolerance.norm_sup", "0.02"},
      {"tolerance.estimator", "1e-3"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

std::vector<std::string> numbered(const std::string& stem, std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t k = 1; k <= n; ++k) v.push_back(fmt::format("{}{}", stem, k));
  return v;
}

RunConfig::RunConfig() : entries_(default_entries()) {}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", path, lineno));
    }
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path, lineno, e.what()));
    }
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!default_entries().count(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  entries_[key] = value;
}

const std::string& RunConfig::str(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(fmt::format("missing config key '{}'", key));
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const std::string& s = str(key);
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v = 0.0;
  if (!(is >> v) || !(is >> std::ws).eof()) {
    throw ConfigError(fmt::format("config key '{}' expects a number, got '{}'", key, s));
  }
  return v;
}

std::size_t RunConfig::count(const std::string& key) const {
  const double v = number(key);
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw ConfigError(fmt::format("config key '{}' expects a non-negative integer", key));
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> RunConfig::list(const std::string& key) const {
  std::vector<double> out;
  std::istringstream is(str(key));
  is.imbue(std::locale::classic());
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream one(item);
    one.imbue(std::locale::classic());
    double v = 0.0;
    if (!(one >> v)) throw ConfigError(fmt::format("config key '{}': bad number '{}'", key, item));
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<Expression>> RunConfig::expressions(
    const std::string& key, const std::vector<std::string>& vars) const {
  try {
    return parse_matrix(str(key), vars);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

Mat RunConfig::matrix(const std::string& key) const {
  const auto rows = expressions(key, {});
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j](nullptr).real();
    }
  }
  return m;
}

std::uint64_t RunConfig::seed() const { return static_cast<std::uint64_t>(count("seed")); }

std::map<std::string, double> RunConfig::tolerances() const {
  std::map<std::string, double> t;
  for (const auto& [k, v] : entries_) {
    if (k.rfind("tolerance.", 0) == 0) t[k.substr(10)] = number(k);
  }
  return t;
}

void RunConfig::validate() const {
  for (const auto& [k, v] : tolerances()) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("tolerance '{}' must be positive", k));
  }
  if (!power_of_two(count("engine.torus_points"))) {
    throw ConfigError("engine.torus_points must be a power of two");
  }
  if (!power_of_two(count("grid.v"))) throw ConfigError("grid.v must be a power of two");
  if (count("grid.fiber") < 8) throw ConfigError("grid.fiber must be at least 8");
  const std::string kind = str("geometry.kind");
  if (kind != "flat" && kind != "hyperbolic") {
    throw ConfigError(fmt::format("geometry.kind must be flat or hyperbolic, got '{}'", kind));
  }
  const std::string frame = str("tower.frame");
  if (frame != "orthonormal" && frame != "coordinate" && frame != "vanishing") {
    throw ConfigError(fmt::format("unknown tower.frame '{}'", frame));
  }
  const std::string basis = str("norms.basis");
  if (basis != "fourier" && basis != "hermite") {
    throw ConfigError(fmt::format("unknown norms.basis '{}'", basis));
  }
  const std::size_t m = count("geometry.dim");
  if (m == 0) throw ConfigError("geometry.dim must be positive");
  if (list("base.point").size() != m) throw ConfigError("base.point must have geometry.dim entries");
  const auto theta = expressions("theta.matrix", numbered("p", m));
  const std::vector<double> p = list("base.point");
  const std::size_t d = theta.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (theta[i].size() != d) throw ConfigError("theta.matrix must be square");
    for (std::size_t j = 0; j < d; ++j) {
      const auto a = theta[i][j](p.data()), b = theta[j][i](p.data());
      if (a.imag() != 0.0 || b.imag() != 0.0 || a.real() != -b.real()) {
        throw ConfigError(fmt::format(
            "theta.matrix must be real and skew-symmetric (entry ({},{}) = {} but ({},{}) = {}); "
            "an admissible structure requires a skew coefficient matrix",
            i + 1, j + 1, a.real(), j + 1, i + 1, b.real()));
      }
    }
  }
  if (!(number("theta.scale") >= 0.0)) throw ConfigError("theta.scale must be non-negative");
}

std::map<std::string, std::string> embedded_entries(const RunConfig& cfg) {
  auto out = cfg.entries();
  out.erase("output.dir");
  return out;
}

}  // namespace localstar::cli
