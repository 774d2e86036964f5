#include "setup.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace localstar::cli {

namespace {

MatrixField expression_field(const RunConfig& cfg, const std::string& key, std::size_t m) {
  const auto rows = cfg.expressions(key, numbered("p", m));
  return [rows](const Vec& p) {
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        const auto v = rows[i][j](p.data());
        if (v.imag() != 0.0) throw DomainError("structure entries must be real");
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.real();
      }
    }
    return out;
  };
}

}  // namespace

Vec base_point(const RunConfig& cfg) {
  const auto p = cfg.list("base.point");
  return Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
}

std::vector<Vec> base_samples(const RunConfig& cfg) {
  const std::size_t m = cfg.count("geometry.dim");
  const auto lo = cfg.list("base.lo"), hi = cfg.list("base.hi");
  if (lo.size() != m || hi.size() != m) throw ConfigError("base.lo/base.hi need geometry.dim entries");
  const std::size_t k = std::max<std::size_t>(cfg.count("grid.base"), 1);
  std::size_t total = 1;
  for (std::size_t a = 0; a < m; ++a) total *= k;
  std::vector<Vec> out;
  for (std::size_t t = 0; t < total; ++t) {
    Vec p(static_cast<Eigen::Index>(m));
    std::size_t flat = t;
    for (std::size_t a = m; a-- > 0;) {
      const std::size_t j = flat % k;
      flat /= k;
      p[static_cast<Eigen::Index>(a)] =
          k == 1 ? 0.5 * (lo[a] + hi[a]) : lo[a] + (hi[a] - lo[a]) * static_cast<double>(j) / static_cast<double>(k - 1);
    }
    out.push_back(p);
  }
  out.push_back(base_point(cfg));
  return out;
}

AdmissibleStructure build_structure(const RunConfig& cfg) {
  const std::size_t m = cfg.count("geometry.dim");
  const std::size_t n = cfg.count("fiber.dim");
  BundleSpec bundle;
  bundle.base_dim = m;
  bundle.fiber_dim = n;
  bundle.metric = expression_field(cfg, "bundle.metric", m);
  bundle.neighbourhood_radius = cfg.number("bundle.radius");
  DualBasisSpec basis;
  basis.sections = expression_field(cfg, "bundle.sections", m);
  const MatrixField gamma = expression_field(cfg, "theta.matrix", m);
  const Vec p = base_point(cfg);
  const Mat e = basis.sections(p), h = bundle.metric(p), g = gamma(p);
  if (static_cast<std::size_t>(h.rows()) != n || static_cast<std::size_t>(h.cols()) != n) {
    throw ConfigError("bundle.metric must be fiber.dim x fiber.dim");
  }
  if (static_cast<std::size_t>(e.rows()) != n) throw ConfigError("bundle.sections needs fiber.dim rows");
  if (g.rows() != e.cols()) throw ConfigError("theta.matrix must be d x d for d sections");
  try {
    return build_theta(gamma, basis, bundle, base_samples(cfg), false);
  } catch (const InvariantError& e) {
    throw ConfigError(fmt::format("construction check '{}' failed: {}", e.invariant(), e.what()));
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("invalid structure: {}", e.what()));
  }
}

AdmissibleAction fiber_action(const RunConfig& cfg, double hbar) {
  return AdmissibleAction::from_structure(build_structure(cfg), base_point(cfg), hbar);
}

Grid fiber_grid(const RunConfig& cfg, const AdmissibleAction& action) {
  const Vec half = action.fiber().ball_half_widths() * cfg.number("fiber.margin");
  const std::size_t n = action.fiber_dim();
  std::vector<double> lo(n), hi(n);
  for (std::size_t a = 0; a < n; ++a) {
    hi[a] = half[static_cast<Eigen::Index>(a)];
    lo[a] = -hi[a];
  }
  return Grid(lo, hi, std::vector<std::size_t>(n, cfg.count("grid.fiber")));
}

EngineSettings engine_settings(const RunConfig& cfg) {
  EngineSettings s;
  s.torus_points = cfg.count("engine.torus_points");
  s.torus_half_width = cfg.number("engine.half_width");
  s.edge_band = cfg.number("engine.edge_band");
  s.edge_tolerance = cfg.number("engine.edge_tolerance");
  return s;
}

BaseGeometry base_geometry(const RunConfig& cfg) {
  const std::size_t m = cfg.count("geometry.dim");
  if (cfg.str("geometry.kind") == "hyperbolic") {
    if (m != 2) throw ConfigError("the hyperbolic plane needs geometry.dim = 2");
    return BaseGeometry::hyperbolic_disk();
  }
  return BaseGeometry::flat(m);
}

TowerSettings tower_settings(const RunConfig& cfg) {
  TowerSettings t;
  t.hbar = cfg.number("theta.scale");
  t.theta = cfg.matrix("theta.matrix");
  t.fiber_radius = cfg.number("tower.radius");
  t.neighbourhood_margin = cfg.number("tower.margin");
  const std::string frame = cfg.str("tower.frame");
  t.frame = frame == "coordinate"  ? FrameKind::Coordinate
            : frame == "vanishing" ? FrameKind::Vanishing
                                   : FrameKind::Orthonormal;
  const auto vp = cfg.list("tower.vanishing_point");
  t.vanishing_point = Eigen::Map<const Vec>(vp.data(), static_cast<Eigen::Index>(vp.size()));
  t.vanishing_length = cfg.number("tower.vanishing_length");
  t.fiber_points = cfg.count("grid.fiber");
  t.engine = engine_settings(cfg);
  return t;
}

Expression config_expression(const RunConfig& cfg, const std::string& key,
                             const std::vector<std::string>& vars) {
  try {
    return Expression(cfg.str(key), vars);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

GriddedFunction fiber_function(const Grid& grid, const Expression& e) {
  return GriddedFunction::from_closed_form(grid, [e](const double* x) { return e(x); });
}

MxMFunction mxm_function(const RunConfig& cfg, const std::string& key) {
  const std::size_t m = cfg.count("geometry.dim");
  std::vector<std::string> vars = numbered("a", m);
  for (const auto& b : numbered("b", m)) vars.push_back(b);
  const Expression e = config_expression(cfg, key, vars);
  return [e, m](const Vec& a, const Vec& b) {
    std::vector<double> x(2 * m);
    std::copy(a.data(), a.data() + m, x.begin());
    std::copy(b.data(), b.data() + m, x.begin() + static_cast<std::ptrdiff_t>(m));
    return e(x.data());
  };
}

TMFunction tm_function(const RunConfig& cfg, const std::string& key) {
  const std::size_t m = cfg.count("geometry.dim");
  std::vector<std::string> vars = numbered("v", m);
  for (const auto& p : numbered("p", m)) vars.push_back(p);
  const Expression e = config_expression(cfg, key, vars);
  return [e, m](const Vec& p, const Vec& v) {
    std::vector<double> x(2 * m);
    std::copy(v.data(), v.data() + m, x.begin());
    std::copy(p.data(), p.data() + m, x.begin() + static_cast<std::ptrdiff_t>(m));
    return e(x.data());
  };
}

MFunction m_function(const RunConfig& cfg, const std::string& key) {
  const Expression e = config_expression(cfg, key, numbered("q", cfg.count("geometry.dim")));
  return [e](const Vec& q) { return e(q.data()); };
}

GriddedFunction random_bump(const Grid& grid, const Mat& cholesky, std::mt19937_64& rng,
                            double centre_radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = grid.dim();
  Vec c(static_cast<Eigen::Index>(n)), k(static_cast<Eigen::Index>(n));
  do {
    for (Eigen::Index a = 0; a < c.size(); ++a) c[a] = centre_radius * u(rng);
  } while (c.norm() > centre_radius);
  for (Eigen::Index a = 0; a < k.size(); ++a) k[a] = 3.0 * u(rng);
  const double s = 0.06 + 0.01 * u(rng);
  const Complex amp = std::polar(1.0, kPi * u(rng));
  const Mat lt = cholesky.transpose();
  return GriddedFunction::from_closed_form(grid, [=](const double* x) {
    const Vec z = lt * Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(n));
    return amp * std::exp(-(z - c).squaredNorm() / (2.0 * s * s)) * std::polar(1.0, k.dot(z));
  });
}

}  // namespace localstar::cli
