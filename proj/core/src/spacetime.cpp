#include "localstar/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fmt/format.h>

#include "localstar/parallel.hpp"

namespace localstar {

namespace {

Vec mobius_add(const Vec& a, const Vec& b) {
  const double ab = a.dot(b), aa = a.squaredNorm(), bb = b.squaredNorm();
  return ((1.0 + 2.0 * ab + bb) * a + (1.0 - aa) * b) / (1.0 + 2.0 * ab + aa * bb);
}

double conformal_factor(const Vec& p) { return 2.0 / (1.0 - p.squaredNorm()); }

Vec disk_exp(const Vec& p, const Vec& v) {
  const double n = v.norm();
  if (n == 0.0) return p;
  return mobius_add(p, std::tanh(0.5 * conformal_factor(p) * n) / n * v);
}

Vec disk_log(const Vec& p, const Vec& q) {
  const Vec w = mobius_add(-p, q);
  const double n = w.norm();
  if (n == 0.0) return Vec::Zero(p.size());
  return (2.0 / conformal_factor(p)) * std::atanh(n) / n * w;
}

constexpr double kSnap = 1e-9;

template <class T>
std::shared_ptr<T> lookup(std::vector<std::pair<Vec, std::shared_ptr<T>>>& table, const Vec& p) {
  for (auto& [key, value] : table) {
    if ((key - p).cwiseAbs().maxCoeff() < kSnap) return value;
  }
  return nullptr;
}

}  // namespace

BaseGeometry BaseGeometry::flat(std::size_t m) {
  if (m == 0) throw DomainError("base dimension must be positive");
  BaseGeometry g;
  g.kind_ = ManifoldKind::Flat;
  g.dim_ = m;
  g.exp_ = [](const Vec& p, const Vec& v) { return Vec(p + v); };
  g.log_ = [](const Vec& p, const Vec& q) { return Vec(q - p); };
  g.metric_ = [m](const Vec&) { return Mat(Mat::Identity(m, m)); };
  return g;
}

BaseGeometry BaseGeometry::hyperbolic_disk() {
  BaseGeometry g;
  g.kind_ = ManifoldKind::Hyperbolic;
  g.dim_ = 2;
  g.exp_ = disk_exp;
  g.log_ = disk_log;
  g.metric_ = [](const Vec& p) {
    const double l = conformal_factor(p);
    return Mat(l * l * Mat::Identity(2, 2));
  };
  g.domain_ = [](const Vec& p) { return p.squaredNorm() < 1.0; };
  return g;
}

BaseGeometry BaseGeometry::custom(std::size_t m, PointMap exp, PointMap log, MetricField metric,
                                  Domain domain) {
  if (m == 0) throw DomainError("base dimension must be positive");
  if (!exp || !log || !metric) throw DomainError("custom geometry needs exp, log and metric");
  BaseGeometry g;
  g.kind_ = ManifoldKind::Custom;
  g.dim_ = m;
  g.exp_ = std::move(exp);
  g.log_ = std::move(log);
  g.metric_ = std::move(metric);
  g.domain_ = std::move(domain);
  return g;
}

bool BaseGeometry::contains(const Vec& p) const {
  if (static_cast<std::size_t>(p.size()) != dim_ || !p.allFinite()) return false;
  return !domain_ || domain_(p);
}

Vec BaseGeometry::exp(const Vec& p, const Vec& v) const {
  if (!contains(p)) throw DomainError("exp: base point outside the manifold");
  return exp_(p, v);
}

Vec BaseGeometry::log(const Vec& p, const Vec& q) const {
  if (!contains(p) || !contains(q)) throw DomainError("log: point outside the manifold");
  return log_(p, q);
}

std::pair<Vec, Vec> BaseGeometry::phi(const Vec& p, const Vec& v) const {
  return {exp(p, -v), exp(p, v)};
}

std::pair<Vec, Vec> BaseGeometry::phi_inverse(const Vec& a, const Vec& b) const {
  const Vec p = exp(a, 0.5 * log(a, b));
  return {p, log(p, b)};
}

double BaseGeometry::round_trip_residual(const std::vector<std::pair<Vec, Vec>>& samples) const {
  double worst = 0.0;
  for (const auto& [p, v] : samples) {
    const auto [a, b] = phi(p, v);
    const auto [p2, v2] = phi_inverse(a, b);
    worst = std::max({worst, (p2 - p).norm(), (v2 - v).norm()});
  }
  return worst;
}

void BaseGeometry::check_round_trip(const std::vector<std::pair<Vec, Vec>>& samples,
                                    double tol) const {
  const double r = round_trip_residual(samples);
  if (!(r <= tol)) {
    throw InvariantError("Phi round trip",
                         fmt::format("Phi^-1 o Phi deviates from the identity by {:.3e} > {:.1e}",
                                     r, tol));
  }
}

// ---------------------------------------------------------------------------

struct TangentTower::Cache {
  std::mutex mutex;
  std::vector<std::pair<Vec, std::shared_ptr<const ProductEngine>>> engines;
};

TangentTower::TangentTower(BaseGeometry geometry, TowerSettings settings)
    : geometry_(std::move(geometry)), settings_(std::move(settings)),
      cache_(std::make_shared<Cache>()) {
  const std::size_t m = geometry_.dim();
  if (settings_.theta.size() == 0) {
    settings_.theta = Mat::Zero(m, m);
    if (m == 2) settings_.theta << 0.0, 1.0, -1.0, 0.0;
  }
  if (static_cast<std::size_t>(settings_.theta.rows()) != m) {
    throw DomainError("tower Theta must be m x m");
  }
  require_skew(settings_.theta, "Theta");
  if (!(settings_.fiber_radius > 0.0)) throw DomainError("fibre radius must be positive");
  if (!(settings_.neighbourhood_margin > 1.0)) {
    throw DomainError("neighbourhood margin must exceed 1");
  }
  if (!(settings_.hbar >= 0.0)) throw DomainError("hbar must be non-negative");
  if (settings_.frame == FrameKind::Vanishing) {
    if (static_cast<std::size_t>(settings_.vanishing_point.size()) != m) {
      throw DomainError("vanishing frame needs a base point of dimension m");
    }
    if (!(settings_.vanishing_length > 0.0)) throw DomainError("vanishing length must be positive");
  }
}

Mat TangentTower::fiber_metric(const Vec& p) const {
  const double r = settings_.fiber_radius;
  return geometry_.metric(p) / (r * r);
}

Mat TangentTower::frame(const Vec& p) const {
  const std::size_t m = geometry_.dim();
  if (settings_.frame == FrameKind::Coordinate) return Mat::Identity(m, m);
  Eigen::SelfAdjointEigenSolver<Mat> es(geometry_.metric(p));
  Mat e = settings_.fiber_radius * es.operatorInverseSqrt();
  if (settings_.frame == FrameKind::Vanishing) {
    const double d2 = (p - settings_.vanishing_point).squaredNorm();
    const double l = settings_.vanishing_length;
    e *= -std::expm1(-d2 / (l * l));
  }
  return e;
}

AdmissibleAction TangentTower::action_at(const Vec& p) const {
  if (!geometry_.contains(p)) throw DomainError("base point outside the manifold");
  FiberGeometry fiber(fiber_metric(p), RadialDiffeo(geometry_.dim()));
  return AdmissibleAction(std::move(fiber), frame(p), settings_.theta, settings_.hbar);
}

std::shared_ptr<const ProductEngine> TangentTower::engine_at(const Vec& p) const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  if (auto hit = lookup(cache_->engines, p)) return hit;
  auto engine = std::make_shared<const ProductEngine>(action_at(p), settings_.engine);
  cache_->engines.emplace_back(p, engine);
  return engine;
}

Grid TangentTower::fiber_grid(const Vec& p) const {
  const FiberGeometry fiber(fiber_metric(p), RadialDiffeo(geometry_.dim()));
  const Vec half = fiber.ball_half_widths() * settings_.neighbourhood_margin * 1.02;
  const std::size_t m = geometry_.dim();
  std::vector<double> lo(m), hi(m);
  for (std::size_t a = 0; a < m; ++a) {
    hi[a] = half[static_cast<Eigen::Index>(a)];
    lo[a] = -hi[a];
  }
  return Grid(lo, hi, std::vector<std::size_t>(m, settings_.fiber_points));
}

bool TangentTower::in_neighbourhood(const Vec& p, const Vec& v) const {
  const double s = v.dot(fiber_metric(p) * v);
  const double m = settings_.neighbourhood_margin;
  return s < m * m;
}

GriddedFunction TangentTower::restrict_to_fiber(const Vec& p, const TMFunction& f) const {
  const std::size_t m = geometry_.dim();
  Evaluator e = [f, p, m](const double* x) {
    return f(p, Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(m)));
  };
  return GriddedFunction::from_closed_form(fiber_grid(p), e);
}

std::vector<GriddedFunction> TangentTower::star_TM(const TMFunction& f, const TMFunction& g,
                                                   const std::vector<Vec>& base_points) const {
  std::vector<GriddedFunction> out;
  out.reserve(base_points.size());
  for (const Vec& p : base_points) {
    out.push_back(engine_at(p)->deformed_product(restrict_to_fiber(p, f), restrict_to_fiber(p, g)));
  }
  return out;
}

double TangentTower::homomorphism_residual_ip(const TMFunction& f, const TMFunction& g,
                                              const Vec& p) const {
  const GriddedFunction lhs = star_TM(f, g, {p}).front();
  const GriddedFunction rhs =
      engine_at(p)->deformed_product(restrict_to_fiber(p, f), restrict_to_fiber(p, g));
  return max_abs_difference(lhs, rhs);
}

double TangentTower::restriction_residual(const TMFunction& f, const TMFunction& g,
                                          const Vec& p) const {
  auto cut = [this](const TMFunction& h) -> TMFunction {
    return [this, h](const Vec& q, const Vec& v) {
      return in_neighbourhood(q, v) ? h(q, v) : Complex{};
    };
  };
  const GriddedFunction full = star_TM(f, g, {p}).front();
  const GriddedFunction local = star_TM(cut(f), cut(g), {p}).front();
  const Grid& grid = full.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!in_neighbourhood(p, grid.point(i))) continue;
    worst = std::max(worst, std::abs(full.values()[i] - local.values()[i]));
  }
  return worst;
}

TMFunction TangentTower::pullback_phi(const MxMFunction& f) const {
  const BaseGeometry geom = geometry_;
  return [geom, f](const Vec& p, const Vec& v) {
    const auto [a, b] = geom.phi(p, v);
    return f(a, b);
  };
}

bool TangentTower::in_image(const Vec& a, const Vec& b) const {
  if (!geometry_.contains(a) || !geometry_.contains(b)) return false;
  const auto [p, v] = geometry_.phi_inverse(a, b);
  return geometry_.contains(p) && v.allFinite() && in_neighbourhood(p, v);
}

MxMFunction TangentTower::pushforward_phi(const TMFunction& f) const {
  const TangentTower self = *this;
  return [self, f](const Vec& a, const Vec& b) -> Complex {
    if (!self.in_image(a, b)) return Complex{};
    const auto [p, v] = self.geometry_.phi_inverse(a, b);
    return f(p, v);
  };
}

void TangentTower::require_supported_in_neighbourhood(const TMFunction& f,
                                                      const std::vector<Vec>& base_points) const {
  for (const Vec& p : base_points) {
    const Grid grid = fiber_grid(p);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec v = grid.point(i);
      if (in_neighbourhood(p, v)) continue;
      if (std::abs(f(p, v)) > GriddedFunction::kSupportThreshold) {
        throw DomainError(fmt::format("function escapes the neighbourhood U at v = ({})",
                                      fmt::join(v.data(), v.data() + v.size(), ", ")));
      }
    }
  }
}

MxMFunction TangentTower::star_MxM(const MxMFunction& f, const MxMFunction& g) const {
  struct Products {
    std::mutex mutex;
    std::vector<std::pair<Vec, std::shared_ptr<GriddedFunction>>> table;
  };
  auto products = std::make_shared<Products>();
  const TangentTower self = *this;
  const TMFunction pf = pullback_phi(f), pg = pullback_phi(g);
  return [self, f, g, pf, pg, products](const Vec& a, const Vec& b) -> Complex {
    if (!self.in_image(a, b)) return f(a, b) * g(a, b);
    const auto [p, v] = self.geometry_.phi_inverse(a, b);
    std::shared_ptr<GriddedFunction> prod;
    {
      std::lock_guard<std::mutex> lock(products->mutex);
      prod = lookup(products->table, p);
      if (!prod) {
        prod = std::make_shared<GriddedFunction>(self.engine_at(p)->deformed_product(
            self.restrict_to_fiber(p, pf), self.restrict_to_fiber(p, pg)));
        products->table.emplace_back(p, prod);
      }
    }
    return (*prod)(v);
  };
}

double TangentTower::phi_homomorphism_residual(const MxMFunction& f, const MxMFunction& g,
                                               const Vec& p) const {
  const MxMFunction lhs = star_MxM(f, g);
  const GriddedFunction rhs = engine_at(p)->deformed_product(
      restrict_to_fiber(p, pullback_phi(f)), restrict_to_fiber(p, pullback_phi(g)));
  const Grid& grid = rhs.grid();
  std::vector<double> diff(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    const Vec v = grid.point(i);
    if (!in_neighbourhood(p, v)) return;
    const auto [a, b] = geometry_.phi(p, v);
    diff[i] = std::abs(lhs(a, b) - rhs.values()[i]);
  });
  const double scale = rhs.sup_abs();
  const double worst = *std::max_element(diff.begin(), diff.end());
  return scale > 0.0 ? worst / scale : worst;
}

double TangentTower::phi_equivariance_residual(const MxMFunction& f, const Vec& v,
                                               const Vec& p) const {
  const AdmissibleAction act = action_at(p);
  // alpha~_v on M x M, transported through Phi
  // the base point is recovered from (a, b); its fibre action is the one at p
  const TangentTower self = *this;
  const MxMFunction moved = [self, act, f, v](const Vec& a, const Vec& b) -> Complex {
    if (!self.in_image(a, b)) return f(a, b);
    const auto [q, w] = self.geometry_.phi_inverse(a, b);
    const Vec w2 = act.orbit(v, w);
    const auto [a2, b2] = self.geometry_.phi(q, w2);
    return f(a2, b2);
  };
  const GriddedFunction lhs = restrict_to_fiber(p, pullback_phi(moved));
  const GriddedFunction rhs = act.act(v, restrict_to_fiber(p, pullback_phi(f)));
  return max_abs_difference(lhs, rhs);
}

bool TangentTower::in_chart(const Vec& p, const Vec& q) const {
  if (!geometry_.contains(q)) return false;
  const Vec v = geometry_.log(p, q);
  return v.allFinite() && in_neighbourhood(p, v);
}

MFunction TangentTower::star_p_on_M(const Vec& p, const MFunction& f, const MFunction& g) const {
  const BaseGeometry geom = geometry_;
  const TMFunction ef = [geom, f](const Vec& q, const Vec& v) { return f(geom.exp(q, v)); };
  const TMFunction eg = [geom, g](const Vec& q, const Vec& v) { return g(geom.exp(q, v)); };
  auto prod = std::make_shared<GriddedFunction>(
      engine_at(p)->deformed_product(restrict_to_fiber(p, ef), restrict_to_fiber(p, eg)));
  const TangentTower self = *this;
  return [self, p, f, g, prod](const Vec& q) -> Complex {
    if (!self.in_chart(p, q)) return f(q) * g(q);
    return (*prod)(self.geometry_.log(p, q));
  };
}

double TangentTower::residual_expp(const Vec& p, const MFunction& f, const MFunction& g) const {
  const MFunction lhs = star_p_on_M(p, f, g);
  const BaseGeometry geom = geometry_;
  const TMFunction ef = [geom, f](const Vec& q, const Vec& v) { return f(geom.exp(q, v)); };
  const TMFunction eg = [geom, g](const Vec& q, const Vec& v) { return g(geom.exp(q, v)); };
  const GriddedFunction rhs =
      engine_at(p)->deformed_product(restrict_to_fiber(p, ef), restrict_to_fiber(p, eg));
  const Grid& grid = rhs.grid();
  std::vector<double> diff(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    const Vec v = grid.point(i);
    if (!in_neighbourhood(p, v)) return;
    diff[i] = std::abs(lhs(geometry_.exp(p, v)) - rhs.values()[i]);
  });
  const double scale = rhs.sup_abs();
  const double worst = *std::max_element(diff.begin(), diff.end());
  return scale > 0.0 ? worst / scale : worst;
}

double TangentTower::commutator_outside(const Vec& p, const MFunction& f, const MFunction& g,
                                        const std::vector<Vec>& samples) const {
  const MFunction fg = star_p_on_M(p, f, g);
  const MFunction gf = star_p_on_M(p, g, f);
  double worst = 0.0;
  for (const Vec& q : samples) {
    if (in_chart(p, q)) continue;
    worst = std::max(worst, std::abs(fg(q) - gf(q)));
  }
  return worst;
}

}  // namespace localstar
