#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>

#include <localstar/geometry.hpp>
#include <localstar/norms.hpp>
#include <localstar/ode.hpp>
#include <localstar/spacetime.hpp>
#include <localstar/starproduct.hpp>

#include "setup.hpp"

namespace localstar::cli {

namespace {

const char* relation_token(Relation r) {
  switch (r) {
    case Relation::AtMost:
      return "<=";
    case Relation::AtLeast:
      return ">=";
    case Relation::Below:
      return "<";
    case Relation::Exactly:
      return "==";
  }
  return "?";
}

class Recorder {
 public:
  Recorder(std::string suite, std::vector<CheckResult>& out) : suite_(std::move(suite)), out_(out) {}

  void add(std::string name, double value, double limit, Relation rel, std::string detail = {}) {
    CheckResult c;
    c.suite = suite_;
    c.name = std::move(name);
    c.value = value;
    c.limit = limit;
    c.relation = rel;
    c.detail = std::move(detail);
    switch (rel) {
      case Relation::AtMost:
        c.passed = value <= limit;
        break;
      case Relation::AtLeast:
        c.passed = value >= limit;
        break;
      case Relation::Below:
        c.passed = value < limit;
        break;
      case Relation::Exactly:
        c.passed = value == limit;
        break;
    }
    out_.push_back(std::move(c));
  }

 private:
  std::string suite_;
  std::vector<CheckResult>& out_;
};

Vec random_in_ball(std::size_t n, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  Vec x(static_cast<Eigen::Index>(n));
  for (Eigen::Index a = 0; a < x.size(); ++a) x[a] = g(rng);
  const double r = radius * std::pow(u(rng), 1.0 / static_cast<double>(n));
  return x * (r / x.norm());
}

Mat random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return Eigen::HouseholderQR<Mat>(a).householderQ();
}

// Bump in h-normalized coordinates centred just outside the unit ball, narrow
// enough that its numerical support misses K.
GriddedFunction outside_bump(const Grid& grid, const Mat& chol, std::mt19937_64& rng) {
  const Vec c = random_in_ball(grid.dim(), 1.0, rng).normalized() * 1.35;
  const Mat lt = chol.transpose();
  const std::size_t n = grid.dim();
  return GriddedFunction::from_closed_form(grid, [=](const double* x) {
    const Vec z = lt * Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(n));
    return Complex(std::exp(-(z - c).squaredNorm() / (2.0 * 0.035 * 0.035)), 0.0);
  });
}

GriddedFunction sum(const GriddedFunction& a, const GriddedFunction& b) {
  return GriddedFunction::from_closed_form(a.grid(), [a, b](const double* x) { return a(x) + b(x); });
}

double pointwise_deviation(const GriddedFunction& prod, const GriddedFunction& f,
                           const GriddedFunction& g) {
  double worst = 0.0;
  for (std::size_t i = 0; i < prod.values().size(); ++i) {
    worst = std::max(worst, std::abs(prod.values()[i] - f.values()[i] * g.values()[i]));
  }
  return worst;
}

std::vector<Vec> points_near_centre(const AdmissibleAction& action, std::size_t count,
                                    std::mt19937_64& rng) {
  const Mat lt_inv = action.fiber().cholesky().transpose().inverse();
  std::vector<Vec> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(lt_inv * random_in_ball(action.fiber_dim(), 0.12, rng));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.3e}", i ? ", " : "", v[i]);
  return s;
}

// ---------------------------------------------------------------------------

void geometry_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const std::size_t n = cfg.count("fiber.dim");
  const RadialDiffeo psi(n);
  const Mat q = random_orthogonal(n, rng);
  const double plateau = psi.profile().cutoff().plateau_end();
  double roundtrip = 0.0, equivariance = 0.0, identity = 0.0;
  for (int k = 0; k < 2000; ++k) {
    // psi overflows past |x| ~ 0.9986; equivariance is sampled where its
    // conditioning r psi'/psi stays below ~1e3
    const Vec x = random_in_ball(n, 0.998, rng);
    roundtrip = std::max(roundtrip, (psi.apply_inverse(psi.apply(x)) - x).norm());
    const Vec w = random_in_ball(n, 0.95, rng);
    const Vec y = psi.apply(w);
    equivariance = std::max(equivariance, (psi.apply(q * w) - q * y).norm() / std::max(1.0, y.norm()));
    if (w.norm() <= plateau) identity = std::max(identity, (y - w).norm());
  }
  const double tol_rt = cfg.number("tolerance.roundtrip");
  rec.add("psi-round-trip", roundtrip, tol_rt, Relation::AtMost, "2000 points with |x| <= 0.998");
  rec.add("psi-equivariance", equivariance, cfg.number("tolerance.equivariance"), Relation::AtMost,
          "random orthogonal map, |x| <= 0.95, relative to max(1, |psi(x)|)");
  rec.add("psi-identity-on-half-ball", identity, 0.0, Relation::Exactly);
}

void flows_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const Mat lt_inv = action.fiber().cholesky().transpose().inverse();
  const std::size_t d = action.rank();
  std::uniform_real_distribution<double> time(-0.5, 0.5);
  std::uniform_int_distribution<std::size_t> pick(0, d - 1);
  double group = 0.0, commute = 0.0, ode = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec x = lt_inv * random_in_ball(action.fiber_dim(), 0.9, rng);
    const double s = time(rng), t = time(rng);
    const std::size_t i = pick(rng), j = pick(rng);
    const Vec st = action.flow(i, s, action.flow(i, t, x));
    const Vec direct = action.flow(i, s + t, x);
    group = std::max(group, (st - direct).norm() / std::max(direct.norm(), 1e-300));
    const Vec ij = action.flow(i, s, action.flow(j, t, x));
    const Vec ji = action.flow(j, t, action.flow(i, s, x));
    commute = std::max(commute, (ij - ji).norm() / std::max(ij.norm(), 1e-300));
    const Vec ref = integrate_flow(action, i, t, x);
    const Vec conj = action.flow(i, t, x);
    ode = std::max(ode, (conj - ref).norm() / std::max(ref.norm(), 1e-300));
  }
  const double tol = cfg.number("tolerance.flow");
  rec.add("group-law", group, tol, Relation::AtMost, "20 trajectories, relative");
  rec.add("commutation", commute, tol, Relation::AtMost, "20 trajectories, relative");
  rec.add("ode-agreement", ode, tol, Relation::AtMost, "conjugated flow against Dormand-Prince, relative");
}

void oracle_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const ProductEngine engine(action, engine_settings(cfg));
  const Grid grid = fiber_grid(cfg, action);
  const Mat chol = action.fiber().cholesky();
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    const GriddedFunction f = random_bump(grid, chol, rng), g = random_bump(grid, chol, rng);
    const GriddedFunction fg = engine.deformed_product(f, g);
    const std::vector<Vec> pts = points_near_centre(action, 3, rng);
    const OracleResult ref = oscillatory_quadrature(action, f, g, pts);
    const double scale = fg.sup_abs();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      worst = std::max(worst, std::abs(fg(pts[i]) - ref.values[i]) / scale);
    }
  }
  rec.add("engine-vs-quadrature", worst, cfg.number("tolerance.oracle"), Relation::AtMost,
          "2 pairs, 3 points each, relative to the product's sup norm");
}

void support_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const ProductEngine engine(action, engine_settings(cfg));
  const Grid grid = fiber_grid(cfg, action);
  const Mat chol = action.fiber().cholesky();
  const double threshold = cfg.number("tolerance.inclusion");
  double failures = 0.0, largest = 0.0;
  for (int k = 0; k < 5; ++k) {
    const GriddedFunction f = sum(random_bump(grid, chol, rng), outside_bump(grid, chol, rng));
    const GriddedFunction g = sum(random_bump(grid, chol, rng), outside_bump(grid, chol, rng));
    const InclusionReport r = support_inclusion_check(engine, f, g, threshold);
    if (!r.holds) failures += 1.0;
    largest = std::max(largest, r.largest_offending);
  }
  rec.add("support-inclusion", failures, 0.0, Relation::Exactly,
          fmt::format("5 configurations, largest offending modulus {:.3e}", largest));

  const GriddedFunction fixed = outside_bump(grid, chol, rng);
  const GriddedFunction g = random_bump(grid, chol, rng);
  const double fg = pointwise_deviation(engine.deformed_product(fixed, g), fixed, g);
  const double gf = pointwise_deviation(engine.deformed_product(g, fixed), g, fixed);
  rec.add("fixed-function-pointwise", std::max(fg, gf), 0.0, Relation::Exactly);
  const GriddedFunction one = GriddedFunction::constant(grid, Complex(1.0, 0.0));
  rec.add("unit-pointwise", pointwise_deviation(engine.deformed_product(one, g), one, g), 0.0,
          Relation::Exactly);
}

void delta_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  TowerSettings ts = tower_settings(cfg);
  ts.frame = FrameKind::Vanishing;
  const TangentTower tower(base_geometry(cfg), ts);
  const Vec p0 = ts.vanishing_point;
  const auto engine = tower.engine_at(p0);
  const Grid grid = tower.fiber_grid(p0);
  const Mat chol = engine->action().fiber().cholesky();
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const GriddedFunction f = random_bump(grid, chol, rng), g = random_bump(grid, chol, rng);
    worst = std::max(worst, pointwise_deviation(engine->deformed_product(f, g), f, g));
  }
  rec.add("delta-state-along-fiber", worst, cfg.number("tolerance.delta"), Relation::AtMost,
          "3 pairs, every grid point of the fibre over the vanishing point");
}

void algebra_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const ProductEngine engine(action, engine_settings(cfg));
  const Grid grid = fiber_grid(cfg, action);
  const Mat chol = action.fiber().cholesky();
  double assoc = 0.0, inv = 0.0;
  for (int k = 0; k < 2; ++k) {
    const GriddedFunction f = random_bump(grid, chol, rng), g = random_bump(grid, chol, rng),
                          h = random_bump(grid, chol, rng);
    assoc = std::max(assoc, associativity_residual(engine, f, g, h));
    inv = std::max(inv, involution_residual(engine, f, g));
  }
  rec.add("associativity", assoc, cfg.number("tolerance.associativity"), Relation::AtMost,
          "2 random triples, relative");
  rec.add("involution", inv, cfg.number("tolerance.involution"), Relation::AtMost,
          "2 random pairs, relative");
}

void semiclassical_suite(const RunConfig& cfg, std::mt19937_64&, Recorder& rec) {
  const Complex c = derive_semiclassical_constant();
  // only hbar / width^2 matters: a wide fibre keeps the bumps resolved
  const double scale = 8.0, width = 0.6;
  Mat j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  const FiberGeometry fiber(Mat::Identity(2, 2) / (scale * scale), RadialDiffeo(2));
  const Grid grid = Grid::cube(2, 1.2 * scale, 121);
  auto gauss = [&](double cx, double cy) {
    return GriddedFunction::from_closed_form(grid, [=](const double* x) {
      const double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
      return Complex(std::exp(-r2 / (2.0 * width * width)), 0.0);
    });
  };
  const GriddedFunction f = gauss(0.4, 0.0), g = gauss(-0.4, 0.64);
  std::vector<double> residuals;
  for (double hbar : {0.2, 0.1, 0.05}) {
    const AdmissibleAction action(fiber, Mat::Identity(2, 2), j, hbar);
    const ProductEngine engine(action, engine_settings(cfg));
    residuals.push_back(semiclassical_residual(engine, f, g, c));
  }
  double order = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < residuals.size(); ++k) {
    order = std::min(order, std::log2(residuals[k - 1] / residuals[k]));
  }
  rec.add("semiclassical-order", order, cfg.number("tolerance.semiclassical_order"),
          Relation::AtLeast,
          fmt::format("c = {:.12f}{:+.12f}i, residuals {}", c.real(), c.imag(), join(residuals)));
}

void tower_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const BaseGeometry geom = base_geometry(cfg);
  const TowerSettings ts = tower_settings(cfg);
  const TangentTower tower(geom, ts);
  const std::size_t m = geom.dim();
  const Vec p0 = base_point(cfg);
  const bool hyperbolic = geom.kind() == ManifoldKind::Hyperbolic;
  const double tol = cfg.number(hyperbolic ? "tolerance.tower_hyperbolic" : "tolerance.tower_flat");

  std::vector<std::pair<Vec, Vec>> samples;
  const Mat g_inv_sqrt = tower.frame(p0);
  for (int k = 0; k < 50; ++k) {
    samples.emplace_back(p0, g_inv_sqrt * random_in_ball(m, 0.9, rng));
  }
  rec.add("phi-round-trip", geom.round_trip_residual(samples), cfg.number("tolerance.phi_roundtrip"),
          Relation::AtMost, "50 tangent vectors inside the fibre ball");

  const MxMFunction f = mxm_function(cfg, "functions.mxm.f"), g = mxm_function(cfg, "functions.mxm.g");
  rec.add("phi-homomorphism", tower.phi_homomorphism_residual(f, g, p0), tol, Relation::AtMost);
  const TMFunction tf = tm_function(cfg, "functions.tm.f"), tg = tm_function(cfg, "functions.tm.g");
  rec.add("restriction-homomorphism", tower.homomorphism_residual_ip(tf, tg, p0), tol,
          Relation::AtMost);
  rec.add("neighbourhood-restriction", tower.restriction_residual(tf, tg, p0), tol,
          Relation::AtMost);
  const MFunction a = m_function(cfg, "functions.m.f"), c = m_function(cfg, "functions.m.g");
  rec.add("exp-pullback-homomorphism", tower.residual_expp(p0, a, c), tol, Relation::AtMost);
  std::vector<Vec> grid_points;
  const std::size_t k = 41;
  for (std::size_t i = 0; i < k * k; ++i) {
    Vec x = p0;
    x[0] += -1.0 + 2.0 * static_cast<double>(i % k) / static_cast<double>(k - 1);
    if (m > 1) x[1] += -1.0 + 2.0 * static_cast<double>(i / k) / static_cast<double>(k - 1);
    if (geom.contains(x) && !tower.in_chart(p0, x)) grid_points.push_back(x);
  }
  rec.add("commutator-outside-neighbourhood", tower.commutator_outside(p0, a, c, grid_points), 0.0,
          Relation::Exactly, fmt::format("{} sample points outside the chart", grid_points.size()));
  const Vec v = random_in_ball(m, 0.5, rng);
  rec.add("phi-equivariance", tower.phi_equivariance_residual(f, v, p0), tol, Relation::AtMost);
}

void norms_suite(const RunConfig& cfg, std::mt19937_64& rng, Recorder& rec) {
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const AdmissibleAction classical(action.fiber(), action.sections(), action.theta(), 0.0);
  const Grid grid = fiber_grid(cfg, action);
  const Box L = grid.box();
  const std::size_t top = cfg.count("grid.v");
  NormSettings ns;
  ns.basis = cfg.str("norms.basis") == "hermite" ? BasisKind::Hermite : BasisKind::Fourier;
  ns.q_samples = cfg.count("norms.q_samples");
  ns.truncation = top;

  const Mat lt = action.fiber().cholesky().transpose();
  const std::size_t n = action.fiber_dim();
  const GriddedFunction plateau = GriddedFunction::from_closed_form(grid, [lt, n](const double* x) {
    const Vec z = lt * Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(n));
    Vec c = Vec::Zero(static_cast<Eigen::Index>(n));
    c[0] = 0.05;
    if (n > 1) c[1] = -0.03;
    const double s = ((z - c).norm() - 0.08) / 0.12;
    const double step = s <= 0.0 ? 0.0 : s >= 1.0 ? 1.0 : 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
    return (1.0 - step) * Complex(0.8, 0.3);
  });
  const double sup = plateau.sup_abs();
  const SeminormEstimate e0 = deformed_seminorm(classical, plateau, L, ns);
  rec.add("classical-limit-sup", std::abs(e0.value - sup) / sup, cfg.number("tolerance.norm_sup"),
          Relation::AtMost, fmt::format("estimate {:.6f}, sup {:.6f}, truncation {}", e0.value, sup, top));

  const GriddedFunction a = fiber_function(grid, config_expression(cfg, "functions.fiber.f", numbered("x", n)));
  const ProductEngine engine(action, engine_settings(cfg));
  std::vector<double> residuals;
  for (std::size_t t : {top / 4, top / 2, top}) {
    NormSettings s = ns;
    s.truncation = t;
    residuals.push_back(cstar_identity_residual(engine, a, L, s));
  }
  double ratio = 0.0;
  for (std::size_t k = 1; k < residuals.size(); ++k) ratio = std::max(ratio, residuals[k] / residuals[k - 1]);
  const double est = cfg.number("tolerance.estimator");
  const bool settled = *std::max_element(residuals.begin(), residuals.end()) <= est;
  rec.add("cstar-identity-decreasing", settled ? 0.0 : ratio, 1.0, Relation::Below,
          fmt::format("residuals {} at truncations {}, {}, {}", join(residuals), top / 4, top / 2, top));

  Vec v(static_cast<Eigen::Index>(action.rank()));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  const double before = deformed_seminorm(action, a, L, ns).value;
  const double after = deformed_seminorm(action, action.act(v, a), L, ns).value;
  rec.add("cofinal-isometry", std::abs(after - before), est, Relation::AtMost,
          fmt::format("L contains K: {}", L.contains(action.support_box())));
}

using SuiteFn = std::function<void(const RunConfig&, std::mt19937_64&, Recorder&)>;

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"geometry", geometry_suite},
      {"flows", flows_suite},
      {"oracle", oracle_suite},
      {"support-inclusion", support_suite},
      {"delta-state", delta_suite},
      {"algebra", algebra_suite},
      {"tower", tower_suite},
      {"semiclassical", semiclassical_suite},
      {"norms", norms_suite},
  };
  return r;
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

nlohmann::json VerifyReport::to_json(const RunConfig& cfg) const {
  nlohmann::json j;
  j["passed"] = passed();
  j["seed"] = cfg.seed();
  j["tolerances"] = cfg.tolerances();
  j["config"] = embedded_entries(cfg);
  nlohmann::json list = nlohmann::json::array();
  for (const CheckResult& c : checks) {
    list.push_back({{"suite", c.suite},
                    {"check", c.name},
                    {"value", c.value},
                    {"relation", relation_token(c.relation)},
                    {"limit", c.limit},
                    {"passed", c.passed},
                    {"detail", c.detail}});
  }
  j["checks"] = list;
  return j;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

VerifyReport run_suites(const RunConfig& cfg, const std::vector<std::string>& filter) {
  for (const std::string& name : filter) {
    if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end()) {
      throw ConfigError(fmt::format("unknown suite '{}'", name));
    }
  }
  VerifyReport report;
  const auto& reg = registry();
  for (std::size_t k = 0; k < reg.size(); ++k) {
    const auto& [name, fn] = reg[k];
    if (!filter.empty() && std::find(filter.begin(), filter.end(), name) == filter.end()) continue;
    // each suite draws from its own stream so filtering does not shift the others
    const std::uint64_t seed = cfg.seed();
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    Recorder rec(name, report.checks);
    try {
      fn(cfg, rng, rec);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      rec.add("completed", 1.0, 0.0, Relation::Exactly, e.what());
    }
  }
  return report;
}

}  // namespace localstar::cli
