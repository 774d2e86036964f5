#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include <localstar/norms.hpp>
#include <localstar/spacetime.hpp>
#include <localstar/starproduct.hpp>

#include "artifacts.hpp"
#include "setup.hpp"
#include "suites.hpp"

#ifndef LOCALSTAR_VERSION
#define LOCALSTAR_VERSION "unknown"
#endif

namespace localstar::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json metadata(const RunConfig& cfg, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["engine_version"] = LOCALSTAR_VERSION;
  j["seed"] = cfg.seed();
  j["tolerances"] = cfg.tolerances();
  nlohmann::json grid;
  for (const char* key : {"grid.base", "grid.fiber", "grid.m", "grid.v", "engine.torus_points",
                          "engine.half_width", "engine.edge_band", "engine.edge_tolerance",
                          "fiber.margin", "base.lo", "base.hi", "base.point"}) {
    grid[key] = cfg.str(key);
  }
  j["grid"] = grid;
  j["config"] = embedded_entries(cfg);
  return j;
}

std::vector<Axis> grid_axes(const Grid& grid, const std::vector<std::string>& names) {
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    Axis ax{names[a], {}};
    for (std::size_t j = 0; j < grid.count[a]; ++j) ax.points.push_back(grid.coord(a, j));
    axes.push_back(std::move(ax));
  }
  return axes;
}

void add_complex(GridArtifact& art, const std::string& stem, const std::vector<Complex>& v) {
  std::vector<double> re(v.size()), im(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    re[i] = v[i].real();
    im[i] = v[i].imag();
  }
  art.columns.push_back("re_" + stem);
  art.values.push_back(std::move(re));
  art.columns.push_back("im_" + stem);
  art.values.push_back(std::move(im));
}

std::vector<Complex> pointwise(const GriddedFunction& f, const GriddedFunction& g) {
  std::vector<Complex> out(f.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.values()[i] * g.values()[i];
  return out;
}

double sup_difference(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::string out_dir(const RunConfig& cfg) {
  const std::string dir = cfg.str("output.dir");
  ensure_directory(dir);
  return dir;
}

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int product_fiber(const RunConfig& cfg) {
  const std::size_t n = cfg.count("fiber.dim");
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const ProductEngine engine(action, engine_settings(cfg));
  const Grid grid = fiber_grid(cfg, action);
  const auto vars = numbered("x", n);
  const GriddedFunction f = fiber_function(grid, config_expression(cfg, "functions.fiber.f", vars));
  const GriddedFunction g = fiber_function(grid, config_expression(cfg, "functions.fiber.g", vars));
  const GriddedFunction fg = engine.deformed_product(f, g);
  const GriddedFunction gf = engine.deformed_product(g, f);
  const std::vector<Complex> pw = pointwise(f, g);

  GridArtifact art;
  art.axes = grid_axes(grid, vars);
  add_complex(art, "fg", fg.values());
  add_complex(art, "gf", gf.values());
  add_complex(art, "pointwise", pw);
  art.metadata = metadata(cfg, "product");
  art.metadata["level"] = "fiber";
  art.metadata["hbar"] = action.hbar();
  art.metadata["deviation_from_pointwise"] = sup_difference(fg.values(), pw);
  art.metadata["commutator_sup"] = sup_difference(fg.values(), gf.values());
  const std::string path = art.write(out_dir(cfg), "product_fiber");
  fmt::print("wrote {}\n", path);
  fmt::print("sup |f*g - fg| = {:.6e}\nsup |f*g - g*f| = {:.6e}\n",
             art.metadata["deviation_from_pointwise"].get<double>(),
             art.metadata["commutator_sup"].get<double>());
  return kPass;
}

int product_tm(const RunConfig& cfg) {
  const TangentTower tower(base_geometry(cfg), tower_settings(cfg));
  const Vec p = base_point(cfg);
  const TMFunction f = tm_function(cfg, "functions.tm.f"), g = tm_function(cfg, "functions.tm.g");
  const GriddedFunction fg = tower.star_TM(f, g, {p}).front();
  const GriddedFunction rf = tower.restrict_to_fiber(p, f), rg = tower.restrict_to_fiber(p, g);
  const std::vector<Complex> pw = pointwise(rf, rg);

  GridArtifact art;
  art.axes = grid_axes(fg.grid(), numbered("v", tower.geometry().dim()));
  add_complex(art, "fg", fg.values());
  add_complex(art, "pointwise", pw);
  art.metadata = metadata(cfg, "product");
  art.metadata["level"] = "tm";
  art.metadata["deviation_from_pointwise"] = sup_difference(fg.values(), pw);
  const std::string path = art.write(out_dir(cfg), "product_tm");
  fmt::print("wrote {}\n", path);
  fmt::print("sup |f*g - fg| on the fibre over the base point = {:.6e}\n",
             art.metadata["deviation_from_pointwise"].get<double>());
  return kPass;
}

int product_mxm(const RunConfig& cfg) {
  const TangentTower tower(base_geometry(cfg), tower_settings(cfg));
  const BaseGeometry& geom = tower.geometry();
  const Vec p = base_point(cfg);
  const MxMFunction f = mxm_function(cfg, "functions.mxm.f"), g = mxm_function(cfg, "functions.mxm.g");
  const MxMFunction fg = tower.star_MxM(f, g);
  const Grid grid = tower.fiber_grid(p);
  std::vector<Complex> prod(grid.size()), pw(grid.size());
  std::vector<double> inside(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec v = grid.point(i);
    const auto [a, b] = geom.phi(p, v);
    prod[i] = fg(a, b);
    pw[i] = f(a, b) * g(a, b);
    inside[i] = tower.in_neighbourhood(p, v) ? 1.0 : 0.0;
  }
  GridArtifact art;
  art.axes = grid_axes(grid, numbered("v", geom.dim()));
  add_complex(art, "fg", prod);
  add_complex(art, "pointwise", pw);
  art.columns.push_back("in_image");
  art.values.push_back(std::move(inside));
  art.metadata = metadata(cfg, "product");
  art.metadata["level"] = "mxm";
  art.metadata["sampling"] = "pairs (exp_p(-v), exp_p(v)) over the fibre grid at the base point";
  art.metadata["deviation_from_pointwise"] = sup_difference(prod, pw);
  const std::string path = art.write(out_dir(cfg), "product_mxm");
  fmt::print("wrote {}\n", path);
  fmt::print("sup |f*g - fg| along the base point's pairs = {:.6e}\n",
             art.metadata["deviation_from_pointwise"].get<double>());
  return kPass;
}

int product_m(const RunConfig& cfg) {
  const TangentTower tower(base_geometry(cfg), tower_settings(cfg));
  const BaseGeometry& geom = tower.geometry();
  const std::size_t m = geom.dim();
  const Vec p = base_point(cfg);
  const MFunction f = m_function(cfg, "functions.m.f"), g = m_function(cfg, "functions.m.g");
  const MFunction fg = tower.star_p_on_M(p, f, g), gf = tower.star_p_on_M(p, g, f);
  const auto lo = cfg.list("base.lo"), hi = cfg.list("base.hi");
  if (lo.size() != m || hi.size() != m) throw ConfigError("base.lo/base.hi need geometry.dim entries");
  const Grid grid(lo, hi, std::vector<std::size_t>(m, cfg.count("grid.m")));
  std::vector<Complex> a(grid.size()), b(grid.size());
  std::vector<double> comm(grid.size()), chart(grid.size());
  double outside = 0.0, inside = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec q = grid.point(i);
    if (!geom.contains(q)) {
      a[i] = b[i] = Complex(kNaN, kNaN);
      comm[i] = chart[i] = kNaN;
      continue;
    }
    a[i] = fg(q);
    b[i] = gf(q);
    comm[i] = std::abs(a[i] - b[i]);
    const bool in = tower.in_chart(p, q);
    chart[i] = in ? 1.0 : 0.0;
    (in ? inside : outside) = std::max(in ? inside : outside, comm[i]);
  }
  GridArtifact art;
  art.axes = grid_axes(grid, numbered("q", m));
  add_complex(art, "fg", a);
  add_complex(art, "gf", b);
  art.columns.push_back("abs_commutator");
  art.values.push_back(std::move(comm));
  art.columns.push_back("in_chart");
  art.values.push_back(std::move(chart));
  art.metadata = metadata(cfg, "product");
  art.metadata["level"] = "m";
  art.metadata["commutator_sup_inside_chart"] = inside;
  art.metadata["commutator_sup_outside_chart"] = outside;
  const std::string path = art.write(out_dir(cfg), "product_m");
  fmt::print("wrote {}\n", path);
  fmt::print("sup |[f, g]| inside the chart = {:.6e}\nsup |[f, g]| outside the chart = {:.6e}\n",
             inside, outside);
  return kPass;
}

}  // namespace

int cmd_build_theta(const RunConfig& cfg) {
  const AdmissibleStructure s = build_structure(cfg);
  const std::size_t m = cfg.count("geometry.dim");
  const std::size_t n = cfg.count("fiber.dim");
  const Vec p0 = base_point(cfg);

  // structure over the base grid
  const auto lo = cfg.list("base.lo"), hi = cfg.list("base.hi");
  const Grid base(lo, hi, std::vector<std::size_t>(m, std::max<std::size_t>(cfg.count("grid.base"), 2)));
  GridArtifact lift;
  lift.axes = grid_axes(base, numbered("p", m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      lift.columns.push_back(fmt::format("h_{}{}", i + 1, j + 1));
      lift.values.emplace_back();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      lift.columns.push_back(fmt::format("lift_{}{}", i + 1, j + 1));
      lift.values.emplace_back();
    }
  }
  for (std::size_t k = 0; k < base.size(); ++k) {
    const Vec p = base.point(k);
    const Mat h = s.fiber(p).metric();
    const Mat l = s.vertical_lift(p);
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      for (Eigen::Index j = i; j < h.cols(); ++j) lift.values[c++].push_back(h(i, j));
    }
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < l.cols(); ++j) lift.values[c++].push_back(l(i, j));
    }
  }

  // fields and bivector over the fibre at the base point, with the checks
  const FiberGeometry fiber = s.fiber(p0);
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const Grid grid = fiber_grid(cfg, action);
  const Mat e = s.sections(p0);
  GridArtifact fields;
  fields.axes = grid_axes(grid, numbered("x", n));
  for (Eigen::Index i = 0; i < e.cols(); ++i) {
    for (std::size_t a = 0; a < n; ++a) fields.columns.push_back(fmt::format("X{}_{}", i + 1, a + 1));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) fields.columns.push_back(fmt::format("theta_{}{}", a + 1, b + 1));
  }
  fields.values.assign(fields.columns.size(), std::vector<double>(grid.size()));
  double theta_sup = 0.0, theta_outside = 0.0, half_ball = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec x = grid.point(k);
    const Mat X = s.fields(p0, x);
    const Mat t = s.eval_theta(p0, x);
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      for (Eigen::Index a = 0; a < X.rows(); ++a) fields.values[c++][k] = X(a, i);
    }
    for (Eigen::Index a = 0; a < t.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < t.cols(); ++b) fields.values[c++][k] = t(a, b);
    }
    const double mag = t.cwiseAbs().maxCoeff();
    const double r2 = fiber.h_norm_squared(x);
    theta_sup = std::max(theta_sup, mag);
    if (r2 >= 1.0) theta_outside = std::max(theta_outside, mag);
    if (r2 <= 0.25) half_ball = std::max(half_ball, (X - e).cwiseAbs().maxCoeff());
  }

  nlohmann::json summary = metadata(cfg, "build-theta");
  summary["base_dim"] = m;
  summary["fiber_dim"] = n;
  summary["rank"] = s.rank();
  summary["neighbourhood_radius"] = s.bundle().neighbourhood_radius;
  summary["theta_vanishes"] = theta_sup == 0.0;
  summary["theta_sup"] = theta_sup;
  summary["theta_sup_outside_unit_ball"] = theta_outside;
  summary["support_in_unit_ball"] = theta_outside == 0.0;
  summary["field_deviation_on_half_ball"] = half_ball;
  summary["fields_constant_on_half_ball"] = half_ball == 0.0;
  summary["base_point"] = {{"metric", matrix_json(fiber.metric())},
                           {"sections", matrix_json(e)},
                           {"theta", matrix_json(s.theta_matrix(p0))},
                           {"vertical_lift", matrix_json(s.vertical_lift(p0))}};

  const std::string dir = out_dir(cfg);
  lift.metadata = metadata(cfg, "build-theta");
  fields.metadata = metadata(cfg, "build-theta");
  fmt::print("wrote {}\n", lift.write(dir, "structure_base"));
  fmt::print("wrote {}\n", fields.write(dir, "structure_fiber"));
  write_json(dir + "/structure.json", summary);
  fmt::print("wrote {}/structure.json\n", dir);
  fmt::print("rank {} on a rank-{} bundle over a {}-dimensional base\n", s.rank(), n, m);
  fmt::print("theta {} (sup {:.6e})\n", theta_sup == 0.0 ? "vanishes identically" : "is non-zero",
             theta_sup);
  const bool supp = theta_outside == 0.0, coincide = half_ball == 0.0;
  fmt::print("support inside the closed unit h-ball: {}\n", supp ? "passed" : "FAILED");
  fmt::print("fields equal the vertical lifts on the half ball: {}\n", coincide ? "passed" : "FAILED");
  return supp && coincide ? kPass : kFailure;
}

int cmd_product(const RunConfig& cfg, const std::string& level) {
  if (level == "fiber") return product_fiber(cfg);
  if (level == "tm") return product_tm(cfg);
  if (level == "mxm") return product_mxm(cfg);
  if (level == "m") return product_m(cfg);
  throw ConfigError(fmt::format("unknown level '{}' (expected fiber, tm, mxm or m)", level));
}

int cmd_verify(const RunConfig& cfg, const std::vector<std::string>& suites) {
  const VerifyReport report = run_suites(cfg, suites);
  for (const CheckResult& c : report.checks) {
    fmt::print("{} {}/{}: {:.6e} (limit {:.3e})\n", c.passed ? "PASS" : "FAIL", c.suite, c.name,
               c.value, c.limit);
  }
  const std::string dir = out_dir(cfg);
  write_json(dir + "/verify_report.json", report.to_json(cfg));
  const auto failed = std::count_if(report.checks.begin(), report.checks.end(),
                                    [](const CheckResult& c) { return !c.passed; });
  fmt::print("{} checks, {} failed; report at {}/verify_report.json\n", report.checks.size(), failed,
             dir);
  return report.passed() ? kPass : kFailure;
}

int cmd_sweep(const RunConfig& cfg, const std::string& param, const std::vector<double>& values) {
  if (param != "hbar") throw ConfigError(fmt::format("cannot sweep '{}' (only hbar)", param));
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  for (double h : values) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw ConfigError("hbar values must be finite and non-negative");
  }
  const std::size_t n = cfg.count("fiber.dim");
  const auto vars = numbered("x", n);
  const Complex c = derive_semiclassical_constant();
  NormSettings ns;
  ns.truncation = cfg.count("grid.v");
  ns.q_samples = cfg.count("norms.q_samples");
  ns.basis = cfg.str("norms.basis") == "hermite" ? BasisKind::Hermite : BasisKind::Fourier;

  std::vector<double> commutator, deviation, semiclassical, seminorm, sup;
  for (double hbar : values) {
    const AdmissibleAction action = fiber_action(cfg, hbar);
    const ProductEngine engine(action, engine_settings(cfg));
    const Grid grid = fiber_grid(cfg, action);
    const GriddedFunction f = fiber_function(grid, config_expression(cfg, "functions.fiber.f", vars));
    const GriddedFunction g = fiber_function(grid, config_expression(cfg, "functions.fiber.g", vars));
    const GriddedFunction fg = engine.deformed_product(f, g), gf = engine.deformed_product(g, f);
    commutator.push_back(sup_difference(fg.values(), gf.values()));
    deviation.push_back(sup_difference(fg.values(), pointwise(f, g)));
    semiclassical.push_back(hbar > 0.0 ? semiclassical_residual(engine, f, g, c) : kNaN);
    seminorm.push_back(deformed_seminorm(action, f, grid.box(), ns).value);
    sup.push_back(f.sup_abs());
  }
  nlohmann::json orders = nlohmann::json::array();
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > 0.0 && values[k - 1] == 2.0 * values[k]) {
      orders.push_back(std::log2(semiclassical[k - 1] / semiclassical[k]));
    }
  }
  GridArtifact art;
  art.axes = {Axis{"hbar", values}};
  art.columns = {"commutator_sup", "pointwise_deviation", "semiclassical_residual", "seminorm_f", "sup_f"};
  art.values = {commutator, deviation, semiclassical, seminorm, sup};
  art.metadata = metadata(cfg, "sweep");
  art.metadata["semiclassical_constant"] = {c.real(), c.imag()};
  art.metadata["observed_orders"] = orders;
  art.metadata["seminorm_truncation"] = ns.truncation;
  fmt::print("wrote {}\n", art.write(out_dir(cfg), "sweep_hbar"));
  for (std::size_t k = 0; k < values.size(); ++k) {
    fmt::print("hbar {:g}: commutator {:.6e}, deviation {:.6e}, semiclassical {:.6e}, seminorm {:.6f} (sup {:.6f})\n",
               values[k], commutator[k], deviation[k], semiclassical[k], seminorm[k], sup[k]);
  }
  for (const auto& o : orders) fmt::print("observed order {:.4f}\n", o.get<double>());
  return kPass;
}

std::vector<std::pair<double, double>> parse_compactum(const std::string& text, std::size_t n) {
  std::vector<std::pair<double, double>> out;
  auto number = [&](const std::string& s) {
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    double v = 0.0;
    in >> v;
    if (!in || !(in >> std::ws).eof()) throw ConfigError(fmt::format("bad number '{}' in compactum", s));
    return v;
  };
  if (text.find(':') == std::string::npos) {
    const double h = number(text);
    if (!(h > 0.0)) throw ConfigError("compactum half-width must be positive");
    out.assign(n, {-h, h});
    return out;
  }
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw ConfigError(fmt::format("compactum axis '{}' needs lo:hi", part));
    const double lo = number(part.substr(0, colon)), hi = number(part.substr(colon + 1));
    if (!(hi > lo)) throw ConfigError(fmt::format("compactum axis '{}' is empty", part));
    out.emplace_back(lo, hi);
  }
  if (out.size() != n) throw ConfigError(fmt::format("compactum needs {} axes, got {}", n, out.size()));
  return out;
}

int cmd_seminorm(const RunConfig& cfg, const std::string& compactum, std::size_t basis) {
  const std::size_t n = cfg.count("fiber.dim");
  if (basis < 4 || (basis & (basis - 1)) != 0) throw ConfigError("--basis must be a power of two >= 4");
  const auto ranges = parse_compactum(compactum, n);
  Box L = Box::cube(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    L.lo[a] = ranges[a].first;
    L.hi[a] = ranges[a].second;
  }
  const AdmissibleAction action = fiber_action(cfg, cfg.number("theta.scale"));
  const Grid grid = fiber_grid(cfg, action);
  const GriddedFunction f = fiber_function(grid, config_expression(cfg, "functions.fiber.f", numbered("x", n)));
  NormSettings ns;
  ns.truncation = basis;
  ns.q_samples = cfg.count("norms.q_samples");
  ns.basis = cfg.str("norms.basis") == "hermite" ? BasisKind::Hermite : BasisKind::Fourier;
  std::vector<std::size_t> truncations;
  for (std::size_t t = std::max<std::size_t>(basis / 4, 4); t <= basis; t *= 2) truncations.push_back(t);
  const std::vector<SeminormEstimate> curve = truncation_curve(action, f, L, truncations, ns);
  const SeminormEstimate& top = curve.back();

  nlohmann::json j = metadata(cfg, "seminorm");
  j["compactum"] = {{"lo", L.lo}, {"hi", L.hi}};
  j["contains_support"] = L.contains(action.support_box());
  j["basis"] = cfg.str("norms.basis");
  j["estimate"] = top.value;
  j["sup_norm"] = sup_norm(f, L, true);
  nlohmann::json tc = nlohmann::json::array();
  for (std::size_t k = 0; k < curve.size(); ++k) {
    tc.push_back({{"truncation", truncations[k]},
                  {"value", curve[k].value},
                  {"operator_part", curve[k].operator_part},
                  {"fixed_part", curve[k].fixed_part},
                  {"basis_size", curve[k].basis_size},
                  {"sampled_points", curve[k].sampled_points},
                  {"gram_condition", curve[k].gram_condition},
                  {"converged", curve[k].converged}});
  }
  j["truncation_curve"] = tc;
  const std::string dir = out_dir(cfg);
  write_json(dir + "/seminorm.json", j);
  fmt::print("wrote {}/seminorm.json\n", dir);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    fmt::print("truncation {}: {:.6f} ({} points, {})\n", truncations[k], curve[k].value,
               curve[k].sampled_points, curve[k].converged ? "converged" : "not converged");
  }
  fmt::print("sup norm on the compactum {:.6f}\n", j["sup_norm"].get<double>());
  return kPass;
}

}  // namespace localstar::cli
