// Acceptance run: one line per criterion with the measured values, the
// pinned tolerances and the wall time against its limit. Pass criterion
// numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include <localstar/geometry.hpp>
#include <localstar/norms.hpp>
#include <localstar/ode.hpp>
#include <localstar/spacetime.hpp>
#include <localstar/starproduct.hpp>

#include "fixtures.hpp"

using namespace localstar;
using localstar::testing::add;
using localstar::testing::covering_grid;
using localstar::testing::outside_bump;
using localstar::testing::pointwise_deviation;
using localstar::testing::random_action;
using localstar::testing::random_bump;
using localstar::testing::random_in_ball;
using localstar::testing::standard_action;
using localstar::testing::symplectic;

namespace {

constexpr double kRoundTripTol = 1e-10;
constexpr double kEquivarianceTol = 1e-10;
constexpr double kFlowTol = 1e-6;
constexpr double kOracleTol = 1e-5;
constexpr double kDeltaTol = 1e-6;
constexpr double kAssociativityTol = 1e-8;
constexpr double kInvolutionTol = 1e-10;
constexpr double kTowerFlatTol = 1e-6;
constexpr double kTowerHyperbolicTol = 1e-5;
constexpr double kOrderMin = 1.9;
constexpr double kSupTol = 0.02;
constexpr double kEstimatorTol = 1e-3;

struct Outcome {
  bool passed = true;
  std::vector<std::string> notes;

  void check(bool ok, std::string note) {
    passed = passed && ok;
    notes.push_back(fmt::format("{}{}", ok ? "" : "[x] ", note));
  }
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0: no limit
  std::function<Outcome(std::mt19937_64&)> run;
};

std::string sci(double v) { return fmt::format("{:.3e}", v); }

Mat random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return Eigen::HouseholderQR<Mat>(a).householderQ();
}

std::vector<Vec> points_near_centre(const AdmissibleAction& action, std::size_t count,
                                    std::mt19937_64& rng) {
  const Mat lt_inv = action.fiber().cholesky().transpose().inverse();
  std::vector<Vec> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(lt_inv * random_in_ball(2, 0.12, rng));
  return out;
}

// ---------------------------------------------------------------------------

Outcome psi_criterion(std::mt19937_64& rng) {
  Outcome o;
  for (std::size_t n : {2u, 3u}) {
    const RadialDiffeo psi(n);
    const Mat q = random_orthogonal(n, rng);
    double roundtrip = 0.0, equivariance = 0.0;
    for (int k = 0; k < 10000; ++k) {
      // psi overflows in double past |x| ~ 0.9986
      const Vec x = random_in_ball(n, 0.998, rng);
      roundtrip = std::max(roundtrip, (psi.apply_inverse(psi.apply(x)) - x).norm());
      const Vec w = random_in_ball(n, 0.95, rng);
      const Vec y = psi.apply(w);
      equivariance = std::max(equivariance, (psi.apply(q * w) - q * y).norm() / std::max(1.0, y.norm()));
    }
    o.check(roundtrip <= kRoundTripTol, fmt::format("n={} round-trip {} <= {}", n, sci(roundtrip), kRoundTripTol));
    o.check(equivariance <= kEquivarianceTol,
            fmt::format("n={} equivariance {} <= {}", n, sci(equivariance), kEquivarianceTol));
  }
  return o;
}

Outcome flow_criterion(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> time(-0.5, 0.5);
  double group = 0.0, commute = 0.0, ode = 0.0;
  for (int k = 0; k < 50; ++k) {
    const AdmissibleAction action = k % 5 == 0 ? standard_action(0.1) : random_action(0.1, rng);
    const Mat lt_inv = action.fiber().cholesky().transpose().inverse();
    std::uniform_int_distribution<std::size_t> pick(0, action.rank() - 1);
    const Vec x = lt_inv * random_in_ball(action.fiber_dim(), 0.9, rng);
    const double s = time(rng), t = time(rng);
    const std::size_t i = pick(rng), j = pick(rng);
    const Vec direct = action.flow(i, s + t, x);
    group = std::max(group, (action.flow(i, s, action.flow(i, t, x)) - direct).norm() / direct.norm());
    const Vec ij = action.flow(i, s, action.flow(j, t, x));
    const Vec ji = action.flow(j, t, action.flow(i, s, x));
    commute = std::max(commute, (ij - ji).norm() / ij.norm());
    const Vec ref = integrate_flow(action, i, t, x);
    ode = std::max(ode, (action.flow(i, t, x) - ref).norm() / ref.norm());
  }
  Outcome o;
  o.check(group <= kFlowTol, fmt::format("group law {} <= {}", sci(group), kFlowTol));
  o.check(commute <= kFlowTol, fmt::format("commutation {} <= {}", sci(commute), kFlowTol));
  o.check(ode <= kFlowTol, fmt::format("ode {} <= {}", sci(ode), kFlowTol));
  return o;
}

Outcome oracle_criterion(std::mt19937_64& rng) {
  // sheared metrics need finer quadrature than the default cap allows
  OracleSettings os;
  os.max_points_per_axis = 2048;
  double worst = 0.0;
  std::size_t points = 0;
  for (int k = 0; k < 20; ++k) {
    const AdmissibleAction action = k % 2 == 0 ? standard_action(0.1) : random_action(0.1, rng);
    const ProductEngine engine(action);
    const Grid grid = covering_grid(action, 128);
    const GriddedFunction f = random_bump(grid, action, rng), g = random_bump(grid, action, rng);
    const GriddedFunction fg = engine.deformed_product(f, g);
    const std::vector<Vec> pts = points_near_centre(action, 5, rng);
    const OracleResult ref = oscillatory_quadrature(action, f, g, pts, os);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      worst = std::max(worst, std::abs(fg(pts[i]) - ref.values[i]) / fg.sup_abs());
    }
    points += pts.size();
  }
  Outcome o;
  o.check(worst <= kOracleTol,
          fmt::format("relative sup {} <= {} over 20 pairs, {} points, grid 128^2", sci(worst), kOracleTol, points));
  return o;
}

Outcome support_criterion(std::mt19937_64& rng) {
  int failures = 0;
  double largest = 0.0, fixed = 0.0;
  for (int k = 0; k < 50; ++k) {
    const AdmissibleAction action = k % 2 == 0 ? standard_action(0.1) : random_action(0.1, rng);
    const ProductEngine engine(action);
    const Grid grid = covering_grid(action, 128);
    const GriddedFunction out_f = outside_bump(grid, action, rng), out_g = outside_bump(grid, action, rng);
    const GriddedFunction f = add(random_bump(grid, action, rng), out_f);
    const GriddedFunction g = add(random_bump(grid, action, rng), out_g);
    const InclusionReport r = support_inclusion_check(engine, f, g);
    if (!r.holds) ++failures;
    largest = std::max(largest, r.largest_offending);
    fixed = std::max({fixed, pointwise_deviation(engine.deformed_product(out_f, g), out_f, g),
                      pointwise_deviation(engine.deformed_product(g, out_f), g, out_f)});
  }
  Outcome o;
  o.check(failures == 0, fmt::format("inclusion failures {} of 50 (largest offending {})", failures, sci(largest)));
  o.check(fixed == 0.0, fmt::format("fixed-function deviation {} == 0", sci(fixed)));
  return o;
}

Outcome delta_criterion(std::mt19937_64& rng) {
  TowerSettings ts;
  ts.frame = FrameKind::Vanishing;
  ts.vanishing_point = Vec::Zero(2);
  ts.vanishing_point << 0.2, 0.0;
  const TangentTower tower(BaseGeometry::flat(2), ts);
  const auto engine = tower.engine_at(ts.vanishing_point);
  const Grid grid = tower.fiber_grid(ts.vanishing_point);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const GriddedFunction f = random_bump(grid, engine->action(), rng);
    const GriddedFunction g = random_bump(grid, engine->action(), rng);
    worst = std::max(worst, pointwise_deviation(engine->deformed_product(f, g), f, g));
  }
  Outcome o;
  o.check(worst <= kDeltaTol, fmt::format("delta-state residual {} <= {} over 10 pairs", sci(worst), kDeltaTol));
  return o;
}

Outcome algebra_criterion(std::mt19937_64& rng) {
  double assoc = 0.0, inv = 0.0;
  for (int k = 0; k < 10; ++k) {
    const AdmissibleAction action = k % 2 == 0 ? standard_action(0.1) : random_action(0.1, rng);
    const ProductEngine engine(action);
    const Grid grid = covering_grid(action, 128);
    const GriddedFunction f = random_bump(grid, action, rng), g = random_bump(grid, action, rng),
                          h = random_bump(grid, action, rng);
    assoc = std::max(assoc, associativity_residual(engine, f, g, h));
    inv = std::max(inv, involution_residual(engine, f, g));
  }
  Outcome o;
  o.check(assoc <= kAssociativityTol, fmt::format("associativity {} <= {} (10 triples)", sci(assoc), kAssociativityTol));
  o.check(inv <= kInvolutionTol, fmt::format("involution {} <= {} (10 pairs)", sci(inv), kInvolutionTol));
  return o;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct TowerOutcome {
  double phi = 0.0, ip = 0.0, expp = 0.0, outside = 0.0;
  std::size_t outside_samples = 0;
};

TowerOutcome tower_pairs(const BaseGeometry& geom, double radius, double width, std::mt19937_64& rng) {
  TowerSettings ts;
  ts.fiber_radius = radius;
  const TangentTower tower(geom, ts);
  std::uniform_real_distribution<double> phase(-3.0, 3.0);
  const double s2 = 2.0 * width * width;
  TowerOutcome r;
  for (int k = 0; k < 10; ++k) {
    const Vec p0 = random_in_ball(2, 0.2, rng);
    const Vec d = random_in_ball(2, 0.02, rng), e = random_in_ball(2, 0.02, rng);
    const double kf = phase(rng), kg = phase(rng);
    const MxMFunction f = [=](const Vec& a, const Vec& b) {
      return std::exp(-((a - p0 + d).squaredNorm() + (b - p0 - d).squaredNorm()) / s2) * std::polar(1.0, kf * a[0]);
    };
    const MxMFunction g = [=](const Vec& a, const Vec& b) {
      return std::exp(-((a - p0 + e).squaredNorm() + (b - p0 - e).squaredNorm()) / s2) * std::polar(1.0, kg * b[1]);
    };
    r.phi = std::max(r.phi, tower.phi_homomorphism_residual(f, g, p0));
    r.ip = std::max(r.ip, tower.homomorphism_residual_ip(tower.pullback_phi(f), tower.pullback_phi(g), p0));
    // each M function also carries a bump far from p0, outside the chart
    const Vec far = v2(0.6, 0.5) + random_in_ball(2, 0.05, rng);
    const MFunction mf = [=](const Vec& q) {
      return std::exp(-(q - p0 - d).squaredNorm() / s2) * std::polar(1.0, kf * q[0]) +
             std::exp(-(q - far).squaredNorm() / s2);
    };
    const MFunction mg = [=](const Vec& q) {
      return std::exp(-(q - p0 - e).squaredNorm() / s2) * std::polar(1.0, kg * q[1]) +
             std::exp(-(q - far - v2(0.0, 0.04)).squaredNorm() / s2) * Complex(0.0, 1.0);
    };
    r.expp = std::max(r.expp, tower.residual_expp(p0, mf, mg));
    std::vector<Vec> samples;
    for (int i = 0; i < 41; ++i) {
      for (int j = 0; j < 41; ++j) {
        const Vec q = v2(-0.9 + 0.045 * i, -0.9 + 0.045 * j);
        if (geom.contains(q) && !tower.in_chart(p0, q)) samples.push_back(q);
      }
    }
    r.outside = std::max(r.outside, tower.commutator_outside(p0, mf, mg, samples));
    r.outside_samples += samples.size();
  }
  return r;
}

Outcome tower_criterion(std::mt19937_64& rng) {
  Outcome o;
  const TowerOutcome flat = tower_pairs(BaseGeometry::flat(2), 0.5, 0.04, rng);
  const TowerOutcome hyp = tower_pairs(BaseGeometry::hyperbolic_disk(), 0.8, 0.03, rng);
  for (const auto& [label, r, tol] : {std::tuple{"flat", flat, kTowerFlatTol},
                                      std::tuple{"hyperbolic", hyp, kTowerHyperbolicTol}}) {
    o.check(r.phi <= tol, fmt::format("{} Phi* {} <= {}", label, sci(r.phi), tol));
    o.check(r.ip <= tol, fmt::format("{} i_p* {} <= {}", label, sci(r.ip), tol));
    o.check(r.expp <= tol, fmt::format("{} exp_p* {} <= {}", label, sci(r.expp), tol));
    o.check(r.outside == 0.0, fmt::format("{} commutator outside chart {} == 0 ({} samples)", label,
                                          sci(r.outside), r.outside_samples));
  }
  return o;
}

Outcome semiclassical_criterion(std::mt19937_64&) {
  const Complex c = derive_semiclassical_constant();
  // only hbar / width^2 matters: a wide fibre keeps the bumps resolved
  const double scale = 8.0, width = 0.6;
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
    const ProductEngine engine(AdmissibleAction(fiber, Mat::Identity(2, 2), symplectic(), hbar));
    residuals.push_back(semiclassical_residual(engine, f, g, c));
  }
  double order = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < residuals.size(); ++k) {
    order = std::min(order, std::log2(residuals[k - 1] / residuals[k]));
  }
  Outcome o;
  o.check(order >= kOrderMin, fmt::format("order {:.4f} >= {} (residuals {}, {}, {}; c = {:.10f}{:+.10f}i)", order,
                                          kOrderMin, sci(residuals[0]), sci(residuals[1]), sci(residuals[2]),
                                          c.real(), c.imag()));
  return o;
}

Outcome norms_criterion(std::mt19937_64& rng) {
  const AdmissibleAction action = standard_action(0.1);
  const AdmissibleAction classical(action.fiber(), action.sections(), action.theta(), 0.0);
  const Grid grid = covering_grid(action, 128);
  const Box L = grid.box();
  NormSettings ns;
  ns.q_samples = 3;
  Outcome o;

  const GriddedFunction plateau = GriddedFunction::from_closed_form(grid, [](const double* x) {
    const double s = (std::hypot(x[0] - 0.05, x[1] + 0.03) - 0.08) / 0.12;
    const double step = s <= 0.0 ? 0.0 : s >= 1.0 ? 1.0 : 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
    return (1.0 - step) * Complex(0.8, 0.3);
  });
  ns.truncation = 64;
  const double sup = plateau.sup_abs();
  const double classical_norm = deformed_seminorm(classical, plateau, L, ns).value;
  const double rel = std::abs(classical_norm - sup) / sup;
  o.check(rel <= kSupTol, fmt::format("Theta=0 seminorm {:.6f} vs sup {:.6f}: {} <= {}", classical_norm, sup,
                                      sci(rel), kSupTol));

  const GriddedFunction a = GriddedFunction::from_closed_form(grid, [](const double* x) {
    const double r2 = (x[0] - 0.05) * (x[0] - 0.05) + x[1] * x[1];
    return std::exp(-r2 / (2.0 * 0.06 * 0.06)) * std::polar(1.0, 3.0 * x[0]);
  });
  const ProductEngine engine(action);
  std::vector<double> residuals;
  for (std::size_t t : {16u, 32u, 64u}) {
    ns.truncation = t;
    residuals.push_back(cstar_identity_residual(engine, a, L, ns));
  }
  o.check(residuals[1] < residuals[0] && residuals[2] < residuals[1],
          fmt::format("C* residual {} > {} > {} at 16, 32, 64", sci(residuals[0]), sci(residuals[1]),
                      sci(residuals[2])));

  ns.truncation = 32;
  Vec v(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  v << u(rng), u(rng);
  const double before = deformed_seminorm(action, a, L, ns).value;
  const double after = deformed_seminorm(action, action.act(v, a), L, ns).value;
  const bool covers = L.contains(action.support_box());
  o.check(covers, "L contains K");
  o.check(std::abs(after - before) <= kEstimatorTol,
          fmt::format("isometry {} <= {} at truncation 32", sci(std::abs(after - before)), kEstimatorTol));
  return o;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism_criterion(std::mt19937_64&) {
  const auto root = std::filesystem::temp_directory_path() /
                    fmt::format("localstar_acceptance_{}", std::chrono::steady_clock::now().time_since_epoch().count());
  std::filesystem::create_directories(root);
  std::vector<std::string> reports;
  Outcome o;
  for (const char* run : {"a", "b"}) {
    const auto dir = root / run;
    const std::string cmd =
        fmt::format("\"{}\" --seed 20261018 --out \"{}\" verify > \"{}.log\" 2>&1", LOCALSTAR_CLI_PATH,
                    dir.string(), dir.string());
    const int status = std::system(cmd.c_str());
    o.check(status != -1 && std::filesystem::exists(dir / "verify_report.json"),
            fmt::format("run {} wrote a report", run));
    reports.push_back(read_file(dir / "verify_report.json"));
  }
  o.check(!reports[0].empty() && reports[0] == reports[1],
          fmt::format("reports identical ({} bytes)", reports[0].size()));
  std::error_code ec;
  std::filesystem::remove_all(root, ec);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<Criterion> criteria = {
      {1, "psi round-trip and equivariance", 5, psi_criterion},
      {2, "flow laws", 30, flow_criterion},
      {3, "engine vs oscillatory quadrature", 600, oracle_criterion},
      {4, "support inclusion and fixed functions", 120, support_criterion},
      {5, "delta state over a vanishing point", 120, delta_criterion},
      {6, "associativity and involution", 300, algebra_criterion},
      {7, "tower homomorphisms and locality", 600, tower_criterion},
      {8, "semiclassical order", 300, semiclassical_criterion},
      {9, "deformed seminorms", 600, norms_criterion},
      {10, "verify determinism", 0, determinism_criterion},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(c.id));
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(rng);
    } catch (const std::exception& e) {
      o.check(false, fmt::format("threw: {}", e.what()));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_seconds == 0 || seconds < c.limit_seconds;
    const bool ok = o.passed && in_time;
    if (!ok) ++failed;
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    const std::string timing = c.limit_seconds == 0 ? fmt::format("{:.1f} s", seconds)
                                                    : fmt::format("{:.1f} s < {:.0f} s{}", seconds, c.limit_seconds,
                                                                  in_time ? "" : " [x]");
    std::printf("%s [%d] %s: %s | %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), notes.c_str(), timing.c_str());
  }
  std::printf("%s\n", failed == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failed).c_str());
  return failed == 0 ? 0 : 1;
}
