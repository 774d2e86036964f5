#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <localstar/norms.hpp>

#include "fixtures.hpp"

using namespace localstar;
using namespace localstar::testing;

namespace {

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
}

GriddedFunction plateau(const Grid& grid) {
  return GriddedFunction::from_closed_form(grid, [](const double* x) {
    const double r = std::hypot(x[0] - 0.05, x[1] + 0.03);
    return (1.0 - smooth_step((r - 0.08) / 0.12)) * Complex(0.8, 0.3);
  });
}

}  // namespace

TEST(Norms, SymbolAtFixedPointIsConstant) {
  const AdmissibleAction act = standard_action(0.1);
  const Grid grid = covering_grid(act, 64);
  std::mt19937_64 rng(40);
  const GriddedFunction f = random_bump(grid, act, rng);
  Vec q(2);
  q << 1.1, 0.0;
  const Evaluator s = orbit_symbol(act, f, q);
  const double v[2] = {0.3, -0.2};
  EXPECT_EQ(s(v), f(q));
}

TEST(Norms, ClassicalLimitRecoversSup) {
  const AdmissibleAction act = standard_action(0.0);
  const Grid grid = covering_grid(act, 121);
  const GriddedFunction a = plateau(grid);
  NormSettings ns;
  ns.truncation = 16;
  const SeminormEstimate e = deformed_seminorm(act, a, grid.box(), ns);
  EXPECT_NEAR(e.value, a.sup_abs(), 0.02 * a.sup_abs());
  EXPECT_LE(e.value, a.sup_abs() * (1 + 1e-12));
}

TEST(Norms, SelfAdjointForRealSymbols) {
  const AdmissibleAction act = standard_action(0.1);
  const Grid grid = covering_grid(act, 64);
  const GriddedFunction a = GriddedFunction::from_closed_form(grid, [](const double* x) {
    return Complex(std::exp(-(x[0] * x[0] + x[1] * x[1]) / 0.0072), 0.0);
  });
  NormSettings ns;
  ns.truncation = 8;
  const CMat m = left_operator_matrix(act, a, Vec::Zero(2), ns);
  EXPECT_LT((m - m.adjoint()).norm() / m.norm(), 1e-12);
}

TEST(Norms, FixedPartAndRestriction) {
  const AdmissibleAction act = standard_action(0.1);
  const Grid grid = covering_grid(act, 64);
  const GriddedFunction c = GriddedFunction::constant(grid, Complex(0.0, 2.0));
  NormSettings ns;
  ns.truncation = 8;
  const SeminormEstimate e = deformed_seminorm(act, c, grid.box(), ns);
  EXPECT_NEAR(e.value, 2.0, 1e-12);
  EXPECT_EQ(restriction_compatibility(act, c, grid.box(), grid.box(), ns), 0.0);
}

TEST(Norms, HermiteAgreesWithFourierAtZeroTheta) {
  const AdmissibleAction act = standard_action(0.0);
  const Grid grid = covering_grid(act, 121);
  const GriddedFunction a = plateau(grid);
  NormSettings ns;
  ns.truncation = 16;
  const double fourier = deformed_seminorm(act, a, grid.box(), ns).value;
  ns.basis = BasisKind::Hermite;
  ns.truncation = 8;
  const SeminormEstimate h = deformed_seminorm(act, a, grid.box(), ns);
  EXPECT_LE(h.value, a.sup_abs() * (1 + 1e-9));
  EXPECT_GT(h.value, 0.5 * fourier);
}

TEST(Norms, RequiresInvertibleDirections) {
  const AdmissibleAction act(FiberGeometry(Mat::Identity(2, 2), RadialDiffeo(2)), Mat::Identity(2, 1),
                             Mat::Zero(1, 1), 0.1);
  const Grid grid = covering_grid(act, 64);
  std::mt19937_64 rng(41);
  EXPECT_THROW(deformed_seminorm(act, random_bump(grid, act, rng), grid.box()), DomainError);
}
