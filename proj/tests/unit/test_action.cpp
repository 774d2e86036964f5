#include <random>

#include <gtest/gtest.h>

#include <localstar/action.hpp>

#include "fixtures.hpp"

using namespace localstar;
using namespace localstar::testing;

TEST(Action, IdentityOutsideBall) {
  const AdmissibleAction act = standard_action(0.1);
  Vec x(2);
  x << 0.8, 0.7;
  EXPECT_EQ((act.flow(0, 0.3, x) - x).norm(), 0.0);
  EXPECT_EQ(act.field(1, x).norm(), 0.0);
}

TEST(Action, GroupLawAndCommutation) {
  std::mt19937_64 rng(10);
  const AdmissibleAction act = random_action(0.1, rng);
  const Mat lt_inv = act.fiber().cholesky().transpose().inverse();
  for (int k = 0; k < 50; ++k) {
    const Vec x = lt_inv * random_in_ball(2, 0.9, rng);
    const Vec ab = act.flow(0, 0.2, act.flow(0, -0.5, x));
    EXPECT_LT((ab - act.flow(0, -0.3, x)).norm(), 1e-12);
    const Vec c1 = act.flow(0, 0.3, act.flow(1, 0.4, x));
    const Vec c2 = act.flow(1, 0.4, act.flow(0, 0.3, x));
    EXPECT_LT((c1 - c2).norm(), 1e-12);
    Vec v(2);
    v << 0.3, 0.4;
    EXPECT_LT((act.orbit(v, x) - act.orbit_direct(v, x)).norm(), 1e-12);
  }
}

TEST(Action, ActComposes) {
  const AdmissibleAction act = standard_action(0.1);
  std::mt19937_64 rng(11);
  const Grid grid = covering_grid(act, 64);
  const GriddedFunction f = random_bump(grid, act, rng);
  Vec v(2), w(2);
  v << 0.2, -0.1;
  w << -0.05, 0.3;
  const GriddedFunction a = act.act(v, act.act(w, f));
  const GriddedFunction b = act.act(v + w, f);
  EXPECT_LT(max_abs_difference(a, b), 1e-12);
}

TEST(Action, FixedFunctions) {
  const AdmissibleAction act = standard_action(0.1);
  std::mt19937_64 rng(12);
  const Grid grid = covering_grid(act, 128);
  EXPECT_TRUE(act.is_fixed_function(GriddedFunction::constant(grid, 2.0)));
  // diagonal placement: the support box clips K but no sample does
  const GriddedFunction diag = GriddedFunction::from_closed_form(grid, [](const double* x) {
    const double dx = x[0] - 0.955, dy = x[1] - 0.955;
    return Complex(std::exp(-(dx * dx + dy * dy) / (2 * 0.035 * 0.035)), 0.0);
  });
  EXPECT_TRUE(act.is_fixed_function(diag));
  EXPECT_FALSE(act.is_fixed_function(random_bump(grid, act, rng)));
  const AdmissibleAction trivial(act.fiber(), Mat::Zero(2, 2), symplectic(), 0.1);
  EXPECT_TRUE(trivial.trivial());
  EXPECT_TRUE(trivial.is_fixed_function(random_bump(grid, act, rng)));
}

TEST(Action, CofinalIsometryOfSupNorm) {
  const AdmissibleAction act = standard_action(0.1);
  std::mt19937_64 rng(13);
  const Grid grid = covering_grid(act, 128);
  const GriddedFunction f = random_bump(grid, act, rng);
  Vec v(2);
  v << 0.4, -0.25;
  const IsometryCheck c = cofinal_isometry_residual(act, grid.box(), f, v);
  EXPECT_TRUE(c.claimed);
  EXPECT_LT(c.residual, 1e-8);
  EXPECT_FALSE(cofinal_isometry_residual(act, Box::cube(2, 0.5), f, v).claimed);
}

TEST(Action, RejectsNonSkewTheta) {
  Mat t(2, 2);
  t << 0.0, 1.0, 0.5, 0.0;
  EXPECT_THROW(AdmissibleAction(FiberGeometry(Mat::Identity(2, 2), RadialDiffeo(2)), Mat::Identity(2, 2), t, 0.1),
               DomainError);
}
