#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <localstar/starproduct.hpp>

#include "fixtures.hpp"

using namespace localstar;
using namespace localstar::testing;

class StarProduct : public ::testing::Test {
 protected:
  AdmissibleAction act = standard_action(0.1);
  ProductEngine engine{act};
  Grid grid = covering_grid(act, 128);
  std::mt19937_64 rng{20};
};

TEST_F(StarProduct, ZeroThetaIsPointwise) {
  const ProductEngine flat(standard_action(0.0));
  const GriddedFunction f = random_bump(grid, act, rng), g = random_bump(grid, act, rng);
  EXPECT_EQ(pointwise_deviation(flat.deformed_product(f, g), f, g), 0.0);
  EXPECT_EQ(flat.core(), nullptr);
}

TEST_F(StarProduct, FixedAndUnitArePointwise) {
  const GriddedFunction f = random_bump(grid, act, rng), out = outside_bump(grid, act, rng);
  const GriddedFunction one = GriddedFunction::constant(grid, 1.0);
  EXPECT_EQ(pointwise_deviation(engine.deformed_product(f, out), f, out), 0.0);
  EXPECT_EQ(pointwise_deviation(engine.deformed_product(out, f), out, f), 0.0);
  EXPECT_EQ(pointwise_deviation(engine.deformed_product(one, f), one, f), 0.0);
}

TEST_F(StarProduct, NoncommutativeInsideK) {
  const GriddedFunction f = random_bump(grid, act, rng), g = random_bump(grid, act, rng);
  const GriddedFunction fg = engine.deformed_product(f, g), gf = engine.deformed_product(g, f);
  EXPECT_GT(max_abs_difference(fg, gf), 1e-3);
}

TEST_F(StarProduct, AssociativeAndInvolutive) {
  const GriddedFunction f = random_bump(grid, act, rng), g = random_bump(grid, act, rng),
                        h = random_bump(grid, act, rng);
  EXPECT_LT(associativity_residual(engine, f, g, h), 1e-10);
  EXPECT_LT(involution_residual(engine, f, g), 1e-12);
}

TEST_F(StarProduct, SupportInclusion) {
  const GriddedFunction f = add(random_bump(grid, act, rng), outside_bump(grid, act, rng));
  const GriddedFunction g = add(random_bump(grid, act, rng), outside_bump(grid, act, rng));
  const InclusionReport r = support_inclusion_check(engine, f, g);
  EXPECT_TRUE(r.holds) << r.largest_offending;
}

TEST_F(StarProduct, AgreesWithQuadratureAtAPoint) {
  const GriddedFunction f = random_bump(grid, act, rng), g = random_bump(grid, act, rng);
  const GriddedFunction fg = engine.deformed_product(f, g);
  Vec x(2);
  x << 0.03, -0.02;
  const OracleResult ref = oscillatory_quadrature(act, f, g, {x});
  EXPECT_LT(std::abs(ref.values[0] - fg(x)) / fg.sup_abs(), 1e-6);
}

TEST_F(StarProduct, WideInputOverflowsTheMargin) {
  const GriddedFunction wide = GriddedFunction::from_closed_form(grid, [](const double* x) {
    const double dx = x[0] - 0.1;
    return Complex(std::exp(-(dx * dx + x[1] * x[1]) / (2 * 0.3 * 0.3)), 0.0);
  });
  const GriddedFunction g = random_bump(grid, act, rng);
  try {
    engine.deformed_product(wide, g);
    FAIL() << "expected a margin overflow";
  } catch (const MarginOverflow& e) {
    EXPECT_GT(e.observed_edge_ratio(), engine.settings().edge_tolerance);
  }
}

TEST_F(StarProduct, DeltaStateWhereFieldsVanish) {
  const AdmissibleAction trivial(act.fiber(), Mat::Zero(2, 2), symplectic(), 0.1);
  const ProductEngine e(trivial);
  const GriddedFunction f = random_bump(grid, act, rng), g = random_bump(grid, act, rng);
  Vec q(2);
  q << 0.02, 0.01;
  EXPECT_EQ(delta_state_residual(e, q, f, g), 0.0);
  EXPECT_THROW(delta_state_residual(engine, q, f, g), DomainError);
}

TEST(Semiclassical, ConstantFromPlaneWaves) {
  const Complex c = derive_semiclassical_constant();
  EXPECT_LT(std::abs(c - Complex(0.0, 1.0 / kPi)), 1e-9);
}
