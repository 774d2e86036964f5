#include <cmath>

#include <gtest/gtest.h>

#include <localstar/ode.hpp>

#include "fixtures.hpp"

using namespace localstar;

TEST(Ode, HarmonicOscillator) {
  auto field = [](const Vec& x) {
    Vec d(2);
    d << x[1], -x[0];
    return d;
  };
  Vec x0(2);
  x0 << 1.0, 0.0;
  const Vec x = integrate_autonomous(field, 2.0, x0);
  EXPECT_NEAR(x[0], std::cos(2.0), 1e-11);
  EXPECT_NEAR(x[1], -std::sin(2.0), 1e-11);
  const Vec back = integrate_autonomous(field, -2.0, x);
  EXPECT_LT((back - x0).norm(), 1e-10);
}

TEST(Ode, AgreesWithConjugatedFlow) {
  const AdmissibleAction act = localstar::testing::standard_action(0.1);
  Vec x(2);
  x << 0.55, -0.3;
  for (double t : {-0.4, 0.2, 0.7}) {
    const Vec a = act.flow(0, t, x), b = integrate_flow(act, 0, t, x);
    EXPECT_LT((a - b).norm() / b.norm(), 1e-9);
  }
}
