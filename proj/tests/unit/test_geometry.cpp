#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <localstar/geometry.hpp>

#include "fixtures.hpp"

using namespace localstar;
using localstar::testing::random_in_ball;

TEST(CutoffProfile, RejectsBadBreakpoints) {
  EXPECT_THROW(CutoffProfile(0.6, 0.5), DomainError);
  EXPECT_THROW(CutoffProfile(0.0, 0.5), DomainError);
  EXPECT_THROW(CutoffProfile(0.5, 1.0), DomainError);
}

TEST(CutoffProfile, PlateauAndSupport) {
  const CutoffProfile c;
  EXPECT_EQ(c.value(0.0), 1.0);
  EXPECT_EQ(c.value(c.plateau_end()), 1.0);
  EXPECT_EQ(c.value(c.support_end()), 0.0);
  EXPECT_EQ(c.value(0.9), 0.0);
  const double mid = 0.5 * (c.plateau_end() + c.support_end());
  EXPECT_GT(c.value(mid), 0.0);
  EXPECT_LT(c.value(mid), 1.0);
  EXPECT_THROW(c.value(-0.1), DomainError);
}

TEST(CutoffProfile, DerivativeMatchesDifference) {
  const CutoffProfile c;
  for (double t : {0.55, 0.6, 0.65, 0.7}) {
    const double h = 1e-6;
    EXPECT_NEAR(c.derivative(t), (c.value(t + h) - c.value(t - h)) / (2 * h), 1e-6);
  }
}

TEST(RadialProfile, InverseRoundTrip) {
  const RadialProfile p;
  for (double t : {0.0, 0.1, 0.5, 0.51, 0.6, 0.74, 0.75, 0.8, 0.95, 0.99}) {
    EXPECT_NEAR(p.inverse(p.value(t)), t, 1e-14) << "t = " << t;
  }
  EXPECT_EQ(p.inverse(std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_THROW(p.inverse(-1.0), DomainError);
  EXPECT_THROW(p.value(1.0), DomainError);
}

TEST(RadialProfile, StrictlyIncreasing) {
  const RadialProfile p;
  EXPECT_GT(p.min_observed_derivative(), 0.0);
  double prev = -1.0;
  for (int k = 0; k < 1000; ++k) {
    const double v = p.value(k / 1000.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(RadialDiffeo, IdentityOnHalfBall) {
  const RadialDiffeo psi(3);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vec x = random_in_ball(3, 0.5, rng);
    EXPECT_EQ((psi.apply(x) - x).norm(), 0.0);
    EXPECT_EQ((psi.apply_inverse(x) - x).norm(), 0.0);
  }
}

TEST(RadialDiffeo, RoundTripAndEquivariance) {
  const RadialDiffeo psi(2);
  std::mt19937_64 rng(2);
  const double c = std::cos(0.7), s = std::sin(0.7);
  Mat q(2, 2);
  q << c, -s, s, c;
  for (int k = 0; k < 500; ++k) {
    const Vec x = random_in_ball(2, 0.95, rng);
    const Vec y = psi.apply(x);
    EXPECT_LT((psi.apply_inverse(y) - x).norm(), 1e-13);
    EXPECT_LT((psi.apply(q * x) - q * y).norm() / std::max(1.0, y.norm()), 1e-12);
  }
}

TEST(RadialDiffeo, JacobianAndFrameFields) {
  const RadialDiffeo psi(2);
  Vec x(2);
  x << 0.45, 0.35;
  const Mat j = psi.jacobian(x);
  const double h = 1e-7;
  for (int a = 0; a < 2; ++a) {
    Vec d = Vec::Zero(2);
    d[a] = h;
    const Vec col = (psi.apply(x + d) - psi.apply(x - d)) / (2 * h);
    EXPECT_LT((col - j.col(a)).norm(), 1e-6);
    Vec e = Vec::Zero(2);
    e[a] = 1.0;
    EXPECT_LT((j * psi.frame_field(static_cast<std::size_t>(a), x) - e).norm(), 1e-12);
  }
  Vec out(2);
  out << 1.0, 0.2;
  EXPECT_EQ(psi.frame_field(0, out).norm(), 0.0);
  EXPECT_THROW(psi.apply(out), DomainError);
}
