#include <gtest/gtest.h>

#include <localstar/poisson.hpp>

#include "fixtures.hpp"

using namespace localstar;

namespace {

std::vector<Vec> samples() {
  std::vector<Vec> out;
  for (double p : {-0.5, 0.0, 0.5}) out.push_back(Vec::Constant(1, p));
  return out;
}

BundleSpec bundle(const Mat& h) { return BundleSpec::trivial(1, 2, h); }

}  // namespace

TEST(BundleSpec, ChecksMetricAndRadius) {
  Mat bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(bundle(bad).check(samples()), InvariantError);
  BundleSpec b = bundle(Mat::Identity(2, 2));
  b.neighbourhood_radius = 1.0;
  EXPECT_THROW(b.check(samples()), InvariantError);
  EXPECT_NO_THROW(bundle(Mat::Identity(2, 2)).check(samples()));
}

TEST(DualBasis, CanonicalReconstructs) {
  EXPECT_EQ(DualBasisSpec::canonical(3).reconstruction_residual(samples()), 0.0);
}

TEST(BuildTheta, RejectsNonSkewGamma) {
  MatrixField gamma = [](const Vec&) {
    Mat g(2, 2);
    g << 0.0, 1.0, 1.0, 0.0;
    return g;
  };
  EXPECT_THROW(build_theta(gamma, DualBasisSpec::canonical(2), bundle(Mat::Identity(2, 2)), samples()),
               DomainError);
}

TEST(BuildTheta, ZeroGammaGivesZeroBivector) {
  MatrixField gamma = [](const Vec&) { return Mat::Zero(2, 2).eval(); };
  const AdmissibleStructure s =
      build_theta(gamma, DualBasisSpec::canonical(2), bundle(Mat::Identity(2, 2)), samples());
  Vec x(2);
  x << 0.3, -0.6;
  EXPECT_EQ(s.eval_theta(Vec::Zero(1), x).norm(), 0.0);
}

TEST(BuildTheta, FieldsAreLiftsOnHalfBallAndVanishOutside) {
  Mat h(2, 2);
  h << 2.0, 0.3, 0.3, 1.0;
  MatrixField gamma = [](const Vec& p) { return Mat((1.0 + p[0] * p[0]) * localstar::testing::symplectic()); };
  DualBasisSpec basis = DualBasisSpec::canonical(2);
  const AdmissibleStructure s = build_theta(gamma, basis, bundle(h), samples());
  const Vec p = Vec::Constant(1, 0.5);
  const FiberGeometry fiber = s.fiber(p);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Vec x = Vec::Random(2) * 1.5;
    const double r2 = fiber.h_norm_squared(x);
    const Mat X = s.fields(p, x);
    if (r2 <= 0.25) EXPECT_EQ((X - s.sections(p)).norm(), 0.0);
    if (r2 >= 1.0) {
      EXPECT_EQ(X.norm(), 0.0);
      EXPECT_EQ(s.eval_theta(p, x).norm(), 0.0);
    }
    // theta = X gamma X^T
    EXPECT_LT((s.eval_theta(p, x) - X * s.theta_matrix(p) * X.transpose()).norm(), 1e-12 * (1 + X.squaredNorm()));
  }
  EXPECT_LT((s.vertical_lift(p) - s.sections(p) * s.theta_matrix(p) * s.sections(p).transpose()).norm(), 1e-15);
}

TEST(FiberGeometry, BallHalfWidths) {
  Mat h(2, 2);
  h << 4.0, 0.0, 0.0, 0.25;
  const FiberGeometry f(h, RadialDiffeo(2));
  const Vec hw = f.ball_half_widths();
  EXPECT_NEAR(hw[0], 0.5, 1e-15);
  EXPECT_NEAR(hw[1], 2.0, 1e-15);
  Vec x(2);
  x << 0.2, -0.7;
  EXPECT_LT((f.unwarp(f.warp(x)) - x).norm(), 1e-14);
}
