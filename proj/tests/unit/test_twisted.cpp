#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <localstar/twisted.hpp>

#include "direct_twisted.hpp"
#include "fixtures.hpp"

using namespace localstar;
using localstar::testing::direct_evaluate;
using localstar::testing::direct_twisted_convolution;

namespace {

std::vector<Complex> random_coeffs(const TwistedConvolution& t, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<Complex> c(t.size(), Complex{});
  const int K = t.max_mode();
  std::vector<int> k(t.dim(), -K);
  while (true) {
    c[t.index(k.data())] = Complex(g(rng), g(rng));
    std::size_t a = t.dim();
    while (a-- > 0) {
      if (++k[a] <= K) break;
      k[a] = -K;
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
  return c;
}

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Mat random_skew(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      m(i, j) = g(rng);
      m(j, i) = -m(i, j);
    }
  }
  return m;
}

}  // namespace

TEST(Twisted, AnalyzeSynthesizeRoundTrip) {
  std::mt19937_64 rng(4);
  const TwistedConvolution t(2, 16, 1.0, localstar::testing::symplectic());
  const auto c = random_coeffs(t, rng);
  EXPECT_LT(max_diff(t.analyze(t.synthesize(c)), c), 1e-12);
}

TEST(Twisted, EvaluateMatchesDefiningSum) {
  std::mt19937_64 rng(5);
  const TwistedConvolution t(2, 8, 1.3, localstar::testing::symplectic());
  const auto c = random_coeffs(t, rng);
  const double w[2] = {0.123, -0.77};
  EXPECT_LT(std::abs(t.evaluate(c, w) - direct_evaluate(t, c, w)), 1e-12);
  const auto samples = t.synthesize(c);
  const double w0[2] = {t.coord(3), t.coord(5)};
  EXPECT_LT(std::abs(samples[3 * 8 + 5] - t.evaluate(c, w0)), 1e-12);
}

class TwistedVsDirect : public ::testing::TestWithParam<std::size_t> {};

TEST_P(TwistedVsDirect, ConvolutionMatchesDoubleSum) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(6 + n);
  const std::size_t points = 12;
  const TwistedConvolution t(n, points, 0.9, random_skew(n, rng) * 0.3);
  const auto a = random_coeffs(t, rng), b = random_coeffs(t, rng);
  const auto fast = t.convolve(a, b);
  const auto ref = direct_twisted_convolution(t, a, b);
  double scale = 0.0;
  for (const auto& z : ref) scale = std::max(scale, std::abs(z));
  EXPECT_LT(max_diff(fast, ref) / scale, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Dimensions, TwistedVsDirect, ::testing::Values(1, 2));

TEST(Twisted, RejectsThreeAxes) {
  Mat theta = Mat::Zero(3, 3);
  theta(0, 1) = 1.0;
  theta(1, 0) = -1.0;
  EXPECT_THROW(TwistedConvolution(3, 8, 1.0, theta), DomainError);
  EXPECT_NO_THROW(TwistedConvolution(3, 8, 1.0, Mat::Zero(3, 3)));
}

TEST(Twisted, PlaneWavePhase) {
  const double theta = 0.37;
  Mat th(2, 2);
  th << 0.0, theta, -theta, 0.0;
  const TwistedConvolution t(2, 16, 1.0, th);
  std::vector<Complex> a(t.size()), b(t.size());
  const int p[2] = {2, -1}, q[2] = {1, 3}, s[2] = {3, 2};
  a[t.index(p)] = 1.0;
  b[t.index(q)] = 1.0;
  const auto c = t.convolve(a, b);
  const double T = t.period();
  const double expected = -2.0 * kPi * (p[0] * theta * q[1] - p[1] * theta * q[0]) / (T * T);
  EXPECT_LT(std::abs(c[t.index(s)] - std::polar(1.0, expected)), 1e-13);
}

TEST(Twisted, ZeroThetaIsOrdinaryConvolution) {
  std::mt19937_64 rng(9);
  const TwistedConvolution t(2, 16, 1.0, Mat::Zero(2, 2));
  // band-limited to |k| <= 3 so the product stays on the lattice
  std::vector<Complex> a(t.size()), b(t.size());
  std::normal_distribution<double> g;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) {
      const int k[2] = {i, j};
      a[t.index(k)] = Complex(g(rng), g(rng));
      b[t.index(k)] = Complex(g(rng), g(rng));
    }
  }
  const auto c = t.convolve(a, b);
  const auto sa = t.synthesize(a), sb = t.synthesize(b), sc = t.synthesize(c);
  for (std::size_t i = 0; i < sc.size(); ++i) EXPECT_LT(std::abs(sc[i] - sa[i] * sb[i]), 1e-11);
}
