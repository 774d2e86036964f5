#include "fixtures.hpp"

#include <cmath>

namespace localstar::testing {

AdmissibleAction standard_action(double hbar) {
  return AdmissibleAction(FiberGeometry(Mat::Identity(2, 2), RadialDiffeo(2)), Mat::Identity(2, 2),
                          symplectic(), hbar);
}

AdmissibleAction random_action(double hbar, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat a(2, 2);
  a << 1.0 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 1.0 + 0.3 * u(rng);
  const Mat h = a * a.transpose();
  Mat e(2, 2);
  e << 1.0 + 0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng), 1.0 + 0.2 * u(rng);
  // the warped twist is det(L^T E) hbar Theta: keep it within 20% of the standard one
  const FiberGeometry fiber(h, RadialDiffeo(2));
  const double det = std::abs((fiber.cholesky().transpose() * e).determinant());
  const Mat theta = (0.9 + 0.1 * u(rng)) / det * symplectic();
  return AdmissibleAction(fiber, e, theta, hbar);
}

Grid covering_grid(const AdmissibleAction& action, std::size_t points, double margin) {
  const Vec hw = action.fiber().ball_half_widths() * margin;
  std::vector<double> lo(action.fiber_dim()), hi(action.fiber_dim());
  for (std::size_t a = 0; a < lo.size(); ++a) {
    hi[a] = hw[static_cast<Eigen::Index>(a)];
    lo[a] = -hi[a];
  }
  return Grid(lo, hi, std::vector<std::size_t>(lo.size(), points));
}

Vec random_in_ball(std::size_t n, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  Vec x(static_cast<Eigen::Index>(n));
  for (Eigen::Index a = 0; a < x.size(); ++a) x[a] = g(rng);
  return x * (radius * std::pow(u(rng), 1.0 / static_cast<double>(n)) / x.norm());
}

GriddedFunction random_bump(const Grid& grid, const AdmissibleAction& action, std::mt19937_64& rng,
                            double centre_radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = grid.dim();
  const Vec c = random_in_ball(n, centre_radius, rng);
  Vec k(static_cast<Eigen::Index>(n));
  for (Eigen::Index a = 0; a < k.size(); ++a) k[a] = 3.0 * u(rng);
  const double s = 0.06 + 0.01 * u(rng);
  const Complex amp = std::polar(1.0, kPi * u(rng));
  const Mat lt = action.fiber().cholesky().transpose();
  return GriddedFunction::from_closed_form(grid, [=](const double* x) {
    const Vec z = lt * Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(n));
    return amp * std::exp(-(z - c).squaredNorm() / (2.0 * s * s)) * std::polar(1.0, k.dot(z));
  });
}

GriddedFunction outside_bump(const Grid& grid, const AdmissibleAction& action, std::mt19937_64& rng) {
  const std::size_t n = grid.dim();
  const Vec c = random_in_ball(n, 1.0, rng).normalized() * 1.35;
  const Mat lt = action.fiber().cholesky().transpose();
  return GriddedFunction::from_closed_form(grid, [=](const double* x) {
    const Vec z = lt * Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(n));
    return Complex(std::exp(-(z - c).squaredNorm() / (2.0 * 0.035 * 0.035)), 0.0);
  });
}

GriddedFunction add(const GriddedFunction& a, const GriddedFunction& b) {
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

}  // namespace localstar::testing
