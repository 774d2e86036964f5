#include "localstar/ode.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace localstar {

Vec integrate_autonomous(const std::function<Vec(const Vec&)>& field, double t, const Vec& x0,
                         const OdeSettings& settings) {
  if (t == 0.0) return x0;
  // Dormand-Prince tableau
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;

  const double dir = t > 0.0 ? 1.0 : -1.0;
  const double total = std::abs(t);
  double done = 0.0;
  double h = std::min(total, 1e-3);
  Vec x = x0;
  Vec k1 = field(x);
  for (std::size_t step = 0; step < settings.max_steps; ++step) {
    if (done >= total) return x;
    h = std::min(h, total - done);
    const double hs = dir * h;
    const Vec k2 = field(x + hs * (a21 * k1));
    const Vec k3 = field(x + hs * (a31 * k1 + a32 * k2));
    const Vec k4 = field(x + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = field(x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = field(x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec xn = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = field(xn);
    const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      const double sc = settings.atol + settings.rtol * std::max(std::abs(x[a]), std::abs(xn[a]));
      en = std::max(en, std::abs(err[a]) / sc);
    }
    if (en <= 1.0) {
      done += h;
      x = xn;
      k1 = k7;
    }
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-300) throw Error("ODE step size underflow");
  }
  throw Error(fmt::format("ODE integration exceeded {} steps", settings.max_steps));
}

Vec integrate_flow(const AdmissibleAction& action, std::size_t i, double t, const Vec& x,
                   const OdeSettings& settings) {
  return integrate_autonomous([&](const Vec& y) { return action.field(i, y); }, t, x, settings);
}

}  // namespace localstar
