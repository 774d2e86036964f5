#include "localstar/geometry.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace localstar {

namespace {

// Smooth step on [0, 1]: 0 below, 1 above.
double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  // sigma(s) / (sigma(s) + sigma(1 - s)) written to avoid 0/0
  const double u = 1.0 / s - 1.0 / (1.0 - s);
  return 1.0 / (1.0 + std::exp(u));
}

double smooth_step_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double S = smooth_step(s);
  return S * (1.0 - S) * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s)));
}

}  // namespace

CutoffProfile::CutoffProfile(double plateau_end, double support_end)
    : plateau_end_(plateau_end), support_end_(support_end) {
  if (!(plateau_end > 0.0) || !(support_end > plateau_end) || !(support_end < 1.0)) {
    throw DomainError(fmt::format(
        "cutoff profile needs 0 < plateau_end < support_end < 1, got {} and {}",
        plateau_end, support_end));
  }
}

double CutoffProfile::value(double t) const {
  if (!(t >= 0.0)) throw DomainError(fmt::format("cutoff evaluated at negative t = {}", t));
  if (t <= plateau_end_) return 1.0;
  if (t >= support_end_) return 0.0;
  return 1.0 - smooth_step((t - plateau_end_) / (support_end_ - plateau_end_));
}

double CutoffProfile::derivative(double t) const {
  if (!(t >= 0.0)) throw DomainError(fmt::format("cutoff evaluated at negative t = {}", t));
  const double width = support_end_ - plateau_end_;
  return -smooth_step_derivative((t - plateau_end_) / width) / width;
}

RadialProfile::RadialProfile(CutoffProfile cutoff, std::size_t check_points)
    : cutoff_(cutoff) {
  min_derivative_ = std::numeric_limits<double>::infinity();
  if (check_points < 2) return;
  double prev = value(0.0);
  for (std::size_t k = 1; k < check_points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(check_points);
    const double v = value(t);
    if (!std::isfinite(v)) break;  // past the overflow radius
    const double dv = derivative(t);
    if (!(v > prev) || !(dv > 0.0)) {
      throw InvariantError("psi strictly increasing",
                           fmt::format("radial profile not increasing near t = {} "
                                       "(psi = {}, psi' = {})",
                                       t, v, dv));
    }
    min_derivative_ = std::min(min_derivative_, dv);
    prev = v;
  }
}

double RadialProfile::value(double t) const {
  if (!(t >= 0.0) || !(t < 1.0)) {
    throw DomainError(fmt::format("psi is defined on [0, 1), got t = {}", t));
  }
  if (t <= cutoff_.plateau_end()) return t;
  const double e = std::exp(1.0 / (1.0 - t));
  if (t >= cutoff_.support_end()) return e;
  const double c = cutoff_.value(t);
  return t * c + (1.0 - c) * e;
}

double RadialProfile::derivative(double t) const {
  if (!(t >= 0.0) || !(t < 1.0)) {
    throw DomainError(fmt::format("psi is defined on [0, 1), got t = {}", t));
  }
  if (t <= cutoff_.plateau_end()) return 1.0;
  const double inv = 1.0 / (1.0 - t);
  const double e = std::exp(inv);
  const double de = e * inv * inv;
  if (t >= cutoff_.support_end()) return de;
  const double c = cutoff_.value(t);
  const double dc = cutoff_.derivative(t);
  return c + t * dc - dc * e + (1.0 - c) * de;
}

double RadialProfile::inverse(double s) const {
  if (!(s >= 0.0)) throw DomainError(fmt::format("psi inverse needs s >= 0, got {}", s));
  const double a = cutoff_.plateau_end();
  const double b = cutoff_.support_end();
  if (s <= a) return s;
  const double exp_branch = std::exp(1.0 / (1.0 - b));
  if (s >= exp_branch) {
    if (std::isinf(s)) return 1.0;
    return 1.0 - 1.0 / std::log(s);
  }
  // psi(a) = a < s < psi(b): bisection safeguarding Newton
  double lo = a, hi = b;
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double r = value(t) - s;
    if (r == 0.0) return t;
    if (r > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    const double d = derivative(t);
    double next = t - r / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  return t;
}

RadialDiffeo::RadialDiffeo(std::size_t dim, RadialProfile profile)
    : dim_(dim), profile_(std::move(profile)) {
  if (dim == 0) throw DomainError("radial diffeomorphism needs dimension >= 1");
}

Vec RadialDiffeo::apply(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw DomainError(fmt::format("point has dimension {}, expected {}", x.size(), dim_));
  }
  const double r = x.norm();
  if (!(r < 1.0)) throw DomainError(fmt::format("Psi needs |x| < 1, got |x| = {}", r));
  if (r < 1e-300 || r <= profile_.cutoff().plateau_end()) return x;
  return x * (profile_.value(r) / r);
}

Vec RadialDiffeo::apply_inverse(const Vec& y) const {
  if (static_cast<std::size_t>(y.size()) != dim_) {
    throw DomainError(fmt::format("point has dimension {}, expected {}", y.size(), dim_));
  }
  const double s = y.stableNorm();
  if (s < 1e-300 || s <= profile_.cutoff().plateau_end()) return y;
  return y * (profile_.inverse(s) / s);
}

Mat RadialDiffeo::jacobian(const Vec& x) const {
  const double r = x.norm();
  if (!(r < 1.0)) throw DomainError(fmt::format("DPsi needs |x| < 1, got |x| = {}", r));
  const auto n = static_cast<Eigen::Index>(dim_);
  if (r < 1e-300 || r <= profile_.cutoff().plateau_end()) return Mat::Identity(n, n);
  const Vec u = x / r;
  const Mat pr = u * u.transpose();
  return profile_.derivative(r) * pr + (profile_.value(r) / r) * (Mat::Identity(n, n) - pr);
}

Vec RadialDiffeo::frame_field(std::size_t axis, const Vec& x) const {
  if (axis >= dim_) throw DomainError(fmt::format("axis {} out of range for n = {}", axis, dim_));
  Vec e = Vec::Zero(static_cast<Eigen::Index>(dim_));
  e[static_cast<Eigen::Index>(axis)] = 1.0;
  return pulled_back_direction(e, x);
}

Vec RadialDiffeo::pulled_back_direction(const Vec& direction, const Vec& x) const {
  const double r = x.norm();
  if (!(r < 1.0)) return Vec::Zero(direction.size());
  if (r < 1e-300 || r <= profile_.cutoff().plateau_end()) return direction;
  const Vec u = x / r;
  const double radial = u.dot(direction);
  const double dpsi = profile_.derivative(r);
  const double psi = profile_.value(r);
  const double a = std::isfinite(dpsi) ? radial / dpsi : 0.0;
  const double b = std::isfinite(psi) ? r / psi : 0.0;
  return a * u + b * (direction - radial * u);
}

}  // namespace localstar
