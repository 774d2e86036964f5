#include "localstar/action.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace localstar {

AdmissibleAction::AdmissibleAction(FiberGeometry fiber, const Mat& sections, const Mat& theta,
                                   double hbar)
    : fiber_(std::move(fiber)), sections_(sections), theta_(theta), hbar_(hbar) {
  if (sections.rows() != static_cast<Eigen::Index>(fiber_.dim())) {
    throw DomainError("sections must have one row per fibre coordinate");
  }
  if (theta.rows() != sections.cols()) {
    throw DomainError(fmt::format("Theta is {}x{} but there are {} sections", theta.rows(),
                                  theta.cols(), sections.cols()));
  }
  require_skew(theta, "Theta");
  if (!(hbar >= 0.0)) throw DomainError("hbar must be non-negative");
  warped_ = fiber_.cholesky().transpose() * sections_;
  warped_theta_ = warped_ * (hbar_ * theta_) * warped_.transpose();
  // exact skew symmetry, independent of rounding in the triple product
  for (Eigen::Index i = 0; i < warped_theta_.rows(); ++i) {
    warped_theta_(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) warped_theta_(i, j) = -warped_theta_(j, i);
  }
  zero_direction_.resize(static_cast<std::size_t>(warped_.cols()));
  trivial_ = true;
  for (Eigen::Index i = 0; i < warped_.cols(); ++i) {
    const bool zero = warped_.col(i).isZero(0.0);
    zero_direction_[static_cast<std::size_t>(i)] = zero;
    if (!zero) trivial_ = false;
  }
}

AdmissibleAction AdmissibleAction::from_structure(const AdmissibleStructure& s, const Vec& p,
                                                  double hbar) {
  return AdmissibleAction(s.fiber(p), s.sections(p), s.theta_matrix(p), hbar);
}

bool AdmissibleAction::in_support(const double* x) const {
  return !trivial_ && fiber_.h_norm_squared(x) <= 1.0;
}

bool AdmissibleAction::in_support(const Vec& x) const { return in_support(x.data()); }

bool AdmissibleAction::moves(const double* x) const {
  return !trivial_ && fiber_.h_norm_squared(x) < 1.0;
}

Box AdmissibleAction::support_box() const {
  const std::size_t n = fiber_dim();
  if (trivial_) return Box::empty_box(n);
  const Vec hw = fiber_.ball_half_widths();
  Box b = Box::cube(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    b.lo[a] = -hw[static_cast<Eigen::Index>(a)];
    b.hi[a] = hw[static_cast<Eigen::Index>(a)];
  }
  return b;
}

bool AdmissibleAction::box_meets_support(const Box& box) const {
  if (trivial_ || box.empty()) return false;
  const Mat& h = fiber_.metric();
  const auto n = h.rows();
  // minimise x^T h x over the box by exact coordinate descent
  Vec x(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    x[a] = std::clamp(0.0, box.lo[static_cast<std::size_t>(a)], box.hi[static_cast<std::size_t>(a)]);
  }
  for (int sweep = 0; sweep < 1000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      double off = 0.0;
      for (Eigen::Index b = 0; b < n; ++b) {
        if (b != a) off += h(a, b) * x[b];
      }
      const double next = std::clamp(-off / h(a, a), box.lo[static_cast<std::size_t>(a)],
                                     box.hi[static_cast<std::size_t>(a)]);
      change = std::max(change, std::abs(next - x[a]));
      x[a] = next;
    }
    if (change < 1e-15) break;
  }
  return fiber_.h_norm_squared(x) < 1.0 + 1e-12;
}

Vec AdmissibleAction::field(std::size_t i, const Vec& x) const {
  if (i >= rank()) throw DomainError(fmt::format("field index {} out of range", i + 1));
  return fiber_.pulled_back(sections_.col(static_cast<Eigen::Index>(i)), x);
}

Vec AdmissibleAction::flow(std::size_t i, double t, const Vec& x) const {
  if (i >= rank()) throw DomainError(fmt::format("field index {} out of range", i + 1));
  if (zero_direction_[i] || !(fiber_.h_norm_squared(x) < 1.0)) return x;
  Vec w = fiber_.warp(x);
  // psi overflows within an ulp of the sphere; the flow is the identity there
  if (!w.allFinite()) return x;
  w += t * warped_.col(static_cast<Eigen::Index>(i));
  return fiber_.unwarp(w);
}

Vec AdmissibleAction::orbit(const Vec& v, const Vec& x) const {
  if (static_cast<std::size_t>(v.size()) != rank()) throw DomainError("orbit: wrong size of v");
  Vec y = x;
  for (std::size_t i = rank(); i-- > 0;) y = flow(i, v[static_cast<Eigen::Index>(i)], y);
  return y;
}

Vec AdmissibleAction::orbit_direct(const Vec& v, const Vec& x) const {
  if (static_cast<std::size_t>(v.size()) != rank()) throw DomainError("orbit: wrong size of v");
  if (!moves(x.data())) return x;
  Vec w = fiber_.warp(x);
  if (!w.allFinite()) return x;
  w += warped_ * v;
  return fiber_.unwarp(w);
}

GriddedFunction AdmissibleAction::act(const Vec& v, const GriddedFunction& f) const {
  if (f.dim() != fiber_dim()) throw DomainError("act: function lives on the wrong fibre");
  if (!f.grid().box().contains(support_box())) {
    throw DomainError("act: the function's domain does not cover K");
  }
  if (v.isZero(0.0) || is_fixed_function(f)) return f;
  const AdmissibleAction self = *this;
  Evaluator e = [self, f, v](const double* x) -> Complex {
    if (!self.moves(x)) return f(x);
    const Vec xv = Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(self.fiber_dim()));
    const Vec y = self.orbit_direct(v, xv);
    return f(y.data());
  };
  std::vector<Complex> values(f.grid().size());
  std::vector<double> x(f.dim());
  for (std::size_t i = 0; i < values.size(); ++i) {
    f.grid().point(i, x.data());
    values[i] = e(x.data());
  }
  std::optional<Box> declared;
  if (f.has_declared_support()) {
    Box s = f.support();
    const Box k = support_box();
    for (std::size_t a = 0; a < s.dim(); ++a) {
      s.lo[a] = std::min(s.empty() ? k.lo[a] : s.lo[a], k.lo[a]);
      s.hi[a] = std::max(s.empty() ? k.hi[a] : s.hi[a], k.hi[a]);
    }
    declared = s;
  }
  const Provenance prov =
      f.provenance() == Provenance::ClosedForm ? Provenance::ClosedForm : Provenance::Resampled;
  return GriddedFunction::assemble(f.grid(), std::move(values), std::move(e), prov, declared);
}

bool AdmissibleAction::is_fixed_function(const GriddedFunction& f) const {
  if (trivial_ || f.is_constant()) return true;
  const Box& s = f.support();
  if (s.empty()) return true;
  double step = 0.0;
  for (std::size_t a = 0; a < f.dim(); ++a) step = std::max(step, f.grid().spacing(a));
  if (!box_meets_support(s.padded(step))) return true;
  if (f.has_declared_support()) return false;
  // the bounding box is coarse for supports beside the ball: look at the samples,
  // keeping one grid diagonal (in the h-norm) of clearance
  const double reach = 1.0 + step * std::sqrt(static_cast<double>(f.dim())) *
                                 std::sqrt(fiber_.metric().selfadjointView<Eigen::Lower>().operatorNorm());
  const Grid& grid = f.grid();
  std::vector<double> x(f.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(f.values()[i]) <= GriddedFunction::kSupportThreshold) continue;
    grid.point(i, x.data());
    if (fiber_.h_norm_squared(x.data()) < reach * reach) return false;
  }
  return true;
}

IsometryCheck cofinal_isometry_residual(const AdmissibleAction& action, const Box& L,
                                        const GriddedFunction& f, const Vec& v) {
  IsometryCheck out;
  out.claimed = L.contains(action.support_box());
  if (v.isZero(0.0)) return out;
  const GriddedFunction moved = action.act(v, f);
  out.residual = std::abs(sup_norm(f, L, true) - sup_norm(moved, L, true));
  return out;
}

}  // namespace localstar
