#include "localstar/poisson.hpp"

#include <cmath>

#include <fmt/format.h>

namespace localstar {

void require_skew(const Mat& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DomainError(fmt::format("{} must be square, got {}x{}", what, m.rows(), m.cols()));
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (m(i, j) != -m(j, i)) {
        throw DomainError(fmt::format(
            "{} must be skew-symmetric for an admissible structure: entry ({},{}) = {} "
            "but ({},{}) = {}",
            what, i + 1, j + 1, m(i, j), j + 1, i + 1, m(j, i)));
      }
    }
  }
}

BundleSpec BundleSpec::trivial(std::size_t base_dim, std::size_t fiber_dim, const Mat& h,
                               double neighbourhood_radius) {
  BundleSpec b;
  b.base_dim = base_dim;
  b.fiber_dim = fiber_dim;
  b.metric = [h](const Vec&) { return h; };
  b.neighbourhood_radius = neighbourhood_radius;
  return b;
}

void BundleSpec::check(const std::vector<Vec>& base_samples) const {
  if (!(neighbourhood_radius > 1.0)) {
    throw InvariantError("unit ball inside neighbourhood",
                         fmt::format("neighbourhood radius {} does not contain the unit h-ball",
                                     neighbourhood_radius));
  }
  for (const auto& p : base_samples) {
    const Mat h = metric(p);
    if (h.rows() != static_cast<Eigen::Index>(fiber_dim) || h.cols() != h.rows()) {
      throw InvariantError("metric shape", "fibre metric has the wrong shape");
    }
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + h.cwiseAbs().maxCoeff())) {
      throw InvariantError("metric symmetric", "fibre metric is not symmetric");
    }
    Eigen::LLT<Mat> llt(h);
    if (llt.info() != Eigen::Success) {
      throw InvariantError("metric positive definite", "fibre metric is not positive definite");
    }
  }
}

DualBasisSpec DualBasisSpec::canonical(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  DualBasisSpec b;
  b.sections = [k](const Vec&) { return Mat::Identity(k, k); };
  b.covectors = [k](const Vec&) { return Mat::Identity(k, k); };
  return b;
}

double DualBasisSpec::reconstruction_residual(const std::vector<Vec>& base_samples) const {
  if (!covectors) throw DomainError("dual basis has no covectors");
  double worst = 0.0;
  for (const auto& p : base_samples) {
    const Mat e = sections(p);
    const Mat f = covectors(p);
    if (f.rows() != e.cols() || f.cols() != e.rows()) {
      throw DomainError("sections and covectors have incompatible shapes");
    }
    const Mat r = e * f - Mat::Identity(e.rows(), e.rows());
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

FiberGeometry::FiberGeometry(const Mat& metric, RadialDiffeo psi)
    : metric_(metric), psi_(std::move(psi)) {
  if (metric.rows() != static_cast<Eigen::Index>(psi_.dim()) || metric.cols() != metric.rows()) {
    throw DomainError("fibre metric does not match the fibre dimension");
  }
  Eigen::LLT<Mat> llt(metric);
  if (llt.info() != Eigen::Success) {
    throw InvariantError("metric positive definite", "fibre metric is not positive definite");
  }
  chol_ = llt.matrixL();
}

double FiberGeometry::h_norm_squared(const double* x) const {
  const auto n = metric_.rows();
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) row += metric_(i, j) * x[j];
    s += x[i] * row;
  }
  return s;
}

Vec FiberGeometry::ball_half_widths() const {
  const Mat inv = metric_.inverse();
  return inv.diagonal().cwiseSqrt();
}

Vec FiberGeometry::warp(const Vec& x) const {
  const Vec z = chol_.transpose() * x;
  return psi_.apply(z);
}

Vec FiberGeometry::unwarp(const Vec& w) const {
  const Vec z = psi_.apply_inverse(w);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(z);
}

Vec FiberGeometry::pulled_back(const Vec& direction, const Vec& x) const {
  if (!(h_norm_squared(x) < 1.0)) return Vec::Zero(direction.size());
  const Vec z = chol_.transpose() * x;
  const Vec dz = psi_.pulled_back_direction(chol_.transpose() * direction, z);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(dz);
}

AdmissibleStructure::AdmissibleStructure(BundleSpec bundle, DualBasisSpec basis,
                                         MatrixField gamma, RadialDiffeo psi)
    : bundle_(std::move(bundle)),
      basis_(std::move(basis)),
      gamma_(std::move(gamma)),
      psi_(std::move(psi)) {
  const Vec p0 = Vec::Zero(static_cast<Eigen::Index>(bundle_.base_dim));
  rank_ = static_cast<std::size_t>(basis_.sections(p0).cols());
}

FiberGeometry AdmissibleStructure::fiber(const Vec& p) const {
  return FiberGeometry(bundle_.metric(p), psi_);
}

Mat AdmissibleStructure::fields(const Vec& p, const Vec& x) const {
  const FiberGeometry fib = fiber(p);
  const Mat e = basis_.sections(p);
  Mat out(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.cols(); ++i) out.col(i) = fib.pulled_back(e.col(i), x);
  return out;
}

Mat AdmissibleStructure::companions(const Vec& p, const Vec& x) const {
  return 0.5 * fields(p, x) * gamma_(p).transpose();
}

Mat AdmissibleStructure::eval_theta(const Vec& p, const Vec& x) const {
  const Mat X = fields(p, x);
  const Mat Y = 0.5 * X * gamma_(p).transpose();
  return X * Y.transpose() - Y * X.transpose();
}

Mat AdmissibleStructure::vertical_lift(const Vec& p) const {
  const Mat e = basis_.sections(p);
  return e * gamma_(p) * e.transpose();
}

std::function<Mat(const Vec& p, const Vec& x)> build_shrunken_fields(
    const DualBasisSpec& basis, const BundleSpec& bundle, const std::vector<Vec>& base_samples,
    double reconstruction_tol) {
  bundle.check(base_samples);
  const double r = basis.reconstruction_residual(base_samples);
  if (!(r <= reconstruction_tol)) {
    throw InvariantError("dual basis reconstruction",
                         fmt::format("dual basis reconstruction residual {} exceeds {}", r,
                                     reconstruction_tol));
  }
  RadialDiffeo psi(bundle.fiber_dim);
  return [basis, bundle, psi](const Vec& p, const Vec& x) {
    const FiberGeometry fib(bundle.metric(p), psi);
    const Mat e = basis.sections(p);
    Mat out(e.rows(), e.cols());
    for (Eigen::Index i = 0; i < e.cols(); ++i) out.col(i) = fib.pulled_back(e.col(i), x);
    return out;
  };
}

AdmissibleStructure build_theta(MatrixField gamma, const DualBasisSpec& basis,
                                const BundleSpec& bundle, const std::vector<Vec>& base_samples,
                                bool check_reconstruction) {
  bundle.check(base_samples);
  if (check_reconstruction) {
    const double r = basis.reconstruction_residual(base_samples);
    if (!(r <= 1e-12)) {
      throw InvariantError("dual basis reconstruction",
                           fmt::format("dual basis reconstruction residual {} exceeds 1e-12", r));
    }
  }
  for (const auto& p : base_samples) {
    const Mat g = gamma(p);
    require_skew(g, "gamma");
    if (g.rows() != basis.sections(p).cols()) {
      throw DomainError("gamma size does not match the number of sections");
    }
  }
  return AdmissibleStructure(bundle, basis, std::move(gamma), RadialDiffeo(bundle.fiber_dim));
}

AdmissibleStructure as_admissible_action(const DualBasisSpec& basis, const BundleSpec& bundle,
                                         const Mat& theta) {
  require_skew(theta, "Theta");
  return AdmissibleStructure(bundle, basis, [theta](const Vec&) { return theta; },
                             RadialDiffeo(bundle.fiber_dim));
}

}  // namespace localstar
