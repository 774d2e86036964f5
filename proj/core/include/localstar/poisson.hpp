#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "localstar/geometry.hpp"
#include "localstar/types.hpp"

namespace localstar {

using MatrixField = std::function<Mat(const Vec& base_point)>;

/// Trivialized vector bundle E = M x R^n with fibre metric h(p). The unit
/// h-ball must sit inside the neighbourhood {|x|_h < neighbourhood_radius}.
struct BundleSpec {
  std::size_t base_dim = 0;
  std::size_t fiber_dim = 1;
  MatrixField metric;
  double neighbourhood_radius = 1.1;

  static BundleSpec trivial(std::size_t base_dim, std::size_t fiber_dim, const Mat& h,
                            double neighbourhood_radius = 1.1);
  /// Throws InvariantError unless h is symmetric positive definite at
  /// every sample and the radius exceeds 1.
  void check(const std::vector<Vec>& base_samples) const;
};

/// Sections e_i (columns of an n x d matrix) and covectors f^i (rows of a
/// d x n matrix). Covectors may be left empty when the sections are only
/// used to generate an action.
struct DualBasisSpec {
  MatrixField sections;
  MatrixField covectors;

  static DualBasisSpec canonical(std::size_t n);
  /// Largest |sum_i e_i f^i(s) - s| over the samples.
  double reconstruction_residual(const std::vector<Vec>& base_samples) const;
};

/// One fibre with its metric: h = L L^T, z = L^T x are h-orthonormal
/// coordinates and w = Psi(z) the warped coordinates in which the shrunken
/// fields become coordinate translations.
class FiberGeometry {
 public:
  FiberGeometry(const Mat& metric, RadialDiffeo psi);

  std::size_t dim() const { return psi_.dim(); }
  const Mat& metric() const { return metric_; }
  const Mat& cholesky() const { return chol_; }
  const RadialDiffeo& psi() const { return psi_; }

  double h_norm_squared(const double* x) const;
  double h_norm_squared(const Vec& x) const { return h_norm_squared(x.data()); }
  /// Euclidean half-widths of the unit h-ball's bounding box.
  Vec ball_half_widths() const;

  /// w = Psi(L^T x); requires |x|_h < 1.
  Vec warp(const Vec& x) const;
  /// x = L^{-T} Psi^{-1}(w).
  Vec unwarp(const Vec& w) const;
  /// (Psi_h)^* of a constant fibre direction; zero once |x|_h >= 1.
  Vec pulled_back(const Vec& direction, const Vec& x) const;

 private:
  Mat metric_;
  Mat chol_;
  RadialDiffeo psi_;
};

/// Vertical Poisson structure theta = sum_i X_i ^ Y_i with
/// Y_i = 1/2 sum_j gamma^{ij} X_j, equivalently theta = X gamma X^T.
class AdmissibleStructure {
 public:
  AdmissibleStructure(BundleSpec bundle, DualBasisSpec basis, MatrixField gamma,
                      RadialDiffeo psi);

  const BundleSpec& bundle() const { return bundle_; }
  const DualBasisSpec& basis() const { return basis_; }
  std::size_t rank() const { return rank_; }

  FiberGeometry fiber(const Vec& p) const;
  Mat sections(const Vec& p) const { return basis_.sections(p); }
  /// Theta-matrix presentation at p (equal to gamma(p)).
  Mat theta_matrix(const Vec& p) const { return gamma_(p); }

  /// n x d matrix whose columns are X_i(p, x).
  Mat fields(const Vec& p, const Vec& x) const;
  /// n x d matrix whose columns are Y_i(p, x).
  Mat companions(const Vec& p, const Vec& x) const;
  /// Bivector components in fibre coordinates.
  Mat eval_theta(const Vec& p, const Vec& x) const;
  /// Vertical lift of gamma: E gamma E^T.
  Mat vertical_lift(const Vec& p) const;

 private:
  BundleSpec bundle_;
  DualBasisSpec basis_;
  MatrixField gamma_;
  RadialDiffeo psi_;
  std::size_t rank_;
};

/// Checks the dual basis and metric, then returns the per-point fields
/// X_i = (Psi_h)^* e_i^ver as an n x d matrix field on the total space.
std::function<Mat(const Vec& p, const Vec& x)> build_shrunken_fields(
    const DualBasisSpec& basis, const BundleSpec& bundle, const std::vector<Vec>& base_samples,
    double reconstruction_tol = 1e-12);

/// Builds the structure from a skew coefficient field gamma; rejects non-skew
/// gamma at any base sample.
AdmissibleStructure build_theta(MatrixField gamma, const DualBasisSpec& basis,
                                const BundleSpec& bundle, const std::vector<Vec>& base_samples,
                                bool check_reconstruction = true);

/// Packages a constant skew matrix Theta with the fields generated by
/// `basis`: theta = 1/2 sum Theta^{ij} X_i ^ X_j.
AdmissibleStructure as_admissible_action(const DualBasisSpec& basis, const BundleSpec& bundle,
                                         const Mat& theta);

/// Throws DomainError unless m is square and m^T == -m exactly.
void require_skew(const Mat& m, const char* what);

}  // namespace localstar
