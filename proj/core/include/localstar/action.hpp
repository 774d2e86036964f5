#pragma once

#include <cstddef>

#include "localstar/grid.hpp"
#include "localstar/poisson.hpp"
#include "localstar/types.hpp"

namespace localstar {

/// The R^d-action on one fibre generated by the shrunken fields of the
/// sections e_1..e_d. Flows are computed by conjugation through Psi_h:
/// phi^{X_i}_t(x) = Psi_h^{-1}(Psi_h(x) + t e_i) on the open unit h-ball and
/// the identity elsewhere. In warped coordinates the action is translation
/// by the columns of warped_directions() = L^T E.
class AdmissibleAction {
 public:
  AdmissibleAction(FiberGeometry fiber, const Mat& sections, const Mat& theta, double hbar);
  static AdmissibleAction from_structure(const AdmissibleStructure& s, const Vec& p, double hbar);

  std::size_t fiber_dim() const { return fiber_.dim(); }
  std::size_t rank() const { return static_cast<std::size_t>(sections_.cols()); }
  const FiberGeometry& fiber() const { return fiber_; }
  const Mat& sections() const { return sections_; }
  const Mat& warped_directions() const { return warped_; }
  const Mat& theta() const { return theta_; }
  double hbar() const { return hbar_; }
  /// hbar * Theta, the matrix entering the oscillatory integral.
  Mat scaled_theta() const { return hbar_ * theta_; }
  /// Skew n x n matrix L^T E (hbar Theta) E^T L of the warped product.
  const Mat& warped_theta() const { return warped_theta_; }

  /// True when every generating direction vanishes; then K is empty.
  bool trivial() const { return trivial_; }
  /// x in K = closed unit h-ball (empty for a trivial action).
  bool in_support(const Vec& x) const;
  bool in_support(const double* x) const;
  /// x in the open unit h-ball and the action is non-trivial.
  bool moves(const double* x) const;
  /// Euclidean bounding box of K (empty box for a trivial action).
  Box support_box() const;
  /// Whether an axis-aligned box meets K in a point not fixed by the action.
  bool box_meets_support(const Box& box) const;

  Vec field(std::size_t i, const Vec& x) const;
  Vec flow(std::size_t i, double t, const Vec& x) const;
  /// phi^{X_1}_{v_1} o ... o phi^{X_d}_{v_d}(x), flows applied one by one.
  Vec orbit(const Vec& v, const Vec& x) const;
  /// Same point through a single conjugation, Psi_h^{-1}(Psi_h(x) + L^T E v).
  Vec orbit_direct(const Vec& v, const Vec& x) const;

  /// alpha_v(f) = f o phi_{v_1} o ... o phi_{v_d}. Requires f's grid box to
  /// contain K.
  GriddedFunction act(const Vec& v, const GriddedFunction& f) const;

  /// Constant functions, the zero function and functions whose support box,
  /// padded by one grid step, misses K; without a declared support, also
  /// functions whose samples above the support threshold all keep one grid
  /// diagonal away from K.
  bool is_fixed_function(const GriddedFunction& f) const;

 private:
  FiberGeometry fiber_;
  Mat sections_;
  Mat warped_;
  Mat theta_;
  double hbar_;
  Mat warped_theta_;
  bool trivial_;
  std::vector<bool> zero_direction_;
};

struct IsometryCheck {
  double residual = 0.0;
  /// False when L does not contain K; the residual is then a diagnostic only.
  bool claimed = true;
};

/// | sup_L |f| - sup_L |alpha_v f| |, with locally refined suprema.
IsometryCheck cofinal_isometry_residual(const AdmissibleAction& action, const Box& L,
                                        const GriddedFunction& f, const Vec& v);

}  // namespace localstar
