#pragma once

#include <cstddef>

#include "localstar/types.hpp"

namespace localstar {

// Radial building blocks for the shrinking diffeomorphism of the unit ball.
//
// The cutoff chi is the exponential smooth step
//   S(s) = sigma(s) / (sigma(s) + sigma(1 - s)),  sigma(s) = exp(-1/s) (s > 0)
// reparametrised so that chi = 1 on [0, plateau_end] and chi = 0 on
// [support_end, inf). The radial profile is
//   psi(t) = t chi(t) + (1 - chi(t)) exp(1 / (1 - t)),   0 <= t < 1,
// and the diffeomorphism is Psi(x) = x psi(|x|) / |x|.

class CutoffProfile {
 public:
  CutoffProfile() = default;
  CutoffProfile(double plateau_end, double support_end);

  double plateau_end() const noexcept { return plateau_end_; }
  double support_end() const noexcept { return support_end_; }

  /// chi(t); throws DomainError for t < 0.
  double value(double t) const;
  /// d chi / dt.
  double derivative(double t) const;

 private:
  double plateau_end_ = 0.5;
  double support_end_ = 0.75;
};

class RadialProfile {
 public:
  /// Builds psi from the cutoff and checks psi' > 0 on a grid of
  /// `check_points` samples of [0, 1); throws InvariantError otherwise.
  explicit RadialProfile(CutoffProfile cutoff = {}, std::size_t check_points = 100000);

  const CutoffProfile& cutoff() const noexcept { return cutoff_; }

  /// psi(t) for 0 <= t < 1. Returns +inf once exp(1/(1-t)) overflows.
  double value(double t) const;
  double derivative(double t) const;

  /// The unique t in [0, 1) with psi(t) = s. Bisection on a monotone
  /// bracket, polished by Newton; closed form on the pure exponential branch.
  double inverse(double s) const;

  /// Smallest psi' seen by the construction-time monotonicity scan.
  double min_observed_derivative() const noexcept { return min_derivative_; }

 private:
  CutoffProfile cutoff_;
  double min_derivative_ = 0.0;
};

/// The O(n)-equivariant diffeomorphism Psi : B_1(0) -> R^n, identity on
/// B_{1/2}(0). All members are const; safe for concurrent use.
class RadialDiffeo {
 public:
  explicit RadialDiffeo(std::size_t dim, RadialProfile profile = RadialProfile{});

  std::size_t dim() const noexcept { return dim_; }
  const RadialProfile& profile() const noexcept { return profile_; }

  /// Psi(x); requires |x| < 1.
  Vec apply(const Vec& x) const;
  /// Psi^{-1}(y) for any y in R^n.
  Vec apply_inverse(const Vec& y) const;

  /// Jacobian DPsi(x) = psi'(r) P_r + (psi(r)/r) P_perp, |x| < 1.
  Mat jacobian(const Vec& x) const;

  /// The pulled-back coordinate field X_i(x) = DPsi(x)^{-1} e_i for
  /// |x| < 1 and 0 otherwise. `axis` is zero-based.
  Vec frame_field(std::size_t axis, const Vec& x) const;
  /// Same as frame_field for an arbitrary constant direction.
  Vec pulled_back_direction(const Vec& direction, const Vec& x) const;

 private:
  std::size_t dim_;
  RadialProfile profile_;
};

}  // namespace localstar
