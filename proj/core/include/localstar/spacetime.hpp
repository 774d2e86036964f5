#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "localstar/action.hpp"
#include "localstar/grid.hpp"
#include "localstar/starproduct.hpp"
#include "localstar/types.hpp"

namespace localstar {

using MFunction = std::function<Complex(const Vec& q)>;
using TMFunction = std::function<Complex(const Vec& p, const Vec& v)>;
using MxMFunction = std::function<Complex(const Vec& a, const Vec& b)>;

enum class ManifoldKind { Flat, Hyperbolic, Custom };

/// A base manifold given by closed-form exponential and logarithm maps.
/// The hyperbolic plane is the Poincare disk with curvature -1.
class BaseGeometry {
 public:
  using PointMap = std::function<Vec(const Vec& p, const Vec& v)>;
  using MetricField = std::function<Mat(const Vec& p)>;
  using Domain = std::function<bool(const Vec& p)>;

  static BaseGeometry flat(std::size_t m);
  static BaseGeometry hyperbolic_disk();
  /// User exp/log pair; `log` must invert `exp` on the neighbourhoods used.
  static BaseGeometry custom(std::size_t m, PointMap exp, PointMap log, MetricField metric,
                             Domain domain = {});

  ManifoldKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool contains(const Vec& p) const;
  Mat metric(const Vec& p) const { return metric_(p); }
  Vec exp(const Vec& p, const Vec& v) const;
  Vec log(const Vec& p, const Vec& q) const;

  /// Phi(v_p) = (exp_p(-v), exp_p(v)).
  std::pair<Vec, Vec> phi(const Vec& p, const Vec& v) const;
  /// Inverse through the geodesic midpoint: p = exp_a(log_a(b) / 2), v = log_p(b).
  std::pair<Vec, Vec> phi_inverse(const Vec& a, const Vec& b) const;

  /// Largest |Phi^{-1}(Phi(p, v)) - (p, v)| over the samples.
  double round_trip_residual(const std::vector<std::pair<Vec, Vec>>& samples) const;
  /// Throws InvariantError when the round trip exceeds tol.
  void check_round_trip(const std::vector<std::pair<Vec, Vec>>& samples, double tol = 1e-8) const;

 private:
  ManifoldKind kind_ = ManifoldKind::Flat;
  std::size_t dim_ = 0;
  PointMap exp_, log_;
  MetricField metric_;
  Domain domain_;
};

enum class FrameKind {
  /// r g^{-1/2}: warped directions are orthonormal at every base point.
  Orthonormal,
  /// Coordinate vectors d/dx^i.
  Coordinate,
  /// Orthonormal frame scaled by s(p) = 1 - exp(-|p - p0|^2 / l^2), zero at p0.
  Vanishing,
};

struct TowerSettings {
  double hbar = 0.1;
  /// m x m skew; empty means the standard symplectic matrix (m = 2) or 0.
  Mat theta;
  /// K_p is the g-ball of this radius in T_pM, i.e. h = g / r^2.
  double fiber_radius = 0.5;
  /// U_p is the h-ball of this radius (> 1).
  double neighbourhood_margin = 1.1;
  FrameKind frame = FrameKind::Orthonormal;
  Vec vanishing_point;
  double vanishing_length = 0.3;
  std::size_t fiber_points = 128;
  EngineSettings engine;
};

/// The vertical action on TM with its per-fibre engines, the map Phi onto
/// M x M and the per-point products on M. Engines are cached per base point;
/// points closer than 1e-9 share an engine.
class TangentTower {
 public:
  TangentTower(BaseGeometry geometry, TowerSettings settings);

  const BaseGeometry& geometry() const { return geometry_; }
  const TowerSettings& settings() const { return settings_; }

  Mat fiber_metric(const Vec& p) const;
  Mat frame(const Vec& p) const;
  AdmissibleAction action_at(const Vec& p) const;
  std::shared_ptr<const ProductEngine> engine_at(const Vec& p) const;
  /// Fibre grid covering U_p.
  Grid fiber_grid(const Vec& p) const;
  /// |v|_h < margin.
  bool in_neighbourhood(const Vec& p, const Vec& v) const;

  GriddedFunction restrict_to_fiber(const Vec& p, const TMFunction& f) const;
  /// The product on TM at the given base points; fibre by fibre.
  std::vector<GriddedFunction> star_TM(const TMFunction& f, const TMFunction& g,
                                       const std::vector<Vec>& base_points) const;
  /// || i_p^*(f * g) - i_p^* f *_p i_p^* g ||_inf.
  double homomorphism_residual_ip(const TMFunction& f, const TMFunction& g, const Vec& p) const;
  /// Same residual with f, g cut down to U: the product must not see the rest.
  double restriction_residual(const TMFunction& f, const TMFunction& g, const Vec& p) const;

  TMFunction pullback_phi(const MxMFunction& f) const;
  /// Phi_* f on V, zero elsewhere.
  MxMFunction pushforward_phi(const TMFunction& f) const;
  /// Throws DomainError if f is non-zero on a fibre grid point outside U.
  void require_supported_in_neighbourhood(const TMFunction& f,
                                          const std::vector<Vec>& base_points) const;
  /// Whether (a, b) lies in V = Phi(U).
  bool in_image(const Vec& a, const Vec& b) const;

  /// The product on M x M: Phi_*(Phi^* f * Phi^* g) on V, pointwise elsewhere.
  MxMFunction star_MxM(const MxMFunction& f, const MxMFunction& g) const;
  /// Relative || Phi^*(f ~* g) - Phi^* f * Phi^* g || over the fibre grid at p.
  double phi_homomorphism_residual(const MxMFunction& f, const MxMFunction& g,
                                   const Vec& p) const;
  /// || Phi^*(alpha~_v f) - alpha_v Phi^* f || over the fibre grid at p.
  double phi_equivariance_residual(const MxMFunction& f, const Vec& v, const Vec& p) const;

  /// f ~*_p g on M: conjugation by exp_p inside V_p, pointwise outside.
  MFunction star_p_on_M(const Vec& p, const MFunction& f, const MFunction& g) const;
  /// Relative || exp_p^*(f ~*_p g) - exp_p^* f *_p exp_p^* g || over the fibre grid.
  double residual_expp(const Vec& p, const MFunction& f, const MFunction& g) const;
  /// max |f ~*_p g - g ~*_p f| over the samples that lie outside V_p.
  double commutator_outside(const Vec& p, const MFunction& f, const MFunction& g,
                            const std::vector<Vec>& samples) const;
  bool in_chart(const Vec& p, const Vec& q) const;

 private:
  struct Cache;
  BaseGeometry geometry_;
  TowerSettings settings_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace localstar
