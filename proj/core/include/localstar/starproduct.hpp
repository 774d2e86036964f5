#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "localstar/action.hpp"
#include "localstar/grid.hpp"
#include "localstar/twisted.hpp"
#include "localstar/types.hpp"

namespace localstar {

struct EngineSettings {
  /// Torus points per warped axis (even).
  std::size_t torus_points = 128;
  /// The torus is [-H, H)^n in warped coordinates.
  double torus_half_width = 1.6;
  /// Outer fraction of the torus that must carry no mass.
  double edge_band = 0.1;
  /// Largest admissible (edge-band max) / (global max) for inputs and output.
  double edge_tolerance = 1e-8;
};

/// Deformed product on one fibre,
///   f * g = f g - (chi f)(chi g) + W^{-1}[ W(chi f) #_Theta W(chi g) ],
/// with chi = 1 on K, W the warp onto the torus in the coordinates
/// w = Psi(L^T x) and # the truncated twisted convolution. Outside the open
/// unit h-ball the result is the pointwise product of the samples; fixed
/// inputs and a vanishing warped Theta skip the spectral path entirely.
class ProductEngine {
 public:
  explicit ProductEngine(AdmissibleAction action, EngineSettings settings = {});

  const AdmissibleAction& action() const;
  const EngineSettings& settings() const;
  /// Null when the warped Theta vanishes (products are then pointwise).
  const TwistedConvolution* core() const;

  /// Invariant cutoff: 1 on K, 0 once |x|_h >= 1.25 (0 everywhere if K is empty).
  double invariant_cutoff(const double* x) const;
  GriddedFunction invariant_cutoff(const Grid& grid) const;

  /// Torus coefficients of W(chi f); checks the edge band.
  std::vector<Complex> warp(const GriddedFunction& f) const;
  /// f * g sampled on f's grid, with an evaluator valid everywhere.
  GriddedFunction deformed_product(const GriddedFunction& f, const GriddedFunction& g) const;

  /// (edge-band max) / (global max) of torus samples.
  double edge_ratio(const std::vector<Complex>& torus_samples) const;

  struct State;

 private:
  std::shared_ptr<const State> state_;
};

/// Fixed-function test shared by the engine and the checks.
bool is_fixed_for(const ProductEngine& engine, const GriddedFunction& f);

struct OracleSettings {
  /// Largest regulator; 0 picks 0.05 / (pi (U^2 + V^2)) from the windows.
  double epsilon0 = 0.0;
  /// Richardson levels beyond the first (epsilon0 / 2^j, j = 0..steps).
  int extrapolation_steps = 4;
  /// Relative modulus below which an input counts as outside its support.
  double support_threshold = 1e-12;
  /// Nyquist safety factor applied to the quadrature spacing.
  double spacing_factor = 0.8;
  std::size_t max_points_per_axis = 1024;
};

struct OracleResult {
  std::vector<Complex> values;
  /// Largest |T_{j,j} - T_{j-1,j-1}| over the points, one entry per level.
  std::vector<double> residual_trend;
};

/// Direct quadrature of
///   int int f(phi_{hbar Theta u} x) g(phi_v x) e^{2 pi i u.v} e^{-pi eps (|u|^2+|v|^2)} du dv
/// at the given points, Richardson-extrapolated to eps -> 0. Flows are
/// composed one field at a time. Points fixed by the action return f g.
OracleResult oscillatory_quadrature(const AdmissibleAction& action, const GriddedFunction& f,
                                    const GriddedFunction& g, const std::vector<Vec>& points,
                                    const OracleSettings& settings = {});

/// Same integral for functions on R^n with the translation action
/// (alpha_v F)(y) = F(y + v) and skew Theta; inputs need not decay, the
/// regulator supplies the windows. Used for plane-wave references.
OracleResult oscillatory_quadrature_translation(const std::function<Complex(const double*)>& F,
                                                const std::function<Complex(const double*)>& G,
                                                double bandwidth, const Mat& theta,
                                                const std::vector<Vec>& points,
                                                const OracleSettings& settings = {});

/// Bounding box, in warped coordinates, of the samples inside the open unit
/// h-ball where |f| exceeds rel * sup|f|, padded by the local grid stretch.
/// Empty when no such sample exists.
Box warped_support_box(const AdmissibleAction& action, const GriddedFunction& f,
                       double rel_threshold);

struct InclusionReport {
  bool holds = true;
  std::vector<Vec> offending;
  double largest_offending = 0.0;
};

/// Samples of f * g above 1e-9 must lie in (supp f cap supp g) cup K.
InclusionReport support_inclusion_check(const ProductEngine& engine, const GriddedFunction& f,
                                        const GriddedFunction& g, double threshold = 1e-9);

/// |(f * g)(q) - f(q) g(q)|; q must be fixed by every flow.
double delta_state_residual(const ProductEngine& engine, const Vec& q, const GriddedFunction& f,
                            const GriddedFunction& g);

/// X_j(f) at x, by a fourth-order difference along the flow of X_j.
Complex field_derivative(const AdmissibleAction& action, std::size_t j, const GriddedFunction& f,
                         const Vec& x, double step = 1e-3);

/// The semiclassical constant c in (f*g - g*f)/hbar ~ c sum Theta^{jk} X_j(f) X_k(g),
/// read off numerically from the plane-wave commutator at a small hbar.
Complex derive_semiclassical_constant();

/// sup over the grid of |(f*g - g*f)/hbar - c sum_{jk} Theta^{jk} X_j(f) X_k(g)|.
double semiclassical_residual(const ProductEngine& engine, const GriddedFunction& f,
                              const GriddedFunction& g, Complex c);

/// ||(f*g)*h - f*(g*h)||_inf / ||f*(g*h)||_inf on the grid.
double associativity_residual(const ProductEngine& engine, const GriddedFunction& f,
                              const GriddedFunction& g, const GriddedFunction& h);

/// ||(f*g)^* - g^* * f^*||_inf / ||f*g||_inf on the grid.
double involution_residual(const ProductEngine& engine, const GriddedFunction& f,
                           const GriddedFunction& g);

}  // namespace localstar
