#pragma once

#include <cstddef>
#include <vector>

#include "localstar/action.hpp"
#include "localstar/grid.hpp"
#include "localstar/starproduct.hpp"
#include "localstar/types.hpp"

namespace localstar {

enum class BasisKind { Fourier, Hermite };

struct NormSettings {
  BasisKind basis = BasisKind::Fourier;
  /// Fourier: torus points per axis (modes |k| <= truncation/2 - 1).
  /// Hermite: functions per axis.
  std::size_t truncation = 32;
  /// Sampled base points per axis of L cap K.
  std::size_t q_samples = 3;
  /// Relative convergence target for the largest Ritz value.
  double lanczos_tol = 1e-10;
  std::size_t lanczos_max_steps = 120;
  /// Fourier bases up to this size use a dense SVD.
  std::size_t dense_limit = 256;
  /// Modulus below which the symbol counts as zero when sizing the torus.
  double support_threshold = 1e-12;
  /// Largest admissible Gram condition number for non-orthonormal bases.
  double max_condition = 1e8;
};

struct SeminormEstimate {
  double value = 0.0;
  /// Largest operator norm over the sampled q in the open unit h-ball.
  double operator_part = 0.0;
  /// sup |a| over the grid points of L fixed by the action.
  double fixed_part = 0.0;
  std::size_t basis_size = 0;
  std::size_t sampled_points = 0;
  double gram_condition = 1.0;
  bool converged = true;
};

/// v -> a(phi_v q): the scalarized orbit map of a at q.
Evaluator orbit_symbol(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q);

/// Galerkin matrix <b_k, s * b_l> of left multiplication by the symbol at q
/// (translation action on V, skew matrix hbar Theta). Fourier basis only;
/// throws DomainError beyond 4096 basis functions.
CMat left_operator_matrix(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q,
                          const NormSettings& settings = {});

/// Largest singular value of the truncated operator at q.
double operator_norm_at(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q,
                        const NormSettings& settings, double* gram_condition = nullptr,
                        bool* converged = nullptr);

/// Estimate of ||a||_{Theta,L}: the max over sampled q in L of the operator
/// norm; fixed points of L contribute |a(q)|. Biased downward.
SeminormEstimate deformed_seminorm(const AdmissibleAction& action, const GriddedFunction& a,
                                   const Box& L, const NormSettings& settings = {});

/// Estimates at several truncations.
std::vector<SeminormEstimate> truncation_curve(const AdmissibleAction& action,
                                               const GriddedFunction& a, const Box& L,
                                               const std::vector<std::size_t>& truncations,
                                               NormSettings settings = {});

/// | ||a^* * a||_{Theta,L} - ||a||_{Theta,L}^2 | / ||a||_{Theta,L}^2.
double cstar_identity_residual(const ProductEngine& engine, const GriddedFunction& a,
                               const Box& L, const NormSettings& settings = {});

/// | ||a 1_{L'}||_{Theta,L} - ||a||_{Theta,L} | for L inside L'; zero for L = L'.
double restriction_compatibility(const AdmissibleAction& action, const GriddedFunction& a,
                                 const Box& L, const Box& L_outer,
                                 const NormSettings& settings = {});

/// max(0, ||a * b||_{Theta,L} - ||a||_{Theta,L} ||b||_{Theta,L}).
double submultiplicativity_excess(const ProductEngine& engine, const GriddedFunction& a,
                                  const GriddedFunction& b, const Box& L,
                                  const NormSettings& settings = {});

}  // namespace localstar
