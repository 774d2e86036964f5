#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "localstar/types.hpp"

namespace localstar {

/// Regular tensor grid with inclusive endpoints: x_j = lo + j (hi - lo) / (count - 1).
/// Flat indices are row-major (axis 0 slowest).
struct Grid {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::size_t> count;

  Grid() = default;
  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> count);
  static Grid cube(std::size_t n, double half_width, std::size_t points);

  std::size_t dim() const { return lo.size(); }
  std::size_t size() const;
  double spacing(std::size_t axis) const;
  double coord(std::size_t axis, std::size_t j) const;
  void point(std::size_t flat, double* out) const;
  Vec point(std::size_t flat) const;
  Box box() const { return Box{lo, hi}; }

  bool operator==(const Grid& other) const {
    return lo == other.lo && hi == other.hi && count == other.count;
  }
  bool operator!=(const Grid& other) const { return !(*this == other); }
};

using Evaluator = std::function<Complex(const double*)>;

enum class Provenance { ClosedForm, Resampled, Product };

const char* to_string(Provenance p);

/// Spectral payload a product engine attaches to its outputs so that a
/// later product on the same engine reuses the exact torus coefficients.
struct SpectralTag {
  const void* owner = nullptr;
  std::shared_ptr<const std::vector<Complex>> coefficients;
};

/// Separable cubic B-spline interpolant of gridded complex samples
/// (mirror boundary). Returns 0 outside the grid box.
class SplineSampler {
 public:
  SplineSampler() = default;
  SplineSampler(const Grid& grid, const std::vector<Complex>& values);

  Complex operator()(const double* x) const;

 private:
  Grid grid_;
  std::vector<Complex> coeffs_;
};

/// Complex samples on a Grid plus an optional closed-form evaluator. The
/// evaluator, when present, is authoritative off the grid; otherwise a
/// cubic spline of the samples is used.
class GriddedFunction {
 public:
  static constexpr double kSupportThreshold = 1e-14;

  GriddedFunction() = default;

  static GriddedFunction from_closed_form(const Grid& grid, Evaluator f,
                                          std::optional<Box> declared_support = std::nullopt);
  static GriddedFunction constant(const Grid& grid, Complex value);
  static GriddedFunction from_samples(const Grid& grid, std::vector<Complex> values);
  static GriddedFunction assemble(const Grid& grid, std::vector<Complex> values, Evaluator f,
                                  Provenance provenance, std::optional<Box> declared_support,
                                  std::optional<SpectralTag> tag = std::nullopt);

  const Grid& grid() const { return grid_; }
  std::size_t dim() const { return grid_.dim(); }
  const std::vector<Complex>& values() const { return values_; }
  Provenance provenance() const { return provenance_; }
  bool is_constant() const { return constant_.has_value(); }
  Complex constant_value() const { return constant_.value_or(Complex{}); }
  /// Declared support clipped to the domain, or the tight bounding box of
  /// samples with modulus above kSupportThreshold.
  const Box& support() const { return support_; }
  bool has_declared_support() const { return declared_; }
  bool has_evaluator() const { return static_cast<bool>(eval_); }
  const std::optional<SpectralTag>& spectral_tag() const { return tag_; }

  Complex operator()(const double* x) const;
  Complex operator()(const Vec& x) const { return (*this)(x.data()); }

  GriddedFunction conj() const;
  /// Same samples, evaluator replaced by the spline interpolant.
  GriddedFunction resampled() const;
  double sup_abs() const;

 private:
  Grid grid_;
  std::vector<Complex> values_;
  Evaluator eval_;
  std::shared_ptr<const SplineSampler> spline_;
  Provenance provenance_ = Provenance::ClosedForm;
  std::optional<Complex> constant_;
  Box support_;
  bool declared_ = false;
  std::optional<SpectralTag> tag_;

  void finish(std::optional<Box> declared_support);
};

/// Pointwise product; samples are multiplied bitwise, evaluators composed.
GriddedFunction pointwise_product(const GriddedFunction& a, const GriddedFunction& b);

/// Samples of f on `grid` (evaluator or spline), keeping f's evaluator.
GriddedFunction regrid(const GriddedFunction& f, const Grid& grid);

/// max |a - b| over the shared grid samples.
double max_abs_difference(const GriddedFunction& a, const GriddedFunction& b);

/// sup |f| over grid samples inside `region`; with `refine`, the best few
/// samples are polished by a local pattern search on the evaluator.
double sup_norm(const GriddedFunction& f, const Box& region, bool refine = false);

}  // namespace localstar
