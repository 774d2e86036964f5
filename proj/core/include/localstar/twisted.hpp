#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "localstar/types.hpp"

namespace localstar {

/// Trigonometric polynomials on the torus [-H, H)^n, sampled at
/// w_j = -H + j T / N (T = 2H) and expanded as sum_k c_k e^{2 pi i k.(w + H)/T}.
/// Coefficients are stored in FFT order (axis index k mod N, row-major) on
/// the symmetric lattice |k_a| <= N/2 - 1; the Nyquist mode is always zero.
///
/// convolve() is the twisted convolution
///   c_k = sum_{p+q=k} a_p b_q exp(-2 pi i (p/T).Theta (q/T)),
/// truncated to the lattice. For n = 2 it runs in O(N^3 log N) through the
/// mixed representation F*G(y) = sum_{p1,q1} e^{2 pi i (p1+q1) y1/T}
/// A_{p1}(y2 + theta q1/T) B_{q1}(y2 - theta p1/T).
/// Thread-safe after construction.
class TwistedConvolution {
 public:
  TwistedConvolution(std::size_t dim, std::size_t points, double half_width, const Mat& theta);
  ~TwistedConvolution();
  TwistedConvolution(const TwistedConvolution&) = delete;
  TwistedConvolution& operator=(const TwistedConvolution&) = delete;

  std::size_t dim() const { return dim_; }
  std::size_t points() const { return n_; }
  int max_mode() const { return static_cast<int>(n_ / 2) - 1; }
  double half_width() const { return half_width_; }
  double period() const { return 2.0 * half_width_; }
  const Mat& theta() const { return theta_; }
  std::size_t size() const { return total_; }
  double coord(std::size_t j) const;

  /// Samples on the torus grid -> truncated coefficients.
  std::vector<Complex> analyze(const std::vector<Complex>& samples) const;
  /// Coefficients -> samples on the torus grid.
  std::vector<Complex> synthesize(const std::vector<Complex>& coeffs) const;
  std::vector<Complex> convolve(const std::vector<Complex>& a,
                                const std::vector<Complex>& b) const;
  /// Direct evaluation of the polynomial at an arbitrary point.
  Complex evaluate(const std::vector<Complex>& coeffs, const double* w) const;

  /// Flat index of the signed mode k (|k_a| <= max_mode()).
  std::size_t index(const int* k) const;

 private:
  struct Plans;

  std::size_t dim_;
  std::size_t n_;
  std::size_t total_;
  double half_width_;
  Mat theta_;
  std::unique_ptr<Plans> plans_;
  std::vector<Complex> phase_;  // e^{2 pi i theta' m p}, (2K+1)^2 table

  std::vector<Complex> convolve_padded(const std::vector<Complex>& a,
                                       const std::vector<Complex>& b) const;
  std::vector<Complex> convolve_mixed(const std::vector<Complex>& a,
                                      const std::vector<Complex>& b) const;
};

/// Convenience wrapper: twisted convolution of two coefficient arrays on
/// the lattice of an N^n torus of half-width H with skew matrix Theta.
std::vector<Complex> moyal_twisted_convolution(const std::vector<Complex>& a,
                                               const std::vector<Complex>& b, std::size_t dim,
                                               std::size_t points, double half_width,
                                               const Mat& theta);

}  // namespace localstar
