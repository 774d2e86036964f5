#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace localstar {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad index, wrong sign, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A construction-time check failed; `invariant()` names what was violated.
class InvariantError : public Error {
 public:
  InvariantError(std::string invariant, const std::string& what)
      : Error(what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// The periodic embedding used by the product engine is too small for the
/// inputs; carries the half-width that would have been needed.
class MarginOverflow : public Error {
 public:
  MarginOverflow(const std::string& what, double observed_edge_ratio,
                 double required_half_width)
      : Error(what),
        observed_edge_ratio_(observed_edge_ratio),
        required_half_width_(required_half_width) {}
  double observed_edge_ratio() const noexcept { return observed_edge_ratio_; }
  double required_half_width() const noexcept { return required_half_width_; }

 private:
  double observed_edge_ratio_;
  double required_half_width_;
};

/// Axis-aligned box in R^n.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool empty() const;
  bool contains(const double* x, double slack = 0.0) const;
  bool contains(const Vec& x, double slack = 0.0) const { return contains(x.data(), slack); }
  bool contains(const Box& other) const;
  Box inflated(double fraction) const;
  Box padded(double amount) const;

  static Box cube(std::size_t n, double half_width);
  static Box empty_box(std::size_t n);
};

}  // namespace localstar
