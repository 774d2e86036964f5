#pragma once

#include <vector>

#include <localstar/twisted.hpp>

namespace localstar::testing {

/// Twisted convolution by the defining double sum over the lattice
/// |p_a|, |q_a| <= N/2 - 1, truncated to the same lattice. O(M^2) in the
/// number of modes; for small tori only.
std::vector<Complex> direct_twisted_convolution(const TwistedConvolution& layout,
                                                const std::vector<Complex>& a,
                                                const std::vector<Complex>& b);

/// Coefficients -> value at w by the defining sum.
Complex direct_evaluate(const TwistedConvolution& layout, const std::vector<Complex>& coeffs,
                        const double* w);

}  // namespace localstar::testing
