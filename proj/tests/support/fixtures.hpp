#pragma once

#include <random>
#include <vector>

#include <localstar/action.hpp>
#include <localstar/grid.hpp>
#include <localstar/starproduct.hpp>

namespace localstar::testing {

inline Mat symplectic() {
  Mat j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

/// Identity metric and sections on R^2 with Theta = J.
AdmissibleAction standard_action(double hbar);

/// Random SPD metric, invertible sections and skew Theta on R^2. Theta is
/// scaled so the warped twist is 0.8 to 1 times the standard one.
AdmissibleAction random_action(double hbar, std::mt19937_64& rng);

/// Cube covering `margin` times K's bounding box.
Grid covering_grid(const AdmissibleAction& action, std::size_t points, double margin = 1.2);

/// exp(-|L^T x - c|^2 / (2 s^2)) e^{i k . L^T x} with |c| <= centre_radius,
/// s in [0.05, 0.07], |k_a| <= 3 and a unit complex amplitude.
GriddedFunction random_bump(const Grid& grid, const AdmissibleAction& action, std::mt19937_64& rng,
                            double centre_radius = 0.1);

/// Bump centred at h-radius 1.35, narrow enough that it is fixed.
GriddedFunction outside_bump(const Grid& grid, const AdmissibleAction& action, std::mt19937_64& rng);

GriddedFunction add(const GriddedFunction& a, const GriddedFunction& b);

Vec random_in_ball(std::size_t n, double radius, std::mt19937_64& rng);

/// max |prod - f g| over the shared samples.
double pointwise_deviation(const GriddedFunction& prod, const GriddedFunction& f,
                           const GriddedFunction& g);

}  // namespace localstar::testing
