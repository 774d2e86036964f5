#pragma once

#include <cstddef>
#include <functional>

#include "localstar/action.hpp"
#include "localstar/types.hpp"

namespace localstar {

struct OdeSettings {
  double rtol = 1e-12;
  double atol = 1e-14;
  std::size_t max_steps = 200000;
};

/// Adaptive Dormand-Prince 5(4) integration of x' = F(x) over [0, t].
/// Reference integrator for validating the conjugation flows; production
/// code never calls it. Throws Error when the step budget runs out.
Vec integrate_autonomous(const std::function<Vec(const Vec&)>& field, double t, const Vec& x0,
                         const OdeSettings& settings = {});

/// The flow of the i-th shrunken field obtained by integrating its ODE.
Vec integrate_flow(const AdmissibleAction& action, std::size_t i, double t, const Vec& x,
                   const OdeSettings& settings = {});

}  // namespace localstar
