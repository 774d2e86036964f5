#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <localstar/action.hpp>
#include <localstar/grid.hpp>
#include <localstar/poisson.hpp>
#include <localstar/spacetime.hpp>
#include <localstar/starproduct.hpp>

#include "config.hpp"

namespace localstar::cli {

std::vector<Vec> base_samples(const RunConfig& cfg);
Vec base_point(const RunConfig& cfg);

/// Structure from the bundle.* and theta.* entries; errors name the
/// violated construction check.
AdmissibleStructure build_structure(const RunConfig& cfg);
AdmissibleAction fiber_action(const RunConfig& cfg, double hbar);
/// Cube covering fiber.margin times the unit h-ball.
Grid fiber_grid(const RunConfig& cfg, const AdmissibleAction& action);
EngineSettings engine_settings(const RunConfig& cfg);

BaseGeometry base_geometry(const RunConfig& cfg);
TowerSettings tower_settings(const RunConfig& cfg);

GriddedFunction fiber_function(const Grid& grid, const Expression& e);
Expression config_expression(const RunConfig& cfg, const std::string& key,
                             const std::vector<std::string>& vars);

/// Tower-level functions from config expressions: M x M in (a, b), TM in
/// (v, p) so that bump() centres refer to the fibre variables, M in q.
MxMFunction mxm_function(const RunConfig& cfg, const std::string& key);
TMFunction tm_function(const RunConfig& cfg, const std::string& key);
MFunction m_function(const RunConfig& cfg, const std::string& key);

/// exp(-|L^T x - c|^2 / (2 s^2)) e^{i k . L^T x} with random centre |c| <= 0.1,
/// width in [0.05, 0.07], wave vector |k_a| <= 3 and a unit complex amplitude,
/// so that the bump sits in the identity region of every fibre metric.
GriddedFunction random_bump(const Grid& grid, const Mat& cholesky, std::mt19937_64& rng,
                            double centre_radius = 0.1);

}  // namespace localstar::cli
