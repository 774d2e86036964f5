#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace localstar::cli {

/// Exit codes shared by every command.
enum ExitCode : int { kPass = 0, kFailure = 1, kUsage = 2 };

int cmd_build_theta(const RunConfig& cfg);
/// level is one of fiber, tm, mxm, m.
int cmd_product(const RunConfig& cfg, const std::string& level);
int cmd_verify(const RunConfig& cfg, const std::vector<std::string>& suites);
int cmd_sweep(const RunConfig& cfg, const std::string& param, const std::vector<double>& values);
/// compactum: a cube half-width "h" or per-axis ranges "lo:hi,lo:hi".
int cmd_seminorm(const RunConfig& cfg, const std::string& compactum, std::size_t basis);

/// Parses the --compactum argument for an n-dimensional fibre.
std::vector<std::pair<double, double>> parse_compactum(const std::string& text, std::size_t n);

}  // namespace localstar::cli
