#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace localstar::cli {

enum class Relation { AtMost, AtLeast, Below, Exactly };

struct CheckResult {
  std::string suite;
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  Relation relation = Relation::AtMost;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  nlohmann::json to_json(const RunConfig& cfg) const;
};

/// Suite names in run order.
const std::vector<std::string>& suite_names();

/// Runs the named suites (all when `filter` is empty). Unknown names raise
/// ConfigError. Reports carry no timings so repeated runs compare equal.
VerifyReport run_suites(const RunConfig& cfg, const std::vector<std::string>& filter);

}  // namespace localstar::cli
