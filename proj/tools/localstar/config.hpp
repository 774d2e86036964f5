#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <localstar/types.hpp>

#include "expression.hpp"

namespace localstar::cli {

/// Usage or configuration problem (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dotted key-value configuration. Files hold `key = value` lines; `#`
/// starts a comment. Every key has a default and unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& str(const std::string& key) const;
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  /// Matrix of closed-form entries in the given variables.
  std::vector<std::vector<Expression>> expressions(const std::string& key,
                                                   const std::vector<std::string>& vars) const;
  Mat matrix(const std::string& key) const;
  std::uint64_t seed() const;

  /// All tolerance.* entries.
  std::map<std::string, double> tolerances() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Positivity of tolerances, power-of-two spectral resolutions, skew Theta
  /// at the base point. Throws ConfigError.
  void validate() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Entries recorded in artifacts: everything except the output location.
std::map<std::string, std::string> embedded_entries(const RunConfig& cfg);

std::vector<std::string> numbered(const std::string& stem, std::size_t n);

}  // namespace localstar::cli
