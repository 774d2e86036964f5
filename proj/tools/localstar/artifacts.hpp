#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace localstar::cli {

struct Axis {
  std::string name;
  std::vector<double> points;
};

/// A tensor-grid table: one CSV row per grid point (row-major over the axes,
/// last axis fastest) with the axis coordinates followed by value columns,
/// plus a JSON sidecar describing axes, columns and run metadata.
struct GridArtifact {
  std::vector<Axis> axes;
  std::vector<std::string> columns;
  /// values[c][row]
  std::vector<std::vector<double>> values;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t rows() const;
  /// Throws std::logic_error when a column length differs from the axis product.
  void check() const;
  /// Writes `<stem>.csv` and `<stem>.json` under dir; returns the CSV path.
  std::string write(const std::string& dir, const std::string& stem) const;
};

Axis uniform_axis(const std::string& name, double lo, double hi, std::size_t count);

/// Writes JSON with sorted keys and a trailing newline.
void write_json(const std::string& path, const nlohmann::json& j);

/// Creates the directory (and parents) or throws.
void ensure_directory(const std::string& dir);

}  // namespace localstar::cli
