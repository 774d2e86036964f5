#include "artifacts.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace localstar::cli {

std::size_t GridArtifact::rows() const {
  std::size_t n = 1;
  for (const Axis& a : axes) n *= a.points.size();
  return n;
}

void GridArtifact::check() const {
  if (columns.size() != values.size()) throw std::logic_error("artifact column count mismatch");
  const std::size_t n = rows();
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (values[c].size() != n) {
      throw std::logic_error(fmt::format("artifact column '{}' has {} rows, axes describe {}",
                                         columns[c], values[c].size(), n));
    }
  }
}

std::string GridArtifact::write(const std::string& dir, const std::string& stem) const {
  check();
  ensure_directory(dir);
  const std::string csv = (std::filesystem::path(dir) / (stem + ".csv")).string();
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", csv));
  std::string header;
  for (const Axis& a : axes) header += (header.empty() ? "" : ",") + a.name;
  for (const std::string& c : columns) header += (header.empty() ? "" : ",") + c;
  out << header << '\n';
  const std::size_t n = rows();
  std::vector<std::size_t> idx(axes.size(), 0);
  std::string line;
  for (std::size_t r = 0; r < n; ++r) {
    line.clear();
    std::size_t flat = r;
    for (std::size_t a = axes.size(); a-- > 0;) {
      idx[a] = flat % axes[a].points.size();
      flat /= axes[a].points.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if (!line.empty()) line += ',';
      line += fmt::format("{:.17g}", axes[a].points[idx[a]]);
    }
    for (const auto& col : values) {
      if (!line.empty()) line += ',';
      line += fmt::format("{:.17g}", col[r]);
    }
    out << line << '\n';
  }
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", csv));

  nlohmann::json side = metadata;
  nlohmann::json ax = nlohmann::json::array();
  for (const Axis& a : axes) {
    nlohmann::json d{{"name", a.name}, {"count", a.points.size()}};
    if (!a.points.empty()) {
      d["lo"] = a.points.front();
      d["hi"] = a.points.back();
      d["points"] = a.points;
    }
    ax.push_back(d);
  }
  side["axes"] = ax;
  side["columns"] = columns;
  side["rows"] = n;
  side["csv"] = stem + ".csv";
  write_json((std::filesystem::path(dir) / (stem + ".json")).string(), side);
  return csv;
}

Axis uniform_axis(const std::string& name, double lo, double hi, std::size_t count) {
  Axis a{name, std::vector<double>(count)};
  for (std::size_t j = 0; j < count; ++j) {
    a.points[j] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  return a;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out << j.dump(2) << '\n';
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir, ec.message()));
}

}  // namespace localstar::cli
