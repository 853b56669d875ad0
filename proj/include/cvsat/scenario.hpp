#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvsat/toml_lite.hpp"

namespace cvsat {

inline constexpr const char* kVersion = "0.1.0";

/// One sweep of a satellite-link scenario: fixed column set, one row per
/// sweep point. Serializations are byte-stable for a fixed seed and
/// version; timing stays out of the data files.
struct RunReport {
  std::string version = kVersion;
  uint64_t seed = 0;
  std::string scheme;
  std::string sweep_parameter;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  double elapsed_seconds = 0.0;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Validates the config, builds the per-scheme channel composition, and
/// evaluates the requested metrics across the sweep.
RunReport run_scenario(const toml::Value& config);
RunReport run_scenario_file(const std::string& path);

/// Writes report.<format> into the directory (created if needed) and
/// returns the file path.
std::string write_report(const RunReport& report, const std::string& directory,
                         const std::string& format);

}  // namespace cvsat
