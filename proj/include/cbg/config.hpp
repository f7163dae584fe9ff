#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbg/pipeline.hpp"
#include "cbg/sweep.hpp"

namespace cbg {

enum class SweepMode { grid, optimize };

struct SweepSection {
  SweepMode mode = SweepMode::grid;
  std::vector<SweepAxis> axes;   // axis_<name> = v1, v2, ...
  std::vector<Bound> bounds;     // bound_<name> = lo, hi
  int levels = 2;
  int points = 5;
  ObjectiveSpec objective;
};

struct RunConfig {
  DesignSettings design;
  std::optional<SweepSection> sweep;
  /// Two-column (rho_nm, amplitude) field fixture for `couple`; empty runs the design simulation.
  std::filesystem::path couple_field;
  std::filesystem::path budget_input;
  std::filesystem::path histogram;
  double histogram_period_ns = 0.0;
  double histogram_window_ns = 0.0;
  std::filesystem::path out_dir = "out";
  int workers = 1;
  /// Sorted section.key=value lines after overrides; hashed into the manifest.
  std::string canonical;
};

/// INI text plus `section.key=value` overrides (flags win). Relative paths are
/// resolved against `base_dir`. Unknown sections or keys are rejected, and
/// every section is validated before returning.
RunConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides,
                       const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// Hex SHA-256.
std::string sha256_hex(const std::string& data);
/// Hash of the canonical config without the output section, plus the
/// contents of referenced input files.
std::string config_hash(const RunConfig& config);

}  // namespace cbg
