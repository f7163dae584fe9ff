#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cbg {

/// Locale-independent shortest representation with at most 9 significant digits.
std::string fmt_num(double value);

/// Joins already formatted cells with commas and appends a newline.
std::string csv_row(const std::vector<std::string>& cells);
std::string csv_row(const std::vector<double>& values);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Two-column numeric CSV with a header line; blank lines and lines starting
/// with '#' are skipped.
std::vector<std::pair<double, double>> read_two_column_csv(const std::filesystem::path& path);

/// Probe trace as CSV with columns step, time_fs, field_value.
struct ProbeTrace;
std::string probe_csv(const ProbeTrace& probe);

}  // namespace cbg
