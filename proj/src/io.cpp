#include "cbg/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cbg/error.hpp"
#include "cbg/fdtd.hpp"

namespace cbg {

std::string fmt_num(double value) {
  if (value == 0.0) return "0";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 9);
  if (res.ec != std::errc()) throw DataError("number formatting failed");
  return std::string(buf.data(), res.ptr);
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

std::string csv_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(fmt_num(v));
  return csv_row(cells);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::pair<double, double>> read_two_column_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::pair<double, double>> rows;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
    }
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1);
    double x = 0.0, y = 0.0;
    const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
    const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
    if (ra.ec != std::errc() || rb.ec != std::errc()) {
      if (!header_seen && rows.empty()) {
        header_seen = true;
        continue;
      }
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
    rows.emplace_back(x, y);
  }
  return rows;
}

std::string probe_csv(const ProbeTrace& probe) {
  std::string out = "step,time_fs,field_value\n";
  for (std::size_t n = 0; n < probe.values.size(); ++n) {
    const double t_nm = (n + 1) * probe.dt_nm;
    out += csv_row({std::to_string(n + 1), fmt_num(t_nm / kLightSpeedNmPerFs), fmt_num(probe.values[n])});
  }
  return out;
}

}  // namespace cbg
