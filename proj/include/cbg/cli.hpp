#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cbg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

std::string tool_version();

/// Records every artifact written by a command and its completeness.
class Manifest {
 public:
  Manifest(std::filesystem::path out_dir, std::string command, std::string config_hash);

  /// Artifacts the command intends to write; listed as incomplete until written.
  void expect(const std::vector<std::string>& names);
  /// Writes `text` to out_dir/name and records it.
  void write(const std::string& name, const std::string& text);
  void fail(const std::string& message);
  /// Rewrites out_dir/manifest.json; called after every artifact so an
  /// interrupted run still leaves an accurate manifest.
  void flush() const;
  bool complete() const;

 private:
  struct Entry {
    std::string name;
    std::string sha256;  // empty while not written
  };
  std::filesystem::path out_dir_;
  std::string command_;
  std::string hash_;
  std::vector<Entry> entries_;
  std::string error_;
};

/// `cbg <design|sweep|couple|budget|g2> [--config PATH] [--out DIR]
/// [--workers N] [--resolution NM] [--set section.key=value ...]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbg
