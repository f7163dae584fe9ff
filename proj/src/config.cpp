#include "cbg/config.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "cbg/error.hpp"
#include "cbg/io.hpp"

namespace cbg {

namespace {

namespace pt = boost::property_tree;

using Table = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"structure",
       {"kind", "radial_period_nm", "center_disk_radius_nm", "thickness_nm", "num_rings", "material_index",
        "hole_diameter_nm", "azimuthal_period_nm", "smearing", "trench_width_nm"}},
      {"simulation",
       {"resolution_nm", "padding_nm", "pml_cells", "domain_radius_nm", "domain_height_nm", "subpixel_smoothing",
        "courant", "max_steps", "decay_threshold", "dft_stride", "record_stride", "energy_interval", "pml_order",
        "pml_sigma_scale", "pml_alpha_fraction", "backend", "band_min_nm", "band_max_nm", "band_step_nm",
        "plane_gap_nm", "pulse_center_nm", "pulse_bandwidth_nm", "fit_window_fwhm", "fit_residual_threshold"}},
      {"farfield", {"na", "theta_step_deg", "phi_step_deg", "azimuthal_average"}},
      {"fiber", {"mfd_nm", "na", "dx_nm", "field_file"}},
      {"sweep", {"mode", "levels", "points", "objective_na", "wavelength", "composite"}},
      {"budget", {"input"}},
      {"g2", {"histogram", "period_ns", "window_ns"}},
      {"output", {"dir", "workers"}},
  };
  return keys;
}

bool is_prefixed(const std::string& section, const std::string& key) {
  return section == "sweep" && (key.rfind("axis_", 0) == 0 || key.rfind("bound_", 0) == 0);
}

void check_key(const std::string& section, const std::string& key) {
  const auto& keys = known_keys();
  const auto it = keys.find(section);
  if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
  if (!it->second.count(key) && !is_prefixed(section, key)) {
    throw ConfigError("unknown config key '" + section + "." + key + "'");
  }
}

double parse_double(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(where + ": '" + t + "' is not a number");
  }
  return v;
}

int parse_int(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(where + ": '" + t + "' is not an integer");
  }
  return v;
}

bool parse_bool(const std::string& where, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(where + ": '" + t + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& where, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(where, item));
  }
  return out;
}

class Reader {
 public:
  Reader(const Table& t, std::filesystem::path base) : table_(t), base_(std::move(base)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    const auto s = table_.find(section);
    if (s == table_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  void number(const std::string& section, const std::string& key, double& out) const {
    if (const auto* v = raw(section, key)) out = parse_double(section + "." + key, *v);
  }
  void integer(const std::string& section, const std::string& key, int& out) const {
    if (const auto* v = raw(section, key)) out = parse_int(section + "." + key, *v);
  }
  void flag(const std::string& section, const std::string& key, bool& out) const {
    if (const auto* v = raw(section, key)) out = parse_bool(section + "." + key, *v);
  }
  void path(const std::string& section, const std::string& key, std::filesystem::path& out) const {
    if (const auto* v = raw(section, key)) {
      const std::filesystem::path p = trim(*v);
      out = p.is_absolute() ? p : base_ / p;
    }
  }
  const Table& table() const { return table_; }

 private:
  const Table& table_;
  std::filesystem::path base_;
};

StructureSpec read_structure(const Reader& r) {
  const std::string* kind_text = r.raw("structure", "kind");
  const std::string kind = kind_text ? trim(*kind_text) : "hcbg";
  StructureSpec spec;
  if (kind == "hcbg") {
    HCbgSpec h;
    if (r.raw("structure", "trench_width_nm")) throw ConfigError("structure.trench_width_nm applies to rcbg only");
    r.number("structure", "hole_diameter_nm", h.hole_diameter_nm);
    r.number("structure", "azimuthal_period_nm", h.azimuthal_period_nm);
    if (const auto* v = r.raw("structure", "smearing")) {
      const std::string s = trim(*v);
      if (s == "annulus") h.smearing = EmtSmearing::annulus;
      else if (s == "period") h.smearing = EmtSmearing::period;
      else throw ConfigError("structure.smearing must be 'annulus' or 'period'");
    }
    spec = h;
  } else if (kind == "rcbg") {
    RCbgSpec c;
    for (const char* k : {"hole_diameter_nm", "azimuthal_period_nm", "smearing"}) {
      if (r.raw("structure", k)) throw ConfigError(std::string("structure.") + k + " applies to hcbg only");
    }
    r.number("structure", "trench_width_nm", c.trench_width_nm);
    spec = c;
  } else {
    throw ConfigError("structure.kind must be 'hcbg' or 'rcbg', got '" + kind + "'");
  }
  std::visit(
      [&](auto& s) {
        r.number("structure", "radial_period_nm", s.radial_period_nm);
        r.number("structure", "center_disk_radius_nm", s.center_disk_radius_nm);
        r.number("structure", "thickness_nm", s.thickness_nm);
        r.integer("structure", "num_rings", s.num_rings);
        r.number("structure", "material_index", s.material_index);
      },
      spec);
  return spec;
}

void read_simulation(const Reader& r, DesignSettings& d) {
  const std::string s = "simulation";
  r.number(s, "resolution_nm", d.grid.resolution_nm);
  r.number(s, "padding_nm", d.grid.padding_nm);
  r.integer(s, "pml_cells", d.grid.pml_cells);
  r.number(s, "domain_radius_nm", d.grid.domain_radius_nm);
  r.number(s, "domain_height_nm", d.grid.domain_height_nm);
  r.flag(s, "subpixel_smoothing", d.grid.subpixel_smoothing);
  r.number(s, "courant", d.simulation.courant);
  r.integer(s, "max_steps", d.simulation.max_steps);
  r.number(s, "decay_threshold", d.simulation.decay_threshold);
  r.integer(s, "dft_stride", d.simulation.dft_stride);
  r.integer(s, "record_stride", d.simulation.record_stride);
  r.integer(s, "energy_interval", d.simulation.energy_interval);
  r.integer(s, "pml_order", d.simulation.pml_order);
  r.number(s, "pml_sigma_scale", d.simulation.pml_sigma_scale);
  r.number(s, "pml_alpha_fraction", d.simulation.pml_alpha_fraction);
  if (const auto* v = r.raw(s, "backend")) {
    const std::string b = trim(*v);
    if (b == "openmp") d.simulation.backend = KernelBackend::openmp;
    else if (b == "serial") d.simulation.backend = KernelBackend::serial;
    else throw ConfigError("simulation.backend must be 'openmp' or 'serial'");
  }
  r.number(s, "band_min_nm", d.band_min_nm);
  r.number(s, "band_max_nm", d.band_max_nm);
  r.number(s, "band_step_nm", d.band_step_nm);
  r.number(s, "plane_gap_nm", d.plane_gap_nm);
  r.number(s, "pulse_center_nm", d.source.pulse.center_nm);
  r.number(s, "pulse_bandwidth_nm", d.source.pulse.bandwidth_nm);
  r.number(s, "fit_window_fwhm", d.fit.window_fwhm);
  r.number(s, "fit_residual_threshold", d.fit.residual_threshold);
}

SweepSection read_sweep(const Reader& r) {
  SweepSection sw;
  const auto& entries = r.table().at("sweep");
  if (const auto* v = r.raw("sweep", "mode")) {
    const std::string m = trim(*v);
    if (m == "grid") sw.mode = SweepMode::grid;
    else if (m == "optimize") sw.mode = SweepMode::optimize;
    else throw ConfigError("sweep.mode must be 'grid' or 'optimize'");
  }
  r.integer("sweep", "levels", sw.levels);
  r.integer("sweep", "points", sw.points);
  r.number("sweep", "objective_na", sw.objective.na);
  r.flag("sweep", "composite", sw.objective.composite);
  if (const auto* v = r.raw("sweep", "wavelength")) {
    const std::string w = trim(*v);
    if (w == "resonance") {
      sw.objective.rule = WavelengthRule::at_resonance;
    } else {
      sw.objective.rule = WavelengthRule::fixed;
      sw.objective.fixed_wavelength_nm = parse_double("sweep.wavelength", w);
    }
  }
  // std::map iteration keeps axes in name order, so the plan is independent of file order.
  for (const auto& [key, value] : entries) {
    if (key.rfind("axis_", 0) == 0) {
      sw.axes.push_back({key.substr(5), parse_list("sweep." + key, value)});
    } else if (key.rfind("bound_", 0) == 0) {
      const auto v = parse_list("sweep." + key, value);
      if (v.size() != 2) throw ConfigError("sweep." + key + " needs 'lo, hi'");
      sw.bounds.push_back({key.substr(6), v[0], v[1]});
    }
  }
  if (sw.mode == SweepMode::grid && sw.axes.empty()) throw ConfigError("grid sweep needs at least one axis_<name>");
  if (sw.mode == SweepMode::optimize && sw.bounds.empty()) {
    throw ConfigError("optimize sweep needs at least one bound_<name>");
  }
  return sw;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  // Output placement and worker count do not change any artifact; input
  // files enter by content.
  std::string text;
  std::istringstream in(config.canonical);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("output.", 0) != 0) text += line + "\n";
  }
  for (const auto* p : {&config.couple_field, &config.budget_input, &config.histogram}) {
    if (!p->empty() && std::filesystem::exists(*p)) text += "file " + sha256_hex(read_text(*p)) + "\n";
  }
  return sha256_hex(text);
}

RunConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides,
                       const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  Table table;
  for (const auto& [section, child] : tree) {
    if (child.empty() && !child.data().empty()) {
      throw ConfigError("config key '" + section + "' is outside any [section]");
    }
    table[section];
    for (const auto& [key, value] : child) {
      check_key(section, key);
      table[section][key] = trim(value.data());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ConfigError("override '" + o + "' must look like section.key=value");
    }
    const std::string section = trim(o.substr(0, dot));
    const std::string key = trim(o.substr(dot + 1, eq - dot - 1));
    check_key(section, key);
    table[section][key] = trim(o.substr(eq + 1));
  }

  RunConfig cfg;
  for (const auto& [section, entries] : table) {
    for (const auto& [key, value] : entries) cfg.canonical += section + "." + key + "=" + value + "\n";
  }
  const Reader r(table, base_dir);
  cfg.design.structure = read_structure(r);
  read_simulation(r, cfg.design);
  r.number("farfield", "na", cfg.design.na);
  r.number("farfield", "theta_step_deg", cfg.design.farfield.theta_step_deg);
  r.number("farfield", "phi_step_deg", cfg.design.farfield.phi_step_deg);
  r.flag("farfield", "azimuthal_average", cfg.design.farfield.azimuthal_average);
  r.number("fiber", "mfd_nm", cfg.design.fiber_mfd_nm);
  r.number("fiber", "na", cfg.design.fiber_na);
  if (const auto* v = r.raw("fiber", "dx_nm")) cfg.design.dx_nm = parse_list("fiber.dx_nm", *v);
  if (cfg.design.dx_nm.empty()) {
    for (int i = 0; i <= 16; ++i) cfg.design.dx_nm.push_back(250.0 * i);
  }
  r.path("fiber", "field_file", cfg.couple_field);
  r.path("budget", "input", cfg.budget_input);
  r.path("g2", "histogram", cfg.histogram);
  r.number("g2", "period_ns", cfg.histogram_period_ns);
  r.number("g2", "window_ns", cfg.histogram_window_ns);
  if (const auto* v = r.raw("output", "dir")) cfg.out_dir = trim(*v);
  r.integer("output", "workers", cfg.workers);
  if (table.count("sweep")) cfg.sweep = read_sweep(r);

  // Fail fast: everything that can be checked without running is checked here.
  try {
    cfg.design.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.workers < 1) throw ConfigError("output.workers must be >= 1");
  if (cfg.sweep) {
    const auto& sw = *cfg.sweep;
    if (sw.mode == SweepMode::grid) {
      SweepPlan plan{cfg.design.structure, sw.axes, sw.objective};
      plan.validate();
    } else {
      if (sw.levels < 1 || sw.points < 2) throw ConfigError("sweep needs levels >= 1 and points >= 2");
      StructureSpec probe = cfg.design.structure;
      for (const auto& b : sw.bounds) {
        if (!(b.hi > b.lo)) throw ConfigError("sweep bound '" + b.name + "' needs lo < hi");
        for (double v : {b.lo, b.hi}) {
          apply_parameter(probe, b.name, v);
          try {
            validate(probe);
          } catch (const std::invalid_argument& e) {
            throw ConfigError("sweep bound '" + b.name + "' = " + fmt_num(v) + " is invalid: " + e.what());
          }
          apply_parameter(probe, b.name, get_parameter(cfg.design.structure, b.name));
        }
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  const std::string text = read_text(path);
  return parse_config(text, overrides, path.has_parent_path() ? path.parent_path() : ".");
}

}  // namespace cbg
