#include "cbg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cbg/error.hpp"

namespace cbg {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw SpecError(std::string(name) + " must be positive, got " + std::to_string(v));
  }
}

struct Layout {
  double dr = 0.0;
  double dz = 0.0;
  int nr = 0;
  int nz = 0;
  int pml = 0;
  double z_mid = 0.0;
};

Layout make_layout(const GridSpec& grid, double device_radius, double thickness) {
  validate(grid);
  Layout l;
  l.dr = l.dz = grid.resolution_nm;
  l.pml = grid.pml_cells;
  const double pml_len = l.pml * l.dr;

  double radius = grid.domain_radius_nm;
  if (radius <= 0.0) radius = device_radius + grid.padding_nm + pml_len;
  if (radius < device_radius + pml_len) {
    throw SpecError("domain radius " + std::to_string(radius) +
                    " nm cannot contain the device (" + std::to_string(device_radius) +
                    " nm) plus the absorbing layer");
  }
  l.nr = static_cast<int>(std::ceil(radius / l.dr - 1e-9));

  double height = grid.domain_height_nm;
  if (height <= 0.0) height = thickness + 2.0 * grid.padding_nm + 2.0 * pml_len;
  if (height < thickness + 2.0 * pml_len + 2.0 * l.dz) {
    throw SpecError("domain height too small for membrane plus absorbing layers");
  }
  // Even cell count keeps the mid-plane on a node.
  int half = static_cast<int>(std::ceil(0.5 * height / l.dz - 1e-9));
  l.nz = 2 * half;
  l.z_mid = half * l.dz;
  return l;
}

// Fills the map by sampling `eps_at(r, z)` at cell centres, or by r-weighted
// supersampling when smoothing is requested.
template <typename F>
std::vector<double> rasterize(const Layout& l, bool smoothing, F&& eps_at) {
  std::vector<double> eps(static_cast<std::size_t>(l.nr) * l.nz);
  constexpr int kSub = 8;
  for (int i = 0; i < l.nr; ++i) {
    for (int k = 0; k < l.nz; ++k) {
      double value = 0.0;
      if (!smoothing) {
        value = eps_at((i + 0.5) * l.dr, (k + 0.5) * l.dz);
      } else {
        double wsum = 0.0;
        for (int a = 0; a < kSub; ++a) {
          const double r = (i + (a + 0.5) / kSub) * l.dr;
          for (int b = 0; b < kSub; ++b) {
            const double z = (k + (b + 0.5) / kSub) * l.dz;
            value += r * eps_at(r, z);
            wsum += r;
          }
        }
        value /= wsum;
      }
      eps[static_cast<std::size_t>(i) * l.nz + k] = value;
    }
  }
  return eps;
}

void check_resolution(const GridSpec& grid, double period) {
  if (grid.resolution_nm > period / 10.0 + 1e-12) {
    throw SpecError("grid step " + std::to_string(grid.resolution_nm) +
                    " nm exceeds radial_period/10 = " + std::to_string(period / 10.0) + " nm");
  }
}

}  // namespace

void RCbgSpec::validate() const {
  require_positive(radial_period_nm, "radial_period_nm");
  require_positive(center_disk_radius_nm, "center_disk_radius_nm");
  require_positive(trench_width_nm, "trench_width_nm");
  require_positive(thickness_nm, "thickness_nm");
  if (!(trench_width_nm < radial_period_nm)) {
    throw SpecError("trench_width_nm must be smaller than radial_period_nm");
  }
  if (num_rings < 1) throw SpecError("num_rings must be >= 1");
  if (!(material_index > 1.0)) throw SpecError("material_index must exceed 1");
}

double RCbgSpec::device_radius_nm() const {
  return center_disk_radius_nm + num_rings * radial_period_nm;
}

void HCbgSpec::validate() const {
  require_positive(radial_period_nm, "radial_period_nm");
  require_positive(center_disk_radius_nm, "center_disk_radius_nm");
  require_positive(hole_diameter_nm, "hole_diameter_nm");
  require_positive(azimuthal_period_nm, "azimuthal_period_nm");
  require_positive(thickness_nm, "thickness_nm");
  if (!(hole_diameter_nm < azimuthal_period_nm)) {
    throw SpecError("hole_diameter_nm must be smaller than azimuthal_period_nm (holes overlap)");
  }
  if (!(hole_diameter_nm < radial_period_nm)) {
    throw SpecError("hole_diameter_nm must be smaller than radial_period_nm");
  }
  if (num_rings < 1) throw SpecError("num_rings must be >= 1");
  if (!(material_index > 1.0)) throw SpecError("material_index must exceed 1");
}

double HCbgSpec::device_radius_nm() const {
  return center_disk_radius_nm + num_rings * radial_period_nm;
}

double material_index_of(const StructureSpec& spec) {
  return std::visit([](const auto& s) { return s.material_index; }, spec);
}

double thickness_of(const StructureSpec& spec) {
  return std::visit([](const auto& s) { return s.thickness_nm; }, spec);
}

double device_radius_of(const StructureSpec& spec) {
  return std::visit([](const auto& s) { return s.device_radius_nm(); }, spec);
}

void validate(const GridSpec& grid) {
  if (!(grid.resolution_nm > 0.0)) throw ConfigError("resolution_nm must be positive");
  if (grid.pml_cells < 1) throw ConfigError("pml_cells must be >= 1");
  if (!(grid.padding_nm >= 0.0)) throw ConfigError("padding_nm must be >= 0");
}

void validate(const StructureSpec& spec) {
  std::visit([](const auto& s) { s.validate(); }, spec);
}

PermittivityMap::PermittivityMap(double dr_nm, double dz_nm, int nr, int nz, int pml_cells,
                                 std::vector<double> eps, double membrane_bottom_nm,
                                 double membrane_top_nm, double material_index)
    : dr_(dr_nm),
      dz_(dz_nm),
      nr_(nr),
      nz_(nz),
      pml_(pml_cells),
      eps_(std::move(eps)),
      membrane_bottom_(membrane_bottom_nm),
      membrane_top_(membrane_top_nm),
      material_index_(material_index) {
  if (nr_ <= 0 || nz_ <= 0) throw ConfigError("permittivity map must be non-empty");
  if (eps_.size() != static_cast<std::size_t>(nr_) * nz_) {
    throw ShapeError("permittivity array size does not match nr*nz");
  }
  if (2 * pml_ >= nz_ || pml_ >= nr_) throw ConfigError("absorbing layer thicker than domain");
}

double PermittivityMap::min_eps() const { return *std::min_element(eps_.begin(), eps_.end()); }
double PermittivityMap::max_eps() const { return *std::max_element(eps_.begin(), eps_.end()); }

double bragg_seed(double target_wavelength_nm, double effective_index) {
  if (!(target_wavelength_nm > 0.0) || !(effective_index > 0.0)) {
    throw DomainError("bragg_seed requires positive wavelength and effective index");
  }
  return target_wavelength_nm / effective_index;
}

double center_disk_seed(double radial_period_nm) {
  if (!(radial_period_nm > 0.0)) throw DomainError("radial period must be positive");
  return 1.1 * radial_period_nm;
}

EmtAnnulus emt_annulus(double hole_diameter_nm, double azimuthal_period_nm,
                       double radial_period_nm, double material_index) {
  if (hole_diameter_nm < 0.0 || !(azimuthal_period_nm > 0.0) || !(radial_period_nm > 0.0) ||
      !(material_index > 0.0)) {
    throw DomainError("emt_annulus requires positive periods and index and h >= 0");
  }
  const double radius = 0.5 * hole_diameter_nm;
  const double f = std::numbers::pi * radius * radius / (azimuthal_period_nm * radial_period_nm);
  if (f >= 1.0) throw SpecError("holes overfill the annulus (fill factor >= 1)");
  const double n2 = material_index * material_index;
  return {f, f * 1.0 + (1.0 - f) * n2};
}

PermittivityMap build_rcbg(const RCbgSpec& spec, const GridSpec& grid) {
  spec.validate();
  check_resolution(grid, spec.radial_period_nm);
  const Layout l = make_layout(grid, spec.device_radius_nm(), spec.thickness_nm);
  const double n2 = spec.material_index * spec.material_index;
  const double z0 = l.z_mid - 0.5 * spec.thickness_nm;
  const double z1 = l.z_mid + 0.5 * spec.thickness_nm;
  const double grating_end = spec.center_disk_radius_nm + spec.num_rings * spec.radial_period_nm;

  auto eps_at = [&](double r, double z) {
    if (z < z0 || z >= z1) return 1.0;
    if (r < spec.center_disk_radius_nm || r >= grating_end) return n2;
    const double offset = std::fmod(r - spec.center_disk_radius_nm, spec.radial_period_nm);
    return offset < spec.trench_width_nm ? 1.0 : n2;
  };
  return PermittivityMap(l.dr, l.dz, l.nr, l.nz, l.pml, rasterize(l, grid.subpixel_smoothing, eps_at),
                         z0, z1, spec.material_index);
}

PermittivityMap build_hcbg(const HCbgSpec& spec, const GridSpec& grid) {
  spec.validate();
  check_resolution(grid, spec.radial_period_nm);
  const Layout l = make_layout(grid, spec.device_radius_nm(), spec.thickness_nm);
  const double n2 = spec.material_index * spec.material_index;
  const double z0 = l.z_mid - 0.5 * spec.thickness_nm;
  const double z1 = l.z_mid + 0.5 * spec.thickness_nm;

  const double smear_width =
      spec.smearing == EmtSmearing::period ? spec.radial_period_nm : spec.hole_diameter_nm;
  const EmtAnnulus emt = emt_annulus(spec.hole_diameter_nm, spec.azimuthal_period_nm, smear_width,
                                     spec.material_index);
  const double half = 0.5 * spec.hole_diameter_nm;

  auto eps_at = [&](double r, double z) {
    if (z < z0 || z >= z1) return 1.0;
    const double rel = r - spec.center_disk_radius_nm;
    if (rel < 0.0) return n2;
    // Nearest ring centre c + (k - 1/2) Lambda.
    const double kf = std::floor(rel / spec.radial_period_nm);
    if (kf >= spec.num_rings) return n2;
    const double centre = (kf + 0.5) * spec.radial_period_nm;
    const double d = rel - centre;
    return (d >= -half && d < half) ? emt.eps_eff : n2;
  };
  return PermittivityMap(l.dr, l.dz, l.nr, l.nz, l.pml, rasterize(l, grid.subpixel_smoothing, eps_at),
                         z0, z1, spec.material_index);
}

PermittivityMap build_structure(const StructureSpec& spec, const GridSpec& grid) {
  return std::visit(
      [&](const auto& s) -> PermittivityMap {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RCbgSpec>) {
          return build_rcbg(s, grid);
        } else {
          return build_hcbg(s, grid);
        }
      },
      spec);
}

PermittivityMap uniform_like(const PermittivityMap& like, double eps) {
  if (!(eps >= 1.0)) throw DomainError("uniform permittivity must be >= 1");
  std::vector<double> values(like.values().size(), eps);
  return PermittivityMap(like.dr_nm(), like.dz_nm(), like.nr(), like.nz(), like.pml_cells(),
                         std::move(values), like.membrane_bottom_nm(), like.membrane_top_nm(),
                         std::sqrt(eps));
}

PermittivityMap uniform_map(double radius_nm, double height_nm, double resolution_nm,
                            int pml_cells, double eps) {
  if (!(eps >= 1.0)) throw DomainError("uniform permittivity must be >= 1");
  GridSpec g;
  g.resolution_nm = resolution_nm;
  g.pml_cells = pml_cells;
  g.domain_radius_nm = radius_nm;
  g.domain_height_nm = height_nm;
  const Layout l = make_layout(g, 0.0, 0.0);
  std::vector<double> values(static_cast<std::size_t>(l.nr) * l.nz, eps);
  return PermittivityMap(l.dr, l.dz, l.nr, l.nz, l.pml, std::move(values), l.z_mid, l.z_mid,
                         std::sqrt(eps));
}

std::string render_preview(const PermittivityMap& map, int max_columns) {
  const int step = std::max(1, (map.nr() + max_columns - 1) / max_columns);
  const double lo = map.min_eps();
  const double hi = map.max_eps();
  static constexpr char kRamp[] = " .:-=+*#%@";
  std::ostringstream out;
  for (int k = map.nz() - 1; k >= 0; k -= step) {
    for (int i = 0; i < map.nr(); i += step) {
      const double t = hi > lo ? (map(i, k) - lo) / (hi - lo) : 0.0;
      out << kRamp[std::clamp(static_cast<int>(t * 9.0 + 0.5), 0, 9)];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cbg
