#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace cbg {

/// InP near 1250 nm. Configurable per structure.
inline constexpr double kDefaultMaterialIndex = 3.17;

/// Ring-based circular Bragg grating: a solid centre disk followed by
/// `num_rings` air trenches of width `trench_width_nm`, one per radial period.
struct RCbgSpec {
  double radial_period_nm = 497.0;
  double center_disk_radius_nm = 546.0;
  double trench_width_nm = 149.0;
  double thickness_nm = 280.0;
  int num_rings = 10;
  double material_index = kDefaultMaterialIndex;

  void validate() const;
  double device_radius_nm() const;
};

/// How hole rings are homogenised into axisymmetric annuli.
enum class EmtSmearing {
  /// Fill factor pi(h/2)^2 / (a * Lambda) applied over an annulus of width h.
  period,
  /// Fill factor pi(h/2)^2 / (a * h): hole area spread over the annulus only.
  annulus,
};

/// Hole-based circular Bragg grating. Each ring is a row of circular holes of
/// diameter `hole_diameter_nm` spaced `azimuthal_period_nm` apart along the
/// ring; the ring centres sit at c + (k - 1/2) * Lambda.
struct HCbgSpec {
  double radial_period_nm = 467.0;
  double center_disk_radius_nm = 618.0;
  double hole_diameter_nm = 135.0;
  double azimuthal_period_nm = 210.0;
  double thickness_nm = 280.0;
  int num_rings = 10;
  double material_index = kDefaultMaterialIndex;
  EmtSmearing smearing = EmtSmearing::annulus;

  void validate() const;
  double device_radius_nm() const;
};

using StructureSpec = std::variant<RCbgSpec, HCbgSpec>;

double material_index_of(const StructureSpec& spec);
double thickness_of(const StructureSpec& spec);
double device_radius_of(const StructureSpec& spec);
void validate(const StructureSpec& spec);

/// Discretisation of the (r, z) half plane. Unset extents (<= 0) are derived
/// from the device: radius = device + padding + PML, height = T + 2 padding + 2 PML.
struct GridSpec {
  double resolution_nm = 15.0;
  double padding_nm = 1500.0;
  int pml_cells = 12;
  double domain_radius_nm = 0.0;
  double domain_height_nm = 0.0;
  /// Area-weighted (r-weighted) averaging of straddling cells. Off by default
  /// because it shifts resonances relative to the centre-sampled map.
  bool subpixel_smoothing = false;
};

void validate(const GridSpec& grid);

/// Relative permittivity on an axisymmetric (r, z) cell grid. Cell (i, k)
/// spans r in [i dr, (i+1) dr) and z in [k dz, (k+1) dz). The membrane
/// mid-plane is always a grid node so that an on-axis source sits exactly on it.
class PermittivityMap {
 public:
  PermittivityMap() = default;
  PermittivityMap(double dr_nm, double dz_nm, int nr, int nz, int pml_cells,
                  std::vector<double> eps, double membrane_bottom_nm,
                  double membrane_top_nm, double material_index);

  double dr_nm() const { return dr_; }
  double dz_nm() const { return dz_; }
  int nr() const { return nr_; }
  int nz() const { return nz_; }
  int pml_cells() const { return pml_; }
  double radius_nm() const { return nr_ * dr_; }
  double height_nm() const { return nz_ * dz_; }
  double membrane_bottom_nm() const { return membrane_bottom_; }
  double membrane_top_nm() const { return membrane_top_; }
  double membrane_mid_nm() const { return 0.5 * (membrane_bottom_ + membrane_top_); }
  double material_index() const { return material_index_; }

  double operator()(int i, int k) const { return eps_[static_cast<std::size_t>(i) * nz_ + k]; }
  const std::vector<double>& values() const { return eps_; }

  /// Radial extent of the non-PML interior.
  double interior_radius_nm() const { return (nr_ - pml_) * dr_; }
  double interior_z_min_nm() const { return pml_ * dz_; }
  double interior_z_max_nm() const { return (nz_ - pml_) * dz_; }

  double min_eps() const;
  double max_eps() const;

  friend bool operator==(const PermittivityMap& a, const PermittivityMap& b) = default;

 private:
  double dr_ = 0.0;
  double dz_ = 0.0;
  int nr_ = 0;
  int nz_ = 0;
  int pml_ = 0;
  std::vector<double> eps_;
  double membrane_bottom_ = 0.0;
  double membrane_top_ = 0.0;
  double material_index_ = 1.0;
};

/// Second-order Bragg period Lambda = lambda / n_eff.
double bragg_seed(double target_wavelength_nm, double effective_index);

/// Centre-disk seed used before sweeping: c = 1.1 Lambda.
double center_disk_seed(double radial_period_nm);

struct EmtAnnulus {
  double fill_factor = 0.0;
  double eps_eff = 1.0;
};

/// Volume-fraction permittivity of a hole ring: f = pi (h/2)^2 / (a Lambda),
/// eps = f + (1 - f) n^2.
EmtAnnulus emt_annulus(double hole_diameter_nm, double azimuthal_period_nm,
                       double radial_period_nm, double material_index);

PermittivityMap build_rcbg(const RCbgSpec& spec, const GridSpec& grid);
PermittivityMap build_hcbg(const HCbgSpec& spec, const GridSpec& grid);
PermittivityMap build_structure(const StructureSpec& spec, const GridSpec& grid);

/// Same grid and membrane metadata as `like`, every cell set to `eps`.
PermittivityMap uniform_like(const PermittivityMap& like, double eps);

/// Homogeneous map of explicit size; the "membrane" is a zero-thickness
/// marker at mid-height used only to place the source.
PermittivityMap uniform_map(double radius_nm, double height_nm, double resolution_nm,
                            int pml_cells, double eps);

/// Coarse text rendering of the map for quick inspection (one char per cell block).
std::string render_preview(const PermittivityMap& map, int max_columns = 120);

}  // namespace cbg
