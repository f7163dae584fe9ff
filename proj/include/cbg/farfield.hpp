#pragma once

#include <complex>
#include <string>
#include <vector>

#include "cbg/fdtd.hpp"
#include "cbg/geometry.hpp"

namespace cbg {

/// Far-field amplitudes of the m = 1 (x-dipole) problem. Every projection
/// reduces to two complex functions of theta:
///   E_theta ~ cos(phi) f_theta(theta),  E_phi ~ sin(phi) f_phi(theta),
/// normalised so that dP/dOmega = cos^2(phi)|f_theta|^2 + sin^2(phi)|f_phi|^2.
class FarFieldProjector {
 public:
  /// Angular-spectrum (Hankel) projection of a z-plane monitor whose upper
  /// half space is air. When `map` is given, the plane must not touch material.
  static FarFieldProjector from_plane(const SpectralMonitor& plane, double wavelength_nm,
                                      const PermittivityMap* map = nullptr);

  /// Stratton-Chu projection of a closed cylindrical box (top, bottom, side)
  /// in a homogeneous exterior of the given index.
  static FarFieldProjector from_box(const SpectralMonitor& top, const SpectralMonitor& bottom,
                                    const SpectralMonitor& side, double wavelength_nm,
                                    double exterior_index = 1.0);

  double wavelength_nm() const { return wavelength_; }
  /// (f_theta, f_phi) at polar angle theta (radians).
  std::pair<std::complex<double>, std::complex<double>> amplitudes(double theta) const;
  /// Power radiated into theta in [0, theta_max] (all phi), by adaptive-free
  /// composite Gauss-Legendre quadrature.
  double cone_power(double theta_max) const;

 private:
  enum class Kind { plane, box };
  struct Face {
    // Sample positions and weights (r dr for planes, R dz for the side).
    std::vector<double> rho, z, weight;
    // Complex coefficients of the cos-type electric current (a, b, c) and the
    // sin-type magnetic current (a, b, c); see the projection notes in farfield.cpp.
    std::vector<std::complex<double>> ja, jb, jc, ma, mb, mc;
  };
  Kind kind_ = Kind::plane;
  double wavelength_ = 0.0;
  double k_ = 0.0;
  double eta_ = 1.0;
  // Plane: g0 = (e_r - e_phi)/2, g2 = (e_r + e_phi)/2 at r.
  std::vector<double> r_, dr_weight_;
  std::vector<std::complex<double>> g0_, g2_;
  std::vector<Face> faces_;
};

struct FarFieldOptions {
  double theta_step_deg = 1.0;
  double phi_step_deg = 2.0;
  /// Average over the incoherent orthogonal in-plane dipole pair (phi-uniform).
  bool azimuthal_average = true;
};

/// Intensity per solid angle on the upward hemisphere.
struct FarFieldPattern {
  double wavelength_nm = 0.0;
  std::vector<double> theta_deg;  // 0 .. 90
  std::vector<double> phi_deg;    // 0 .. 360 - step
  std::vector<double> intensity;  // [i_theta * n_phi + i_phi]
  /// Hemisphere power from the fine quadrature of the underlying amplitudes
  /// (equals the grid integral to quadrature tolerance).
  double total_power = 0.0;
  bool azimuthally_averaged = false;

  double at(std::size_t i_theta, std::size_t i_phi) const {
    return intensity[i_theta * phi_deg.size() + i_phi];
  }
  /// Integral of the sampled pattern over theta <= theta_max_deg.
  double cone_integral(double theta_max_deg) const;
  /// Integral over the whole hemisphere from the sampled grid.
  double grid_total() const { return cone_integral(90.0); }
};

FarFieldPattern make_pattern(const FarFieldProjector& projector, const FarFieldOptions& options = {});

/// near_to_far: project a z-plane monitor to the upward hemisphere.
FarFieldPattern near_to_far(const SpectralMonitor& plane, double wavelength_nm,
                            const FarFieldOptions& options = {}, const PermittivityMap* map = nullptr);

/// Pattern rotated by `degrees` about the z axis (must be a multiple of the phi step).
FarFieldPattern rotate_pattern(const FarFieldPattern& pattern, double degrees);
/// Pointwise mean of two patterns on the same grid.
FarFieldPattern average_patterns(const FarFieldPattern& a, const FarFieldPattern& b);

/// Acceptance half-angle in degrees for a numerical aperture in air.
double na_to_half_angle(double na);

/// Fraction of the hemisphere power inside the NA cone.
double collection_efficiency(const FarFieldPattern& pattern, double na);

struct EtaCurve {
  std::vector<double> na;
  std::vector<double> eta;
};
EtaCurve eta_curve(const FarFieldPattern& pattern, const std::vector<double>& na_values);
std::vector<double> default_na_grid();  // 0.02 .. 1.00 step 0.02

struct CrossSection {
  std::vector<double> theta_deg;  // -90 .. 90
  std::vector<double> intensity;
};

/// Great-circle slice through phi and phi + 180 degrees.
CrossSection cross_section(const FarFieldPattern& pattern, double phi_deg);

/// Largest local maximum of a slice at |theta| >= min_theta_deg divided by the
/// peak at theta = 0 side; 0 if no such lobe.
double side_lobe_ratio(const CrossSection& slice, double min_theta_deg);

std::string pattern_csv(const FarFieldPattern& pattern);
std::string cross_section_csv(const CrossSection& slice);
std::string eta_curve_json(const EtaCurve& curve);

}  // namespace cbg
