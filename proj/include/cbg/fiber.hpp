#pragma once

#include <complex>
#include <string>
#include <vector>

#include "cbg/fdtd.hpp"

namespace cbg {

/// Fundamental fiber mode u(rho) = N exp(-rho^2 / w0^2), normalised to unit power.
struct FiberMode {
  double mode_field_radius_nm = 4600.0;
  double wavelength_nm = 1250.0;
  double na = 0.12;

  double peak_amplitude() const;
  double amplitude(double rho_nm) const;
};

inline constexpr double kSmf28ModeFieldDiameterNm = 9200.0;

FiberMode gaussian_mode(double mode_field_diameter_nm, double wavelength_nm, double na = 0.12);

/// Transverse facet field of an m = 1 source in Cartesian form:
///   x dipole: E_x = g0 + g2 cos(2 phi), E_y = g2 sin(2 phi);
///   y dipole: the same pattern rotated by 90 degrees.
/// Samples are radial with weights rho * d rho.
struct FacetField {
  double wavelength_nm = 0.0;
  std::vector<double> rho_nm;
  std::vector<double> weight;
  std::vector<std::complex<double>> g0;
  std::vector<std::complex<double>> g2;

  void validate() const;
  /// Integral of |E|^2 over the plane for one dipole.
  double power() const;
};

/// From a z-plane monitor: g0 = (e_r - e_phi) / 2, g2 = (e_r + e_phi) / 2.
FacetField facet_field(const SpectralMonitor& plane, double wavelength_nm);

/// Radially symmetric x-polarised field g0(rho) (g2 = 0) on a uniform grid
/// starting at rho = 0.
FacetField axisymmetric_field(const std::vector<double>& rho_nm, double spacing_nm,
                              const std::vector<std::complex<double>>& g0);

/// Overlap efficiency with the mode displaced by dx along x, averaged over the
/// two incoherent orthogonal dipoles, each transverse component overlapped
/// with a co-polarised copy of the mode.
double coupling_efficiency(const FacetField& field, const FiberMode& mode, double dx_nm);

struct MisalignmentCurve {
  std::vector<double> dx_nm;
  std::vector<double> eta;
};

MisalignmentCurve misalignment_sweep(const FacetField& field, const FiberMode& mode,
                                     const std::vector<double>& dx_nm);

/// CSV with columns dx_nm, eta_c.
std::string misalignment_csv(const MisalignmentCurve& curve);

}  // namespace cbg
