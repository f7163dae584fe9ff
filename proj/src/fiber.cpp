#include "cbg/fiber.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "cbg/error.hpp"
#include "cbg/io.hpp"

namespace cbg {

namespace {

constexpr double kPi = std::numbers::pi;

// I_n(x) exp(-x), switching to the large-argument series before overflow.
double scaled_bessel_i(int n, double x) {
  if (x < 500.0) return boost::math::cyl_bessel_i(n, x) * std::exp(-x);
  const double mu = 4.0 * n * n;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
    sum += term;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

}  // namespace

double FiberMode::peak_amplitude() const {
  return std::sqrt(2.0 / (kPi * mode_field_radius_nm * mode_field_radius_nm));
}

double FiberMode::amplitude(double rho_nm) const {
  const double w = mode_field_radius_nm;
  return peak_amplitude() * std::exp(-rho_nm * rho_nm / (w * w));
}

FiberMode gaussian_mode(double mode_field_diameter_nm, double wavelength_nm, double na) {
  if (!(mode_field_diameter_nm > 0.0) || !std::isfinite(mode_field_diameter_nm)) {
    throw DomainError("mode-field diameter must be positive");
  }
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) throw DomainError("wavelength must be positive");
  if (!(na > 0.0 && na <= 1.0)) throw DomainError("fiber NA must lie in (0, 1]");
  return FiberMode{0.5 * mode_field_diameter_nm, wavelength_nm, na};
}

void FacetField::validate() const {
  const std::size_t n = rho_nm.size();
  if (n == 0 || weight.size() != n || g0.size() != n || g2.size() != n) {
    throw ShapeError("facet field arrays are empty or have different lengths");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(weight[j] >= 0.0) || !(rho_nm[j] >= 0.0)) throw ShapeError("facet field has negative radius or weight");
    if (!std::isfinite(std::abs(g0[j])) || !std::isfinite(std::abs(g2[j]))) {
      throw DataError("facet field contains non-finite samples");
    }
  }
}

double FacetField::power() const {
  double s = 0.0;
  for (std::size_t j = 0; j < rho_nm.size(); ++j) s += weight[j] * (std::norm(g0[j]) + std::norm(g2[j]));
  return 2.0 * kPi * s;
}

namespace {

// rho d rho weights with the end correction at the axis: dr^2/12 for a node
// grid starting at 0, -dr^2/24 for a cell-centred grid starting at dr/2.
std::vector<double> radial_weights(const std::vector<double>& rho, double dr) {
  std::vector<double> w;
  w.reserve(rho.size());
  for (double r : rho) w.push_back(r * dr);
  if (!w.empty()) {
    if (rho[0] == 0.0) w[0] = dr * dr / 12.0;
    else if (std::abs(rho[0] - 0.5 * dr) < 1e-9 * dr) w[0] -= dr * dr / 24.0;
  }
  return w;
}

}  // namespace

FacetField facet_field(const SpectralMonitor& plane, double wavelength_nm) {
  if (plane.surface() != MonitorSurface::z_plane) {
    throw ConfigError("facet field needs a z_plane monitor, got '" + plane.name() + "'");
  }
  const TangentialFields f = plane.fields(wavelength_nm);
  FacetField out;
  out.wavelength_nm = wavelength_nm;
  out.rho_nm = plane.coords();
  out.weight = radial_weights(out.rho_nm, plane.spacing_nm());
  for (std::size_t j = 0; j < out.rho_nm.size(); ++j) {
    out.g0.push_back(0.5 * (f.c[0][j] - f.c[1][j]));
    out.g2.push_back(0.5 * (f.c[0][j] + f.c[1][j]));
  }
  return out;
}

FacetField axisymmetric_field(const std::vector<double>& rho_nm, double spacing_nm,
                              const std::vector<std::complex<double>>& g0) {
  if (!(spacing_nm > 0.0)) throw ShapeError("grid spacing must be positive");
  FacetField out;
  out.rho_nm = rho_nm;
  out.g0 = g0;
  out.g2.assign(g0.size(), {0.0, 0.0});
  out.weight = radial_weights(rho_nm, spacing_nm);
  out.validate();
  return out;
}

double coupling_efficiency(const FacetField& field, const FiberMode& mode, double dx_nm) {
  field.validate();
  if (!std::isfinite(dx_nm)) throw DomainError("offset must be finite");
  const double power = field.power();
  if (!(power > 0.0)) throw DataError("device field is zero on the facet plane");
  const double w2 = mode.mode_field_radius_nm * mode.mode_field_radius_nm;
  const double dx = std::abs(dx_nm);
  // Angular integrals of exp(2 rho dx cos(phi) / w^2) cos(n phi) are 2 pi I_n.
  std::complex<double> ox{0.0, 0.0}, oy{0.0, 0.0};
  for (std::size_t j = 0; j < field.rho_nm.size(); ++j) {
    const double rho = field.rho_nm[j];
    const double beta = 2.0 * rho * dx / w2;
    const double gauss = std::exp(-(rho - dx) * (rho - dx) / w2);
    const double i0 = scaled_bessel_i(0, beta);
    const double i2 = scaled_bessel_i(2, beta);
    const double wgt = field.weight[j] * gauss;
    ox += wgt * (field.g0[j] * i0 + field.g2[j] * i2);
    oy += wgt * (field.g0[j] * i0 - field.g2[j] * i2);
  }
  const double n2 = mode.peak_amplitude() * mode.peak_amplitude();
  const double overlap = 4.0 * kPi * kPi * n2 * (std::norm(ox) + std::norm(oy));
  // The fiber mode extends past the sampled disc, where the device field is zero.
  const double mode_norm = n2 * kPi * w2 / 2.0;
  return overlap / (2.0 * power * mode_norm);
}

MisalignmentCurve misalignment_sweep(const FacetField& field, const FiberMode& mode,
                                     const std::vector<double>& dx_nm) {
  MisalignmentCurve out;
  for (double dx : dx_nm) {
    out.dx_nm.push_back(dx);
    out.eta.push_back(coupling_efficiency(field, mode, dx));
  }
  return out;
}

std::string misalignment_csv(const MisalignmentCurve& curve) {
  std::string out = "dx_nm,eta_c\n";
  for (std::size_t i = 0; i < curve.dx_nm.size(); ++i) out += csv_row({curve.dx_nm[i], curve.eta[i]});
  return out;
}

}  // namespace cbg
