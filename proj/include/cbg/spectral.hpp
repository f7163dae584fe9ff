#pragma once

#include <string>
#include <vector>

#include "cbg/fdtd.hpp"

namespace cbg {

struct Spectrum {
  std::vector<double> wavelength_nm;
  std::vector<double> value;
};

struct PurcellSpectrum {
  std::vector<double> wavelength_nm;
  std::vector<double> factor;
  double peak_value = 0.0;
  double peak_wavelength_nm = 0.0;
};

/// Pointwise F_p = P_device / P_bulk on identical wavelength grids.
PurcellSpectrum purcell_spectrum(const Spectrum& device, const Spectrum& bulk);

/// Linear interpolation of a Purcell spectrum at `wavelength_nm`.
double purcell_at(const PurcellSpectrum& spectrum, double wavelength_nm);

struct ResonanceFit {
  double lambda0_nm = 0.0;
  double fwhm_nm = 0.0;
  double q = 0.0;
  double amplitude = 0.0;
  double baseline = 0.0;
  /// RMS fit residual relative to the fitted amplitude.
  double residual = 0.0;
  bool flagged = false;  // residual above threshold
  int points = 0;
};

struct FitOptions {
  double window_fwhm = 4.0;  // half-width of the fit window in initial FWHM units
  int min_points = 10;
  double residual_threshold = 0.05;
};

/// Lorentzian y = B + A / (1 + ((x - x0)/g)^2) fitted around the global maximum.
ResonanceFit fit_resonance(const Spectrum& spectrum, const FitOptions& options = {});

/// All local maxima whose topographic prominence reaches `min_prominence`,
/// each fitted, sorted by wavelength. Peaks whose fit fails are skipped.
std::vector<ResonanceFit> find_modes(const Spectrum& spectrum, double min_prominence,
                                     const FitOptions& options = {});

/// Time-domain Q from the decay of the probe envelope after the source has
/// switched off: amplitude ~ exp(-omega t / (2Q)).
double ringdown_q(const ProbeTrace& probe, double wavelength_nm, double start_time_nm);

/// {lambda0_nm, fwhm_nm, q, purcell_peak, purcell_at: [{wavelength_nm, value}, ...]}
std::string spectral_summary_json(const ResonanceFit& fit, const PurcellSpectrum& purcell,
                                  const std::vector<double>& wavelengths_nm);

/// Source-delivered power of a run on its accumulated wavelength grid.
Spectrum emitted_power(const SimulationResult& result);

std::string spectrum_csv(const Spectrum& spectrum, const std::string& value_column);

}  // namespace cbg
