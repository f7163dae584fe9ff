#pragma once

// Closed-form reference values used by the unit and acceptance tests. Nothing
// here calls into the library.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// x-oriented point dipole in vacuum: dP/dOmega ~ 1 - sin^2(theta) cos^2(phi).
inline double dipole_intensity(double theta, double phi) {
  const double s = std::sin(theta) * std::cos(phi);
  return 1.0 - s * s;
}

// Same, averaged over the orthogonal in-plane pair.
inline double dipole_pair_intensity(double theta) {
  const double c = std::cos(theta);
  return 0.5 * (1.0 + c * c);
}

// Fraction of the upward hemisphere power inside theta <= theta_max.
inline double dipole_cone_fraction(double theta_max) {
  const double c = std::cos(theta_max);
  return ((1.0 - c) + (1.0 - c * c * c) / 3.0) / (4.0 / 3.0);
}

inline double uniform_cap_fraction(double na) { return 1.0 - std::sqrt(1.0 - na * na); }

inline double half_angle_deg(double na) { return std::asin(na) * 180.0 / kPi; }

inline double lorentzian(double x, double x0, double fwhm, double amplitude, double baseline) {
  const double g = 0.5 * fwhm;
  return baseline + amplitude * g * g / ((x - x0) * (x - x0) + g * g);
}

struct Samples {
  std::vector<double> x, y;
};

// Lorentzian sampled on [x0 - span, x0 + span] with optional additive noise
// of relative size `noise` (uniform in [-noise, noise] times the amplitude).
inline Samples lorentzian_samples(double x0, double fwhm, double span, int n, double noise = 0.0,
                                  unsigned seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Samples s;
  for (int i = 0; i < n; ++i) {
    const double x = x0 - span + 2.0 * span * i / (n - 1);
    s.x.push_back(x);
    s.y.push_back(lorentzian(x, x0, fwhm, 1.0, 0.05) + noise * u(rng));
  }
  return s;
}

// Normalised Gaussians of equal waist w offset by dx: |<u|v>|^2.
inline double gaussian_offset_overlap(double dx, double w) { return std::exp(-dx * dx / (w * w)); }

// Volume-fraction effective permittivity of a hole ring.
inline double emt_fill(double h, double a, double width) { return kPi * 0.25 * h * h / (a * width); }
inline double emt_eps(double f, double n) { return f + (1.0 - f) * n * n; }

// R-CBG rasterisation by interval arithmetic: is radius r inside trench k?
inline bool in_rcbg_trench(double r, double c, double period, double w, int rings) {
  for (int k = 0; k < rings; ++k) {
    const double lo = c + k * period;
    if (r >= lo && r < lo + w) return true;
  }
  return false;
}

// eta = (R - D) nd / (rep chain) * sqrt(1 - g2)
inline double budget_eta(double rate, double dark, double nd_db, double rep, double chain, double g2) {
  return (rate - dark) * std::pow(10.0, nd_db / 10.0) / (rep * chain) * std::sqrt(1.0 - g2);
}

}  // namespace oracle
