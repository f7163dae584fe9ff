#include "cbg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>

#include "cbg/error.hpp"
#include "cbg/io.hpp"
#include "json.hpp"

namespace cbg {

namespace {

void check_spectrum(const Spectrum& s, const char* what) {
  if (s.wavelength_nm.size() != s.value.size()) {
    throw ShapeError(std::string(what) + ": wavelength and value lengths differ");
  }
  for (std::size_t i = 0; i < s.value.size(); ++i) {
    if (!std::isfinite(s.value[i]) || !std::isfinite(s.wavelength_nm[i])) {
      throw DataError(std::string(what) + ": non-finite sample");
    }
    if (i > 0 && !(s.wavelength_nm[i] > s.wavelength_nm[i - 1])) {
      throw ShapeError(std::string(what) + ": wavelengths must be strictly increasing");
    }
  }
}

// y = B + A / (1 + u^2), u = (x - x0) / g, parameters (B, A, x0, g).
struct LorentzFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>& x;
  const std::vector<double>& y;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - p[2]) / p[3];
      f[static_cast<Eigen::Index>(i)] = p[0] + p[1] / (1.0 + u * u) - y[i];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double u = (x[i] - p[2]) / p[3];
      const double d = 1.0 / (1.0 + u * u);
      j(r, 0) = 1.0;
      j(r, 1) = d;
      j(r, 2) = p[1] * d * d * 2.0 * u / p[3];
      j(r, 3) = p[1] * d * d * 2.0 * u * u / p[3];
    }
    return 0;
  }
};

// Half-maximum width around index p relative to `base`, by linear interpolation.
double half_width_estimate(const std::vector<double>& x, const std::vector<double>& y, std::size_t p,
                           double base) {
  const double half = 0.5 * (y[p] + base);
  double left = x.front();
  for (std::size_t i = p; i > 0; --i) {
    if (y[i - 1] <= half) {
      const double t = (y[i] - half) / (y[i] - y[i - 1]);
      left = x[i] - t * (x[i] - x[i - 1]);
      break;
    }
  }
  double right = x.back();
  for (std::size_t i = p; i + 1 < x.size(); ++i) {
    if (y[i + 1] <= half) {
      const double t = (y[i] - half) / (y[i] - y[i + 1]);
      right = x[i] + t * (x[i + 1] - x[i]);
      break;
    }
  }
  return std::max(right - left, 1e-12 * std::abs(x[p]));
}

// Fits one peak at index p using samples with index in [lo, hi].
ResonanceFit fit_peak(const Spectrum& s, std::size_t p, std::size_t lo, std::size_t hi, const FitOptions& opt) {
  const auto& xs = s.wavelength_nm;
  const auto& ys = s.value;
  const double base0 = *std::min_element(ys.begin() + static_cast<std::ptrdiff_t>(lo),
                                         ys.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  const double fwhm0 = half_width_estimate(xs, ys, p, base0);

  // Window of +-window_fwhm FWHM, widened symmetrically until it holds enough points.
  std::size_t a = p, b = p;
  const double reach = opt.window_fwhm * fwhm0;
  while (a > lo && xs[p] - xs[a - 1] <= reach) --a;
  while (b < hi && xs[b + 1] - xs[p] <= reach) ++b;
  while (static_cast<int>(b - a + 1) < opt.min_points && (a > lo || b < hi)) {
    if (a > lo) --a;
    if (b < hi && static_cast<int>(b - a + 1) < opt.min_points) ++b;
  }
  if (static_cast<int>(b - a + 1) < opt.min_points) {
    throw FitError("fewer than " + std::to_string(opt.min_points) + " samples around the peak");
  }

  // Shifted and scaled coordinates keep the problem well conditioned and
  // make the fit translation-equivariant.
  const double x_ref = xs[p];
  const double scale = fwhm0;
  std::vector<double> x, y;
  double ymin = ys[a];
  for (std::size_t i = a; i <= b; ++i) {
    x.push_back((xs[i] - x_ref) / scale);
    y.push_back(ys[i]);
    ymin = std::min(ymin, ys[i]);
  }
  Eigen::VectorXd prm(4);
  prm << ymin, ys[p] - ymin, 0.0, 0.5;

  LorentzFunctor functor{x, y};
  Eigen::LevenbergMarquardt<LorentzFunctor> lm(functor);
  lm.parameters.maxfev = 2000;
  lm.minimize(prm);

  const double amp = prm[1];
  const double g = std::abs(prm[3]);
  const double x0 = x_ref + prm[2] * scale;
  if (!std::isfinite(amp) || !std::isfinite(g) || !std::isfinite(x0) || amp <= 0.0 || g <= 0.0) {
    throw FitError("Lorentzian fit did not converge to a peak");
  }
  if (x0 < xs[a] || x0 > xs[b]) throw FitError("fitted centre left the fit window");

  Eigen::VectorXd res(static_cast<Eigen::Index>(x.size()));
  functor(prm, res);
  ResonanceFit fit;
  fit.lambda0_nm = x0;
  fit.fwhm_nm = 2.0 * g * scale;
  fit.q = fit.lambda0_nm / fit.fwhm_nm;
  fit.amplitude = amp;
  fit.baseline = prm[0];
  fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(x.size())) / amp;
  fit.flagged = fit.residual > opt.residual_threshold;
  fit.points = static_cast<int>(x.size());
  return fit;
}

}  // namespace

PurcellSpectrum purcell_spectrum(const Spectrum& device, const Spectrum& bulk) {
  check_spectrum(device, "device spectrum");
  check_spectrum(bulk, "bulk spectrum");
  if (device.wavelength_nm.size() != bulk.wavelength_nm.size()) {
    throw ShapeError("device and bulk spectra have different lengths");
  }
  if (device.wavelength_nm.empty()) throw ShapeError("empty spectrum");
  PurcellSpectrum out;
  for (std::size_t i = 0; i < device.value.size(); ++i) {
    const double w = device.wavelength_nm[i];
    if (std::abs(w - bulk.wavelength_nm[i]) > 1e-9 * w) throw ShapeError("wavelength grids differ");
    if (!(bulk.value[i] > 0.0)) {
      throw DataError("bulk reference power is not positive at " + fmt_num(w) + " nm");
    }
    out.wavelength_nm.push_back(w);
    out.factor.push_back(device.value[i] / bulk.value[i]);
  }
  const auto it = std::max_element(out.factor.begin(), out.factor.end());
  out.peak_value = *it;
  out.peak_wavelength_nm = out.wavelength_nm[static_cast<std::size_t>(it - out.factor.begin())];
  return out;
}

double purcell_at(const PurcellSpectrum& s, double wavelength_nm) {
  const auto& w = s.wavelength_nm;
  if (w.empty() || wavelength_nm < w.front() || wavelength_nm > w.back()) {
    throw LookupError("wavelength " + fmt_num(wavelength_nm) + " nm outside the Purcell spectrum");
  }
  const auto it = std::lower_bound(w.begin(), w.end(), wavelength_nm);
  const std::size_t j = static_cast<std::size_t>(it - w.begin());
  if (j == 0) return s.factor[0];
  const double t = (wavelength_nm - w[j - 1]) / (w[j] - w[j - 1]);
  return (1.0 - t) * s.factor[j - 1] + t * s.factor[j];
}

ResonanceFit fit_resonance(const Spectrum& spectrum, const FitOptions& options) {
  check_spectrum(spectrum, "spectrum");
  const auto& y = spectrum.value;
  if (static_cast<int>(y.size()) < options.min_points) {
    throw FitError("spectrum has fewer than " + std::to_string(options.min_points) + " samples");
  }
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (*mx - *mn <= 1e-12 * std::max(std::abs(*mx), std::abs(*mn))) {
    throw FitError("flat spectrum has no resonance");
  }
  const std::size_t p = static_cast<std::size_t>(mx - y.begin());
  if (p == 0 || p + 1 == y.size()) throw FitError("spectrum maximum lies on the boundary (no interior peak)");
  return fit_peak(spectrum, p, 0, y.size() - 1, options);
}

std::vector<ResonanceFit> find_modes(const Spectrum& spectrum, double min_prominence, const FitOptions& options) {
  check_spectrum(spectrum, "spectrum");
  if (spectrum.value.empty()) throw ShapeError("empty spectrum");
  const auto& y = spectrum.value;
  const std::size_t n = y.size();

  // Local maxima; a plateau counts once, at its first sample.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 < n && y[j + 1] < y[i]) peaks.push_back(i);
    i = j;
  }

  std::vector<ResonanceFit> modes;
  for (std::size_t pi = 0; pi < peaks.size(); ++pi) {
    const std::size_t p = peaks[pi];
    // Bases: lowest point before reaching a higher sample (or the edge).
    std::size_t lo = p, hi = p;
    double left_min = y[p];
    for (std::size_t i = p; i-- > 0;) {
      if (y[i] > y[p]) break;
      if (y[i] < left_min) {
        left_min = y[i];
        lo = i;
      }
    }
    double right_min = y[p];
    for (std::size_t i = p + 1; i < n; ++i) {
      if (y[i] > y[p]) break;
      if (y[i] < right_min) {
        right_min = y[i];
        hi = i;
      }
    }
    const double prominence = y[p] - std::max(left_min, right_min);
    if (prominence < min_prominence || prominence <= 0.0) continue;
    // Fit range stops at the valleys shared with neighbouring peaks.
    std::size_t fit_lo = lo, fit_hi = hi;
    if (pi > 0) {
      const std::size_t prev = peaks[pi - 1];
      fit_lo = std::max(fit_lo, static_cast<std::size_t>(
                                    std::min_element(y.begin() + static_cast<std::ptrdiff_t>(prev),
                                                     y.begin() + static_cast<std::ptrdiff_t>(p)) -
                                    y.begin()));
    }
    if (pi + 1 < peaks.size()) {
      const std::size_t next = peaks[pi + 1];
      fit_hi = std::min(fit_hi, static_cast<std::size_t>(
                                    std::min_element(y.begin() + static_cast<std::ptrdiff_t>(p),
                                                     y.begin() + static_cast<std::ptrdiff_t>(next) + 1) -
                                    y.begin()));
    }
    try {
      modes.push_back(fit_peak(spectrum, p, fit_lo, fit_hi, options));
    } catch (const FitError&) {
      // Unfittable local maxima (noise spikes) are not modes.
    }
  }
  std::sort(modes.begin(), modes.end(),
            [](const ResonanceFit& a, const ResonanceFit& b) { return a.lambda0_nm < b.lambda0_nm; });
  return modes;
}

double ringdown_q(const ProbeTrace& probe, double wavelength_nm, double start_time_nm) {
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  const auto& v = probe.values;
  const std::size_t first = static_cast<std::size_t>(std::max(0.0, std::ceil(start_time_nm / probe.dt_nm)));
  // Envelope samples: local maxima of |v| after the start time.
  std::vector<double> t, logs;
  double peak0 = 0.0;
  for (std::size_t i = std::max<std::size_t>(first, 1); i + 1 < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > 0.0 && a >= std::abs(v[i - 1]) && a > std::abs(v[i + 1])) {
      if (peak0 == 0.0) peak0 = a;
      if (a < 1e-6 * peak0) break;
      t.push_back((i + 1) * probe.dt_nm);
      logs.push_back(std::log(a));
    }
  }
  if (t.size() < 10) throw FitError("probe trace too short for a ring-down fit");
  // Least-squares slope of log amplitude.
  const double n = static_cast<double>(t.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sl += logs[i];
    stt += t[i] * t[i];
    stl += t[i] * logs[i];
  }
  const double slope = (n * stl - st * sl) / (n * stt - st * st);
  if (!(slope < 0.0)) throw FitError("probe envelope does not decay");
  const double omega = 2.0 * std::numbers::pi / wavelength_nm;
  return -omega / (2.0 * slope);
}

std::string spectral_summary_json(const ResonanceFit& fit, const PurcellSpectrum& purcell,
                                  const std::vector<double>& wavelengths_nm) {
  nlohmann::json j;
  j["lambda0_nm"] = fit.lambda0_nm;
  j["fwhm_nm"] = fit.fwhm_nm;
  j["q"] = fit.q;
  j["fit_residual"] = fit.residual;
  j["fit_flagged"] = fit.flagged;
  j["purcell_peak"] = purcell.peak_value;
  j["purcell_peak_wavelength_nm"] = purcell.peak_wavelength_nm;
  nlohmann::json at = nlohmann::json::array();
  for (double w : wavelengths_nm) {
    at.push_back({{"wavelength_nm", w}, {"value", purcell_at(purcell, w)}});
  }
  j["purcell_at"] = at;
  return j.dump(2) + "\n";
}

Spectrum emitted_power(const SimulationResult& result) {
  return {result.source_power_wavelengths_nm, result.source_power_values};
}

std::string spectrum_csv(const Spectrum& spectrum, const std::string& value_column) {
  std::string out = "wavelength_nm," + value_column + "\n";
  for (std::size_t i = 0; i < spectrum.value.size(); ++i) {
    out += csv_row({spectrum.wavelength_nm[i], spectrum.value[i]});
  }
  return out;
}

}  // namespace cbg
