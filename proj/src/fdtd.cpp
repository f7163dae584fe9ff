#include "cbg/fdtd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cbg/error.hpp"
#include "cbg/kernels.hpp"

namespace cbg {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

bool same_wavelength(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }


}  // namespace

void validate(const PulseSpec& p) {
  if (!(p.center_nm > 0.0) || !(p.bandwidth_nm > 0.0) || !(p.bandwidth_nm < 2.0 * p.center_nm)) {
    throw ConfigError("pulse needs center_nm > 0 and 0 < bandwidth_nm < 2 center_nm");
  }
  if (!std::isfinite(p.amplitude)) throw ConfigError("pulse amplitude must be finite");
}

void validate(const SimulationConfig& c) {
  if (!(c.courant > 0.0) || c.courant > kMaxCourant + 1e-12) {
    std::ostringstream msg;
    msg << "Courant number " << c.courant << " outside (0, 1/sqrt(2)]";
    throw ConfigError(msg.str());
  }
  if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (!(c.decay_threshold > 0.0) || c.decay_threshold >= 1.0) {
    throw ConfigError("decay_threshold must lie in (0, 1)");
  }
  if (c.dft_stride < 1 || c.record_stride < 1 || c.energy_interval < 1) {
    throw ConfigError("dft_stride, record_stride and energy_interval must be >= 1");
  }
  if (c.pml_order < 1) throw ConfigError("pml_order must be >= 1");
  if (!(c.pml_sigma_scale >= 0.0) || !(c.pml_alpha_fraction >= 0.0) ||
      !(c.pml_loss_fraction >= 0.0)) {
    throw ConfigError("PML scale factors must be non-negative");
  }
}

// ---------------------------------------------------------------- pulse

double PulseSpec::envelope_width() const {
  validate(*this);
  const double f0 = 1.0 / center_nm;
  const double df = std::max(1.0 / (center_nm - 0.5 * bandwidth_nm) - f0,
                             f0 - 1.0 / (center_nm + 0.5 * bandwidth_nm));
  // |S(f)|^2 ~ exp(-(2 pi (f - f0) tau)^2) is 1/2 at the band edge.
  return std::sqrt(std::log(2.0)) / (2.0 * kPi * df);
}

double PulseSpec::peak_time() const { return 6.0 * envelope_width(); }
double PulseSpec::end_time() const { return 12.0 * envelope_width(); }

double PulseSpec::value(double t) const {
  const double tau = envelope_width();
  const double x = t - 6.0 * tau;
  return amplitude * std::exp(-0.5 * x * x / (tau * tau)) * std::sin(2.0 * kPi * x / center_nm);
}

// ---------------------------------------------------------------- monitors

std::vector<MonitorSpec> box_monitors(const BoxSpec& box) {
  if (!(box.radius_nm > 0.0) || !(box.z_max_nm > box.z_min_nm)) {
    throw ConfigError("box '" + box.name + "' needs radius > 0 and z_max > z_min");
  }
  MonitorSpec top{box.name + "/top", MonitorSurface::z_plane, box.z_max_nm, 0.0, box.radius_nm, +1,
                  box.wavelengths_nm, false};
  MonitorSpec bottom{box.name + "/bottom", MonitorSurface::z_plane, box.z_min_nm, 0.0, box.radius_nm, -1,
                     box.wavelengths_nm, false};
  MonitorSpec side{box.name + "/side", MonitorSurface::cylinder, box.radius_nm, box.z_min_nm, box.z_max_nm, +1,
                   box.wavelengths_nm, false};
  return {top, bottom, side};
}

SpectralMonitor::SpectralMonitor(MonitorSpec spec, std::vector<double> coords, double spacing_nm,
                                 double position_nm)
    : spec_(std::move(spec)), coords_(std::move(coords)), spacing_(spacing_nm), position_(position_nm) {
  if (spec_.orientation != 1 && spec_.orientation != -1) {
    throw ConfigError("monitor '" + spec_.name + "' orientation must be +1 or -1");
  }
  for (int c = 0; c < 4; ++c) dft_[c].assign(native_size(c) * spec_.wavelengths_nm.size(), cd{});
}

bool SpectralMonitor::on_nodes(int c) const {
  // Planes: e_phi, h_r at r nodes. Cylinders: e_phi, h_z at z nodes.
  return spec_.surface == MonitorSurface::z_plane ? (c == 1 || c == 2) : (c == 0 || c == 3);
}

std::vector<double> SpectralMonitor::node_coords() const {
  std::vector<double> out;
  for (double x : coords_) out.push_back(x - 0.5 * spacing_);
  if (!coords_.empty()) out.push_back(coords_.back() + 0.5 * spacing_);
  return out;
}

std::size_t SpectralMonitor::wavelength_index(double wavelength_nm) const {
  const auto& w = spec_.wavelengths_nm;
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (same_wavelength(w[l], wavelength_nm)) return l;
  }
  throw LookupError("wavelength " + std::to_string(wavelength_nm) + " nm not monitored by '" +
                    spec_.name + "'");
}

bool SpectralMonitor::has_wavelength(double wavelength_nm) const {
  return std::any_of(spec_.wavelengths_nm.begin(), spec_.wavelengths_nm.end(),
                     [&](double w) { return same_wavelength(w, wavelength_nm); });
}

void SpectralMonitor::begin(double dft_weight, double record_weight) {
  dft_weight_ = dft_weight;
  record_weight_ = record_weight;
  for (auto& d : dft_) std::fill(d.begin(), d.end(), cd{});
  for (auto& t : record_times_) t.clear();
  for (auto& r : record_) r.clear();
}

void SpectralMonitor::accumulate(bool magnetic, double t, const double* c0, const double* c1) {
  const auto& w = spec_.wavelengths_nm;
  const int first = magnetic ? 2 : 0;
  const std::size_t n0 = native_size(first);
  const std::size_t n1 = native_size(first + 1);
  auto& d0 = dft_[first];
  auto& d1 = dft_[first + 1];
  for (std::size_t l = 0; l < w.size(); ++l) {
    const double omega = 2.0 * kPi / w[l];
    const cd ph = std::polar(dft_weight_, omega * t);
    cd* a = d0.data() + l * n0;
    cd* b = d1.data() + l * n1;
    for (std::size_t j = 0; j < n0; ++j) a[j] += ph * c0[j];
    for (std::size_t j = 0; j < n1; ++j) b[j] += ph * c1[j];
  }
}

void SpectralMonitor::record(bool magnetic, double t, const double* c0, const double* c1) {
  if (!spec_.record) return;
  const int first = magnetic ? 2 : 0;
  record_times_[magnetic ? 1 : 0].push_back(t);
  auto& r0 = record_[first];
  auto& r1 = record_[first + 1];
  for (std::size_t j = 0; j < native_size(first); ++j) r0.push_back(static_cast<float>(c0[j]));
  for (std::size_t j = 0; j < native_size(first + 1); ++j) r1.push_back(static_cast<float>(c1[j]));
}

TangentialFields SpectralMonitor::from_record(double wavelength_nm) const {
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  TangentialFields out;
  out.wavelength_nm = wavelength_nm;
  for (int c = 0; c < 4; ++c) out.c[c].assign(native_size(c), cd{});
  const double omega = 2.0 * kPi / wavelength_nm;
  for (int field = 0; field < 2; ++field) {
    const auto& times = record_times_[field];
    for (int c = 2 * field; c < 2 * field + 2; ++c) {
      const std::size_t n = native_size(c);
      const auto& rec = record_[c];
      auto& o = out.c[c];
      for (std::size_t s = 0; s < times.size(); ++s) {
        const cd ph = std::polar(record_weight_, omega * times[s]);
        const float* a = rec.data() + s * n;
        for (std::size_t j = 0; j < n; ++j) o[j] += ph * static_cast<double>(a[j]);
      }
    }
  }
  return out;
}

TangentialFields SpectralMonitor::native(double wavelength_nm) const {
  if (has_wavelength(wavelength_nm)) {
    const std::size_t l = wavelength_index(wavelength_nm);
    TangentialFields out;
    out.wavelength_nm = spec_.wavelengths_nm[l];
    for (int c = 0; c < 4; ++c) {
      const std::size_t n = native_size(c);
      out.c[c].assign(dft_[c].begin() + static_cast<std::ptrdiff_t>(l * n),
                      dft_[c].begin() + static_cast<std::ptrdiff_t>((l + 1) * n));
    }
    return out;
  }
  if (spec_.record) return from_record(wavelength_nm);
  throw LookupError("wavelength " + std::to_string(wavelength_nm) + " nm not monitored by '" +
                    spec_.name + "'");
}

TangentialFields SpectralMonitor::fields(double wavelength_nm) const {
  TangentialFields out = native(wavelength_nm);
  for (int c = 0; c < 4; ++c) {
    if (!on_nodes(c)) continue;
    auto& v = out.c[c];
    for (std::size_t j = 0; j + 1 < v.size(); ++j) v[j] = 0.5 * (v[j] + v[j + 1]);
    v.pop_back();
  }
  return out;
}

double SpectralMonitor::flux(double wavelength_nm) const {
  const TangentialFields f = native(wavelength_nm);
  const std::vector<double> nodes = node_coords();
  const bool plane = spec_.surface == MonitorSurface::z_plane;
  // z-plane: E_r H_phi* - E_phi H_r*; cylinder: E_phi H_z* - E_z H_phi*.
  auto pair_sum = [&](int a, int b) {
    const bool node = on_nodes(a);
    const std::size_t n = native_size(a);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double radius = plane ? (node ? nodes[j] : coords_[j]) : position_;
      const double w = node && (j == 0 || j + 1 == n) ? 0.5 : 1.0;
      sum += w * radius * std::real(f.c[a][j] * std::conj(f.c[b][j]));
    }
    return sum;
  };
  const double sum = pair_sum(0, 3) - pair_sum(1, 2);
  // Azimuthal integral of cos^2 or sin^2 gives pi; 1/2 from time averaging.
  return spec_.orientation * 0.5 * kPi * sum * spacing_;
}

SpectralMonitor SpectralMonitor::reversed() const {
  SpectralMonitor copy = *this;
  copy.spec_.orientation = -spec_.orientation;
  return copy;
}

const SpectralMonitor& SimulationResult::monitor(const std::string& name) const {
  for (const auto& m : monitors) {
    if (m.name() == name) return m;
  }
  throw LookupError("no monitor named '" + name + "'");
}

bool SimulationResult::has_monitor(const std::string& name) const {
  return std::any_of(monitors.begin(), monitors.end(), [&](const auto& m) { return m.name() == name; });
}

double SimulationResult::source_power(double wavelength_nm) const {
  for (std::size_t l = 0; l < source_power_wavelengths_nm.size(); ++l) {
    if (same_wavelength(source_power_wavelengths_nm[l], wavelength_nm)) return source_power_values[l];
  }
  throw LookupError("source power not accumulated at " + std::to_string(wavelength_nm) + " nm");
}

double flux(const SpectralMonitor& monitor, double wavelength_nm) {
  monitor.wavelength_index(wavelength_nm);
  return monitor.flux(wavelength_nm);
}

double box_flux(const SimulationResult& result, const std::string& box_name, double wavelength_nm) {
  return flux(result.monitor(box_name + "/top"), wavelength_nm) +
         flux(result.monitor(box_name + "/bottom"), wavelength_nm) +
         flux(result.monitor(box_name + "/side"), wavelength_nm);
}

// ---------------------------------------------------------------- solver

namespace {

struct Sampler {
  SpectralMonitor monitor;
  MonitorSurface surface;
  int pos = 0;    // k for planes, i for cylinders
  int first = 0;  // first i (planes) or k (cylinders)
  int count = 0;
  std::array<std::vector<double>, 4> buf;
};

}  // namespace

struct BorSimulation::Impl {
  int nr = 0, nz = 0;
  double dr = 0, dz = 0, dt = 0;
  SimulationConfig config;
  PulseSpec pulse;
  int source_k = 0;
  double source_volume = 0.0;

  std::array<std::vector<double>, 6> f;
  std::array<std::vector<double>, 3> eps;  // at e_r, e_phi, e_z nodes
  std::array<std::vector<double>, 3> ce;
  kernels::Cpml pml;
  kernels::YeeFields view;

  std::vector<Sampler> samplers;
  std::vector<double> src_wavelengths;
  std::vector<cd> src_j, src_e;

  ProbeTrace probe;
  int n = 0;
  double peak_energy = 0.0;
  double last_energy = 0.0;

  std::size_t idx(int i, int k) const { return static_cast<std::size_t>(i) * (nz + 1) + k; }

  void build_materials(const PermittivityMap& map) {
    const std::size_t total = static_cast<std::size_t>(nr + 1) * (nz + 1);
    for (auto& e : eps) e.assign(total, 1.0);
    auto cell = [&](int i, int k) {
      return map(std::clamp(i, 0, nr - 1), std::clamp(k, 0, nz - 1));
    };
    for (int i = 0; i <= nr; ++i) {
      for (int k = 0; k <= nz; ++k) {
        const std::size_t p = idx(i, k);
        eps[0][p] = 0.5 * (cell(i, k - 1) + cell(i, k));
        eps[1][p] = 0.25 * (cell(i - 1, k - 1) + cell(i - 1, k) + cell(i, k - 1) + cell(i, k));
        eps[2][p] = 0.5 * (cell(i - 1, k) + cell(i, k));
      }
    }
    for (int c = 0; c < 3; ++c) {
      ce[c].resize(total);
      for (std::size_t p = 0; p < total; ++p) ce[c][p] = dt / eps[c][p];
    }
  }

  void build_pml(int cells) {
    pml.cells = cells;
    const double omega0 = 2.0 * kPi / pulse.center_nm;
    const double alpha_max = config.pml_alpha_fraction * omega0;
    const int order = config.pml_order;
    auto coeffs = [&](double depth, double delta, double& b, double& a, bool graded = true) {
      if (depth <= 0.0) {
        b = 0.0;
        a = 0.0;
        return;
      }
      const double sigma_max = config.pml_sigma_scale * 0.8 * (order + 1) / delta;
      const double sigma = sigma_max * std::pow(depth, order);
      const double alpha = graded ? alpha_max * (1.0 - depth) : alpha_max;
      b = std::exp(-(sigma + alpha) * dt);
      a = sigma + alpha > 0.0 ? sigma / (sigma + alpha) * (b - 1.0) : 0.0;
    };
    // The radial layer keeps alpha constant so that r~ below is an exact
    // single-pole stretch, consistent with the d/dr terms.
    const double lr = cells * dr;
    const double r0 = (nr - cells) * dr;
    pml.b_r_int.assign(nr + 1, 0.0);
    pml.a_r_int.assign(nr + 1, 0.0);
    pml.b_r_half.assign(nr, 0.0);
    pml.a_r_half.assign(nr, 0.0);
    for (int i = 0; i <= nr; ++i) coeffs((i * dr - r0) / lr, dr, pml.b_r_int[i], pml.a_r_int[i], false);
    for (int i = 0; i < nr; ++i) coeffs(((i + 0.5) * dr - r0) / lr, dr, pml.b_r_half[i], pml.a_r_half[i], false);
    // 1/r~ = (1/r) (1 - (S/r) / (j omega + alpha + S/r)) with S = integral of sigma.
    auto stretch = [&](double r, double& b, double& a) {
      const double depth = (r - r0) / lr;
      if (depth <= 0.0 || r <= 0.0) {
        b = 0.0;
        a = 0.0;
        return;
      }
      const double sigma_max = config.pml_sigma_scale * 0.8 * (order + 1) / dr;
      const double w = sigma_max * lr * std::pow(depth, order + 1) / (order + 1) / r;
      b = std::exp(-(w + alpha_max) * dt);
      a = w / (w + alpha_max) * (b - 1.0);
    };
    pml.b_t_int.assign(nr + 1, 0.0);
    pml.a_t_int.assign(nr + 1, 0.0);
    pml.b_t_half.assign(nr, 0.0);
    pml.a_t_half.assign(nr, 0.0);
    for (int i = 0; i <= nr; ++i) stretch(i * dr, pml.b_t_int[i], pml.a_t_int[i]);
    for (int i = 0; i < nr; ++i) stretch((i + 0.5) * dr, pml.b_t_half[i], pml.a_t_half[i]);
    auto damping = [&](double r) {
      const double depth = std::clamp((r - r0) / lr, 0.0, 1.0);
      const double sigma_max = config.pml_sigma_scale * 0.8 * (order + 1) / dr;
      return std::exp(-config.pml_loss_fraction * sigma_max * depth * dt);
    };
    pml.d_int.resize(nr + 1);
    pml.d_half.resize(nr);
    for (int i = 0; i <= nr; ++i) pml.d_int[i] = damping(i * dr);
    for (int i = 0; i < nr; ++i) pml.d_half[i] = damping((i + 0.5) * dr);

    const double lz = cells * dz;
    auto zdepth = [&](double z) { return std::max((lz - z) / lz, (z - (nz - cells) * dz) / lz); };
    pml.b_z_int.assign(nz + 1, 0.0);
    pml.a_z_int.assign(nz + 1, 0.0);
    pml.b_z_half.assign(nz, 0.0);
    pml.a_z_half.assign(nz, 0.0);
    for (int k = 0; k <= nz; ++k) coeffs(zdepth(k * dz), dz, pml.b_z_int[k], pml.a_z_int[k]);
    for (int k = 0; k < nz; ++k) coeffs(zdepth((k + 0.5) * dz), dz, pml.b_z_half[k], pml.a_z_half[k]);

    const std::size_t total = static_cast<std::size_t>(nr + 1) * (nz + 1);
    for (auto& p : pml.psi) p.assign(total, 0.0);
  }

  void add_monitor(const MonitorSpec& spec, int pml_cells) {
    if (spec.wavelengths_nm.empty() && !spec.record) {
      throw ConfigError("monitor '" + spec.name + "' has no wavelengths");
    }
    for (double w : spec.wavelengths_nm) {
      if (!(w > 0.0)) throw ConfigError("monitor '" + spec.name + "' has a non-positive wavelength");
    }
    Sampler s;
    s.surface = spec.surface;
    std::vector<double> coords;
    double spacing = 0.0;
    double position = 0.0;
    if (spec.surface == MonitorSurface::z_plane) {
      s.pos = static_cast<int>(std::lround(spec.position_nm / dz));
      const int i0 = std::max(0, static_cast<int>(std::lround(spec.extent_min_nm / dr)));
      const int i1 = static_cast<int>(std::lround(spec.extent_max_nm / dr));
      if (s.pos < pml_cells || s.pos > nz - pml_cells || i1 > nr - pml_cells || i1 <= i0) {
        throw ConfigError("monitor '" + spec.name + "' must lie inside the non-absorbing interior");
      }
      s.first = i0;
      s.count = i1 - i0;
      for (int i = i0; i < i1; ++i) coords.push_back((i + 0.5) * dr);
      spacing = dr;
      position = s.pos * dz;
    } else {
      s.pos = static_cast<int>(std::lround(spec.position_nm / dr));
      const int k0 = static_cast<int>(std::lround(spec.extent_min_nm / dz));
      const int k1 = static_cast<int>(std::lround(spec.extent_max_nm / dz));
      if (s.pos < 1 || s.pos > nr - pml_cells || k0 < pml_cells || k1 > nz - pml_cells || k1 <= k0) {
        throw ConfigError("monitor '" + spec.name + "' must lie inside the non-absorbing interior");
      }
      s.first = k0;
      s.count = k1 - k0;
      for (int k = k0; k < k1; ++k) coords.push_back((k + 0.5) * dz);
      spacing = dz;
      position = s.pos * dr;
    }
    for (auto& b : s.buf) b.assign(s.count + 1, 0.0);
    s.monitor = SpectralMonitor(spec, std::move(coords), spacing, position);
    s.monitor.begin(config.dft_stride * dt, config.record_stride * dt);
    samplers.push_back(std::move(s));
  }

  // Native staggered samples: H is averaged only across the surface.
  void sample(Sampler& s, bool magnetic) {
    const double* er = f[kernels::kEr].data();
    const double* ep = f[kernels::kEphi].data();
    const double* ez = f[kernels::kEz].data();
    const double* hr = f[kernels::kHr].data();
    const double* hp = f[kernels::kHphi].data();
    const double* hz = f[kernels::kHz].data();
    if (s.surface == MonitorSurface::z_plane) {
      const int k = s.pos;
      for (int j = 0; j <= s.count; ++j) {
        const int i = s.first + j;
        if (!magnetic) {
          if (j < s.count) s.buf[0][j] = er[idx(i, k)];
          s.buf[1][j] = ep[idx(i, k)];
        } else {
          s.buf[2][j] = 0.5 * (hr[idx(i, k - 1)] + hr[idx(i, k)]);
          if (j < s.count) s.buf[3][j] = 0.5 * (hp[idx(i, k - 1)] + hp[idx(i, k)]);
        }
      }
    } else {
      const int i = s.pos;
      for (int j = 0; j <= s.count; ++j) {
        const int k = s.first + j;
        if (!magnetic) {
          s.buf[0][j] = ep[idx(i, k)];
          if (j < s.count) s.buf[1][j] = ez[idx(i, k)];
        } else {
          if (j < s.count) s.buf[2][j] = 0.5 * (hp[idx(i - 1, k)] + hp[idx(i, k)]);
          s.buf[3][j] = 0.5 * (hz[idx(i - 1, k)] + hz[idx(i, k)]);
        }
      }
    }
  }

  double energy() const {
    // Cylindrical volume weights; the axis row gets the quarter-cell annulus.
    double u = 0.0;
    for (int i = 0; i <= nr; ++i) {
      const double r_int = std::max(static_cast<double>(i), 0.25) * dr;
      const double r_half = (i + 0.5) * dr;
      double row = 0.0;
      for (int k = 0; k <= nz; ++k) {
        const std::size_t p = idx(i, k);
        row += r_half * (eps[0][p] * f[0][p] * f[0][p] + f[4][p] * f[4][p] + f[5][p] * f[5][p]) +
               r_int * (eps[1][p] * f[1][p] * f[1][p] + eps[2][p] * f[2][p] * f[2][p] + f[3][p] * f[3][p]);
      }
      u += row;
    }
    return 0.5 * kPi * u * dr * dz;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& a : f) {
      for (double v : a) m = std::max(m, std::abs(v));
    }
    return m;
  }

  void step() {
    if (config.backend == KernelBackend::openmp) {
      kernels::omp::update_h(view, pml);
    } else {
      kernels::serial::update_h(view, pml);
    }
    const double t_h = (n + 0.5) * dt;
    const double t_e = (n + 1.0) * dt;
    const double current = pulse.value(t_h) / source_volume;
    if (config.backend == KernelBackend::openmp) {
      kernels::omp::update_e(view, pml);
    } else {
      kernels::serial::update_e(view, pml);
    }
    // J_x = current on the axis: J_r = current cos(phi) drives the first e_r
    // node, J_phi = -current sin(phi) the on-axis e_phi node. The latter
    // carries no volume but keeps the axis nodes consistent with E_x.
    const std::size_t sp = idx(0, source_k);
    f[kernels::kEr][sp] -= ce[0][sp] * current;
    f[kernels::kEphi][sp] += ce[1][sp] * current;
    ++n;

    if (n % config.dft_stride == 0) {
      for (auto& s : samplers) {
        sample(s, false);
        s.monitor.accumulate(false, t_e, s.buf[0].data(), s.buf[1].data());
        sample(s, true);
        s.monitor.accumulate(true, t_h, s.buf[2].data(), s.buf[3].data());
      }
      const double w = config.dft_stride * dt;
      for (std::size_t l = 0; l < src_wavelengths.size(); ++l) {
        const double omega = 2.0 * kPi / src_wavelengths[l];
        src_j[l] += std::polar(w, omega * t_h) * current;
        src_e[l] += std::polar(w, omega * t_e) * f[kernels::kEr][sp];
      }
    }
    if (n % config.record_stride == 0) {
      for (auto& s : samplers) {
        if (!s.monitor.recorded()) continue;
        sample(s, false);
        s.monitor.record(false, t_e, s.buf[0].data(), s.buf[1].data());
        sample(s, true);
        s.monitor.record(true, t_h, s.buf[2].data(), s.buf[3].data());
      }
    }
    probe.values.push_back(f[kernels::kEr][idx(probe_i, probe_k)]);
  }

  int probe_i = 0;
  int probe_k = 0;
};

BorSimulation::BorSimulation(const PermittivityMap& map, const DipoleSource& source,
                             const std::vector<MonitorSpec>& monitors, const SimulationConfig& config)
    : impl_(new Impl) {
  try {
    validate(config);
    validate(source.pulse);
    if (source.azimuthal_mode != 1) throw ConfigError("only azimuthal mode m = 1 is supported");
    if (map.nr() < 2 || map.nz() < 2) throw ConfigError("grid too small");
    if (!(map.min_eps() >= 1.0)) throw ConfigError("permittivity below 1 in map");

    Impl& s = *impl_;
    s.nr = map.nr();
    s.nz = map.nz();
    s.dr = map.dr_nm();
    s.dz = map.dz_nm();
    s.dt = config.courant * std::min(s.dr, s.dz);
    s.config = config;
    s.pulse = source.pulse;

    const double z = std::isnan(source.z_nm) ? map.membrane_mid_nm() : source.z_nm;
    s.source_k = static_cast<int>(std::lround(z / s.dz));
    if (s.source_k <= map.pml_cells() || s.source_k >= s.nz - map.pml_cells()) {
      throw ConfigError("source must lie outside the absorbing layers");
    }
    // Weighted volume of the e_r node at r = dr/2: integral of cos^2(phi) r dr dphi dz
    // over 0 <= r < dr. With J_r = s cos(phi) the x dipole moment is s times this.
    s.source_volume = 0.5 * kPi * s.dr * s.dr * s.dz;

    const std::size_t total = static_cast<std::size_t>(s.nr + 1) * (s.nz + 1);
    for (auto& a : s.f) a.assign(total, 0.0);
    s.build_materials(map);
    s.build_pml(map.pml_cells());

    s.view.nr = s.nr;
    s.view.nz = s.nz;
    s.view.m = 1;
    s.view.dr = s.dr;
    s.view.dz = s.dz;
    s.view.dt = s.dt;
    for (int c = 0; c < 6; ++c) s.view.f[c] = s.f[c].data();
    for (int c = 0; c < 3; ++c) s.view.ce[c] = s.ce[c].data();

    for (const auto& m : monitors) {
      for (const auto& other : s.samplers) {
        if (other.monitor.name() == m.name) throw ConfigError("duplicate monitor name '" + m.name + "'");
      }
      s.add_monitor(m, map.pml_cells());
    }

    s.src_wavelengths = config.source_power_wavelengths_nm;
    s.src_j.assign(s.src_wavelengths.size(), cd{});
    s.src_e.assign(s.src_wavelengths.size(), cd{});

    s.probe_i = 0;
    s.probe_k = s.source_k;
    s.probe.r_nm = 0.0;
    s.probe.z_nm = s.source_k * s.dz;
    s.probe.dt_nm = s.dt;
    s.probe.component = "e_r";
  } catch (...) {
    delete impl_;
    throw;
  }
}

BorSimulation::~BorSimulation() { delete impl_; }

void BorSimulation::step() { impl_->step(); }
int BorSimulation::steps_taken() const { return impl_->n; }
double BorSimulation::time_nm() const { return impl_->n * impl_->dt; }
double BorSimulation::dt_nm() const { return impl_->dt; }
double BorSimulation::energy() const { return impl_->energy(); }
double BorSimulation::max_abs_field() const { return impl_->max_abs(); }
const std::vector<double>& BorSimulation::field(int index) const {
  if (index < 0 || index > 5) throw LookupError("field index must be 0..5");
  return impl_->f[index];
}

SimulationResult BorSimulation::run() {
  Impl& s = *impl_;
  const auto start = std::chrono::steady_clock::now();
  const double source_end = s.pulse.end_time();
  bool converged = false;
  s.probe.values.reserve(std::min(s.config.max_steps, 400000));
  while (s.n < s.config.max_steps) {
    s.step();
    if (s.n % s.config.energy_interval != 0 && s.n != s.config.max_steps) continue;
    const double u = s.energy();
    if (!std::isfinite(u) || std::sqrt(u) > s.config.overflow_guard) {
      std::ostringstream msg;
      msg << "field blow-up at step " << s.n << " (Courant number " << s.config.courant
          << ", dt = " << s.dt << " nm, min(dr, dz) = " << std::min(s.dr, s.dz) << " nm)";
      throw NumericalError(msg.str());
    }
    s.peak_energy = std::max(s.peak_energy, u);
    s.last_energy = u;
    if (s.n * s.dt >= source_end && u <= s.config.decay_threshold * s.peak_energy) {
      converged = true;
      break;
    }
  }

  SimulationResult r;
  r.steps = s.n;
  r.dt_nm = s.dt;
  r.courant = s.config.courant;
  r.hit_step_cap = !converged;
  r.final_energy_ratio = s.peak_energy > 0.0 ? s.last_energy / s.peak_energy : 0.0;
  r.probe = s.probe;
  for (auto& sm : s.samplers) r.monitors.push_back(sm.monitor);
  r.source_power_wavelengths_nm = s.src_wavelengths;
  for (std::size_t l = 0; l < s.src_wavelengths.size(); ++l) {
    // P = -1/2 Re(J_r* e_r) V over the source node.
    r.source_power_values.push_back(-0.5 * std::real(std::conj(s.src_j[l]) * s.src_e[l]) * s.source_volume);
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SimulationResult run_simulation(const PermittivityMap& map, const DipoleSource& source,
                                const std::vector<MonitorSpec>& monitors, const SimulationConfig& config) {
  BorSimulation sim(map, source, monitors, config);
  return sim.run();
}

SimulationResult bulk_reference(const PermittivityMap& like, double index, const DipoleSource& source,
                                const std::vector<MonitorSpec>& monitors, const SimulationConfig& config) {
  if (!(index >= 1.0)) throw DomainError("bulk reference index must be >= 1");
  return run_simulation(uniform_like(like, index * index), source, monitors, config);
}

}  // namespace cbg
