#include "cbg/farfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "cbg/error.hpp"
#include "cbg/io.hpp"
#include "json.hpp"

namespace cbg {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double bessel(int n, double x) { return x == 0.0 ? (n == 0 ? 1.0 : 0.0) : std::cyl_bessel_j(n, x); }

}  // namespace

// Plane projection. On a z-plane the transverse field of the m = 1 problem is
//   E_x = g0(r) + g2(r) cos 2phi,  E_y = g2(r) sin 2phi,
// so its 2D Fourier transform needs only Hankel transforms of orders 0 and 2:
//   A = int g0 J0(k_t r) r dr,  B = int g2 J2(k_t r) r dr,  k_t = k sin(theta),
// and the angular-spectrum far field gives
//   dP/dOmega = k^2/2 [cos^2 phi |A - B|^2 + sin^2 phi cos^2 theta |A + B|^2].
FarFieldProjector FarFieldProjector::from_plane(const SpectralMonitor& plane, double wavelength_nm,
                                                const PermittivityMap* map) {
  if (plane.surface() != MonitorSurface::z_plane) {
    throw ConfigError("far-field plane projection needs a z_plane monitor, got '" + plane.name() + "'");
  }
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  if (map != nullptr) {
    const int kp = static_cast<int>(std::lround(plane.position_nm() / map->dz_nm()));
    for (double r : plane.coords()) {
      const int i = std::min(map->nr() - 1, static_cast<int>(r / map->dr_nm()));
      for (int k : {kp - 1, kp}) {
        if (k < 0 || k >= map->nz() || (*map)(i, k) != 1.0) {
          throw ConfigError("far-field plane '" + plane.name() + "' intersects material at r = " +
                            fmt_num(r) + " nm");
        }
      }
    }
  }
  const TangentialFields f = plane.fields(wavelength_nm);
  FarFieldProjector p;
  p.kind_ = Kind::plane;
  p.wavelength_ = wavelength_nm;
  p.k_ = 2.0 * kPi / wavelength_nm;
  p.r_ = plane.coords();
  p.dr_weight_.resize(p.r_.size());
  p.g0_.resize(p.r_.size());
  p.g2_.resize(p.r_.size());
  // Orientation only flips the sign of the normal; the upward projection uses
  // the same tangential E either way.
  for (std::size_t j = 0; j < p.r_.size(); ++j) {
    p.dr_weight_[j] = p.r_[j] * plane.spacing_nm();
    p.g0_[j] = 0.5 * (f.c[0][j] - f.c[1][j]);
    p.g2_[j] = 0.5 * (f.c[0][j] + f.c[1][j]);
  }
  return p;
}

// Closed-surface projection with J = n x H and M = -n x E. For a current
// V = (a cos phi', b sin phi', c cos phi') (r, phi, z components) the phi'
// integral of V e^{-i k r.r'} gives, with kappa = k rho' sin(theta),
//   P_theta = pi cos(phi) [cos(theta)((a-b) J0 - (a+b) J2) + 2i sin(theta) c J1]
//   P_phi   = pi sin(phi) [(b-a) J0 - (a+b) J2]
// and for V = (a sin phi', b cos phi', c sin phi')
//   P_theta = pi sin(phi) [cos(theta)((a+b) J0 - (a-b) J2) + 2i sin(theta) c J1]
//   P_phi   = pi cos(phi) [(a+b) J0 + (a-b) J2],
// each times e^{-i k z' cos(theta)}. J is of the first kind, M of the second.
FarFieldProjector FarFieldProjector::from_box(const SpectralMonitor& top, const SpectralMonitor& bottom,
                                              const SpectralMonitor& side, double wavelength_nm,
                                              double exterior_index) {
  if (top.surface() != MonitorSurface::z_plane || bottom.surface() != MonitorSurface::z_plane ||
      side.surface() != MonitorSurface::cylinder) {
    throw ConfigError("box projection needs two z_plane faces and one cylinder");
  }
  if (!(exterior_index >= 1.0)) throw DomainError("exterior index must be >= 1");
  FarFieldProjector p;
  p.kind_ = Kind::box;
  p.wavelength_ = wavelength_nm;
  p.k_ = 2.0 * kPi * exterior_index / wavelength_nm;
  p.eta_ = 1.0 / exterior_index;
  const double z_ref = 0.5 * (top.position_nm() + bottom.position_nm());

  for (const SpectralMonitor* m : {&top, &bottom}) {
    const TangentialFields f = m->fields(wavelength_nm);  // e_r, e_phi, h_r, h_phi
    const double s = m->orientation();
    Face face;
    for (std::size_t j = 0; j < m->coords().size(); ++j) {
      face.rho.push_back(m->coords()[j]);
      face.z.push_back(m->position_nm() - z_ref);
      face.weight.push_back(m->coords()[j] * m->spacing_nm());
      face.ja.push_back(-s * f.c[3][j]);
      face.jb.push_back(s * f.c[2][j]);
      face.jc.push_back(0.0);
      face.ma.push_back(s * f.c[1][j]);
      face.mb.push_back(-s * f.c[0][j]);
      face.mc.push_back(0.0);
    }
    p.faces_.push_back(std::move(face));
  }
  {
    const TangentialFields f = side.fields(wavelength_nm);  // e_phi, e_z, h_phi, h_z
    const double s = side.orientation();
    Face face;
    for (std::size_t j = 0; j < side.coords().size(); ++j) {
      face.rho.push_back(side.position_nm());
      face.z.push_back(side.coords()[j] - z_ref);
      face.weight.push_back(side.position_nm() * side.spacing_nm());
      face.ja.push_back(0.0);
      face.jb.push_back(-s * f.c[3][j]);
      face.jc.push_back(s * f.c[2][j]);
      face.ma.push_back(0.0);
      face.mb.push_back(s * f.c[1][j]);
      face.mc.push_back(-s * f.c[0][j]);
    }
    p.faces_.push_back(std::move(face));
  }
  return p;
}

std::pair<cd, cd> FarFieldProjector::amplitudes(double theta) const {
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  if (kind_ == Kind::plane) {
    const double kt = k_ * st;
    cd a{}, b{};
    for (std::size_t j = 0; j < r_.size(); ++j) {
      const double x = kt * r_[j];
      a += g0_[j] * (bessel(0, x) * dr_weight_[j]);
      b += g2_[j] * (bessel(2, x) * dr_weight_[j]);
    }
    const double s = k_ / std::numbers::sqrt2;
    return {s * (a - b), s * ct * (a + b)};
  }
  cd n_theta{}, n_phi{}, l_theta{}, l_phi{};
  const cd two_i_st(0.0, 2.0 * st);
  for (const Face& f : faces_) {
    for (std::size_t j = 0; j < f.rho.size(); ++j) {
      const double kappa = k_ * f.rho[j] * st;
      const double j0 = bessel(0, kappa);
      const double j1 = bessel(1, kappa);
      const double j2 = bessel(2, kappa);
      const cd w = std::polar(f.weight[j] * kPi, -k_ * f.z[j] * ct);
      n_theta += w * (ct * ((f.ja[j] - f.jb[j]) * j0 - (f.ja[j] + f.jb[j]) * j2) + two_i_st * f.jc[j] * j1);
      n_phi += w * ((f.jb[j] - f.ja[j]) * j0 - (f.ja[j] + f.jb[j]) * j2);
      l_theta += w * (ct * ((f.ma[j] + f.mb[j]) * j0 - (f.ma[j] - f.mb[j]) * j2) + two_i_st * f.mc[j] * j1);
      l_phi += w * ((f.ma[j] + f.mb[j]) * j0 + (f.ma[j] - f.mb[j]) * j2);
    }
  }
  // dP/dOmega = k^2 / (32 pi^2 eta) (|eta N_theta + L_phi|^2 + |eta N_phi - L_theta|^2)
  const double s = k_ / (std::sqrt(32.0 * eta_) * kPi);
  return {s * (eta_ * n_theta + l_phi), s * (eta_ * n_phi - l_theta)};
}

double FarFieldProjector::cone_power(double theta_max) const {
  if (theta_max <= 0.0) return 0.0;
  theta_max = std::min(theta_max, 0.5 * kPi);
  const int panels = std::max(1, static_cast<int>(std::ceil(theta_max / (0.5 * kDeg))));
  const double h = theta_max / panels;
  auto integrand = [&](double t) {
    const auto [ft, fp] = amplitudes(t);
    return (std::norm(ft) + std::norm(fp)) * std::sin(t);
  };
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    sum += boost::math::quadrature::gauss<double, 10>::integrate(integrand, p * h, (p + 1) * h);
  }
  // The phi integral of cos^2 and sin^2 is pi each.
  return kPi * sum;
}

// ---------------------------------------------------------------- patterns

FarFieldPattern make_pattern(const FarFieldProjector& projector, const FarFieldOptions& options) {
  const double dt = options.theta_step_deg;
  const double dp = options.phi_step_deg;
  const int nt = static_cast<int>(std::lround(90.0 / dt));
  const int np = static_cast<int>(std::lround(360.0 / dp));
  if (!(dt > 0.0) || !(dp > 0.0) || std::abs(nt * dt - 90.0) > 1e-9 || std::abs(np * dp - 360.0) > 1e-9) {
    throw ConfigError("far-field steps must divide 90 (theta) and 360 (phi) degrees");
  }
  FarFieldPattern p;
  p.wavelength_nm = projector.wavelength_nm();
  p.azimuthally_averaged = options.azimuthal_average;
  for (int i = 0; i <= nt; ++i) p.theta_deg.push_back(i * dt);
  for (int j = 0; j < np; ++j) p.phi_deg.push_back(j * dp);
  p.intensity.resize(p.theta_deg.size() * p.phi_deg.size());
  for (std::size_t i = 0; i < p.theta_deg.size(); ++i) {
    const auto [ft, fp] = projector.amplitudes(p.theta_deg[i] * kDeg);
    const double it = std::norm(ft);
    const double ip = std::norm(fp);
    for (std::size_t j = 0; j < p.phi_deg.size(); ++j) {
      double v = 0.5 * (it + ip);
      if (!options.azimuthal_average) {
        const double c = std::cos(p.phi_deg[j] * kDeg);
        v = c * c * it + (1.0 - c * c) * ip;
      }
      p.intensity[i * p.phi_deg.size() + j] = v;
    }
  }
  p.total_power = projector.cone_power(0.5 * kPi);
  return p;
}

FarFieldPattern near_to_far(const SpectralMonitor& plane, double wavelength_nm, const FarFieldOptions& options,
                            const PermittivityMap* map) {
  return make_pattern(FarFieldProjector::from_plane(plane, wavelength_nm, map), options);
}

double FarFieldPattern::cone_integral(double theta_max_deg) const {
  if (theta_deg.size() < 2 || phi_deg.empty()) throw ShapeError("pattern grid is empty");
  const double dphi = 2.0 * kPi / phi_deg.size();
  std::vector<double> ring(theta_deg.size());
  for (std::size_t i = 0; i < theta_deg.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < phi_deg.size(); ++j) s += at(i, j);
    ring[i] = s * dphi;
  }
  const double limit = std::clamp(theta_max_deg, 0.0, theta_deg.back()) * kDeg;
  double total = 0.0;
  // Piecewise-linear ring power in theta, integrated exactly against sin(theta).
  for (std::size_t i = 0; i + 1 < theta_deg.size(); ++i) {
    const double a = theta_deg[i] * kDeg;
    const double b_full = theta_deg[i + 1] * kDeg;
    if (a >= limit) break;
    const double h = b_full - a;
    const double b = std::min(b_full, limit);
    const double slope = (ring[i + 1] - ring[i]) / h;
    const double int_sin = std::cos(a) - std::cos(b);
    const double int_lin = -(b - a) * std::cos(b) + std::sin(b) - std::sin(a);
    total += ring[i] * int_sin + slope * int_lin;
  }
  return total;
}

FarFieldPattern rotate_pattern(const FarFieldPattern& pattern, double degrees) {
  const double step = pattern.phi_deg.size() > 1 ? pattern.phi_deg[1] - pattern.phi_deg[0] : 360.0;
  const double shift = degrees / step;
  const long s = std::lround(shift);
  if (std::abs(shift - s) > 1e-9) throw DomainError("rotation must be a multiple of the phi step");
  const long np = static_cast<long>(pattern.phi_deg.size());
  FarFieldPattern out = pattern;
  for (std::size_t i = 0; i < pattern.theta_deg.size(); ++i) {
    for (long j = 0; j < np; ++j) {
      const long src = ((j - s) % np + np) % np;
      out.intensity[i * np + j] = pattern.intensity[i * np + src];
    }
  }
  return out;
}

FarFieldPattern average_patterns(const FarFieldPattern& a, const FarFieldPattern& b) {
  if (a.theta_deg != b.theta_deg || a.phi_deg != b.phi_deg) throw ShapeError("pattern grids differ");
  FarFieldPattern out = a;
  for (std::size_t n = 0; n < out.intensity.size(); ++n) out.intensity[n] = 0.5 * (a.intensity[n] + b.intensity[n]);
  out.total_power = 0.5 * (a.total_power + b.total_power);
  out.azimuthally_averaged = a.azimuthally_averaged && b.azimuthally_averaged;
  return out;
}

double na_to_half_angle(double na) {
  if (!(na >= 0.0 && na <= 1.0)) throw DomainError("numerical aperture must lie in [0, 1]");
  return std::asin(na) / kDeg;
}

double collection_efficiency(const FarFieldPattern& pattern, double na) {
  if (!(na > 0.0 && na <= 1.0)) throw DomainError("numerical aperture must lie in (0, 1]");
  const double total = pattern.grid_total();
  if (!(total > 0.0)) throw DataError("far-field pattern carries no power");
  return pattern.cone_integral(na_to_half_angle(na)) / total;
}

EtaCurve eta_curve(const FarFieldPattern& pattern, const std::vector<double>& na_values) {
  EtaCurve c;
  for (double na : na_values) {
    c.na.push_back(na);
    c.eta.push_back(collection_efficiency(pattern, na));
  }
  return c;
}

std::vector<double> default_na_grid() {
  std::vector<double> v;
  for (int i = 1; i <= 50; ++i) v.push_back(i / 50.0);
  return v;
}

CrossSection cross_section(const FarFieldPattern& pattern, double phi_deg) {
  const std::size_t np = pattern.phi_deg.size();
  const double step = 360.0 / np;
  // Periodic linear interpolation in phi.
  auto column = [&](std::size_t i, double phi) {
    double x = std::fmod(phi, 360.0);
    if (x < 0.0) x += 360.0;
    const double pos = x / step;
    const std::size_t j0 = static_cast<std::size_t>(std::floor(pos)) % np;
    const std::size_t j1 = (j0 + 1) % np;
    const double w = pos - std::floor(pos);
    return (1.0 - w) * pattern.at(i, j0) + w * pattern.at(i, j1);
  };
  CrossSection c;
  const std::size_t nt = pattern.theta_deg.size();
  for (std::size_t n = nt; n-- > 1;) {
    c.theta_deg.push_back(-pattern.theta_deg[n]);
    c.intensity.push_back(column(n, phi_deg + 180.0));
  }
  for (std::size_t n = 0; n < nt; ++n) {
    c.theta_deg.push_back(pattern.theta_deg[n]);
    c.intensity.push_back(column(n, phi_deg));
  }
  return c;
}

double side_lobe_ratio(const CrossSection& slice, double min_theta_deg) {
  double main = 0.0;
  double side = 0.0;
  const std::size_t n = slice.intensity.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double v = slice.intensity[j];
    if (std::abs(slice.theta_deg[j]) < min_theta_deg) {
      main = std::max(main, v);
      continue;
    }
    const bool left = j == 0 || v >= slice.intensity[j - 1];
    const bool right = j + 1 == n || v >= slice.intensity[j + 1];
    const bool edge = j == 0 || j + 1 == n;
    if (left && right && !edge) side = std::max(side, v);
  }
  return main > 0.0 ? side / main : 0.0;
}

std::string pattern_csv(const FarFieldPattern& pattern) {
  std::string out = "theta_deg,phi_deg,intensity\n";
  for (std::size_t i = 0; i < pattern.theta_deg.size(); ++i) {
    for (std::size_t j = 0; j < pattern.phi_deg.size(); ++j) {
      out += csv_row({pattern.theta_deg[i], pattern.phi_deg[j], pattern.at(i, j)});
    }
  }
  return out;
}

std::string cross_section_csv(const CrossSection& slice) {
  std::string out = "theta_deg,intensity\n";
  for (std::size_t j = 0; j < slice.theta_deg.size(); ++j) {
    out += csv_row({slice.theta_deg[j], slice.intensity[j]});
  }
  return out;
}

std::string eta_curve_json(const EtaCurve& curve) {
  nlohmann::json j;
  j["na"] = curve.na;
  j["eta"] = curve.eta;
  return j.dump(2) + "\n";
}

}  // namespace cbg
