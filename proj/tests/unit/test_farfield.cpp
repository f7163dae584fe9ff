#include "doctest.h"
#include "../approx.hpp"

#include <algorithm>
#include <cmath>

#include "../oracles.hpp"
#include "cbg/error.hpp"
#include "cbg/farfield.hpp"

using namespace cbg;

namespace {

FarFieldPattern grid_pattern(double (*intensity)(double theta, double phi)) {
  FarFieldPattern p;
  p.wavelength_nm = 1250;
  for (int i = 0; i <= 90; ++i) p.theta_deg.push_back(i);
  for (int j = 0; j < 180; ++j) p.phi_deg.push_back(2.0 * j);
  for (double t : p.theta_deg) {
    for (double f : p.phi_deg) p.intensity.push_back(intensity(t * oracle::kPi / 180, f * oracle::kPi / 180));
  }
  return p;
}

struct VacuumRun {
  PermittivityMap map;
  SimulationResult result;
};

// Dipole in vacuum with a closed box and a wide plane above it.
const VacuumRun& vacuum_run() {
  static const VacuumRun run = [] {
    VacuumRun v;
    v.map = uniform_map(6000, 2400, 15, 12, 1.0);
    const double zm = v.map.membrane_mid_nm();
    auto mons = box_monitors({"box", 600, zm - 600, zm + 600, {1250}});
    mons.push_back({"plane", MonitorSurface::z_plane, zm + 600, 0, v.map.interior_radius_nm(), 1, {1250}});
    v.result = run_simulation(v.map, DipoleSource{}, mons, SimulationConfig{});
    return v;
  }();
  return run;
}

}  // namespace

TEST_SUITE("farfield") {

TEST_CASE("numerical aperture to half angle") {
  CHECK(na_to_half_angle(0.12) == approx(6.892).epsilon(1e-4));
  CHECK(std::round(na_to_half_angle(0.12)) == 7.0);
  CHECK(std::abs(na_to_half_angle(0.7) - 44.43) < 0.01);
  CHECK(na_to_half_angle(1.0) == 90.0);
  CHECK_THROWS_AS(na_to_half_angle(1.2), DomainError);
  CHECK_THROWS_AS(na_to_half_angle(-0.1), DomainError);
}

TEST_CASE("uniform hemisphere") {
  const auto p = grid_pattern([](double, double) { return 1.0; });
  CHECK(collection_efficiency(p, 1.0) == 1.0);
  CHECK(collection_efficiency(p, 0.12) == approx(oracle::uniform_cap_fraction(0.12)).epsilon(1e-6));
  CHECK(collection_efficiency(p, 0.12) == approx(0.00722).epsilon(1e-3));
  const auto a = cross_section(p, 0);
  const auto b = cross_section(p, 90);
  CHECK(a.intensity == b.intensity);
}

TEST_CASE("eta curve is monotone, ends at one and ignores scale") {
  const auto p = grid_pattern(oracle::dipole_intensity);
  auto scaled = p;
  for (auto& v : scaled.intensity) v *= 123.0;
  const auto c = eta_curve(p, default_na_grid());
  const auto cs = eta_curve(scaled, default_na_grid());
  for (std::size_t i = 1; i < c.eta.size(); ++i) CHECK(c.eta[i] >= c.eta[i - 1]);
  CHECK(c.na.back() == 1.0);
  CHECK(c.eta.back() == 1.0);
  for (std::size_t i = 0; i < c.eta.size(); ++i) CHECK(cs.eta[i] == approx(c.eta[i]).epsilon(1e-14));
  for (double th : {5.0, 20.0, 45.0, 70.0}) {
    const double na = std::sin(th * oracle::kPi / 180);
    CHECK(collection_efficiency(p, na) ==
          approx(oracle::dipole_cone_fraction(th * oracle::kPi / 180)).epsilon(2e-4));
  }
}

TEST_CASE("dipole pair average equals the rotated mean") {
  const auto& v = vacuum_run();
  const auto proj = FarFieldProjector::from_box(v.result.monitor("box/top"), v.result.monitor("box/bottom"),
                                                v.result.monitor("box/side"), 1250);
  FarFieldOptions single;
  single.azimuthal_average = false;
  const auto p = make_pattern(proj, single);
  const auto avg = make_pattern(proj, FarFieldOptions{});
  const auto mean = average_patterns(p, rotate_pattern(p, 90));
  REQUIRE(mean.intensity.size() == avg.intensity.size());
  for (std::size_t i = 0; i < avg.intensity.size(); ++i) {
    CHECK(std::abs(mean.intensity[i] - avg.intensity[i]) <= 1e-12 * avg.intensity[i]);
  }
}

TEST_CASE("box projection of a vacuum dipole matches the analytic pattern") {
  const auto& v = vacuum_run();
  const auto proj = FarFieldProjector::from_box(v.result.monitor("box/top"), v.result.monitor("box/bottom"),
                                                v.result.monitor("box/side"), 1250);
  FarFieldOptions single;
  single.azimuthal_average = false;
  const auto p = make_pattern(proj, single);
  const double total = p.grid_total();
  const double analytic_total = 4 * oracle::kPi / 3;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.theta_deg.size(); ++i) {
    for (std::size_t j = 0; j < p.phi_deg.size(); ++j) {
      const double a = oracle::dipole_intensity(p.theta_deg[i] * oracle::kPi / 180, p.phi_deg[j] * oracle::kPi / 180) /
                       analytic_total;
      const double d = p.at(i, j) / total - a;
      num += d * d;
      den += a * a;
    }
  }
  CHECK(std::sqrt(num / den) < 0.03);
  for (double th : {5.0, 10.0, 30.0, 60.0, 89.0}) {
    CHECK(p.cone_integral(th) / total ==
          approx(oracle::dipole_cone_fraction(th * oracle::kPi / 180)).epsilon(0.03));
  }
  // Hemisphere power equals half the closed-box flux.
  CHECK(proj.cone_power(oracle::kPi / 2) == approx(0.5 * box_flux(v.result, "box", 1250)).epsilon(0.02));
}

TEST_CASE("plane projection conserves the upward flux") {
  const auto& v = vacuum_run();
  const auto& plane = v.result.monitor("plane");
  const auto pat = near_to_far(plane, 1250, FarFieldOptions{}, &v.map);
  CHECK(pat.total_power == approx(plane.flux(1250)).epsilon(0.05));
  CHECK(pat.grid_total() == approx(pat.total_power).epsilon(1e-3));
  // The slice of the averaged pattern is symmetric about the axis.
  const auto slice = cross_section(pat, 0);
  for (std::size_t i = 0; i < slice.theta_deg.size(); ++i) {
    CHECK(slice.intensity[i] == approx(slice.intensity[slice.theta_deg.size() - 1 - i]).epsilon(1e-12));
  }
}

TEST_CASE("plane projection converges to the analytic cone as the plane widens") {
  // A finite plane misses emission past its edge, so cone fractions of a bare
  // dipole are biased high; the bias falls as the plane grows.
  auto eta_for = [](double radius) {
    const auto map = uniform_map(radius, 2400, 15, 12, 1.0);
    const double zp = map.membrane_mid_nm() + 600;
    const auto r = run_simulation(map, DipoleSource{},
                                  {{"plane", MonitorSurface::z_plane, zp, 0, map.interior_radius_nm(), 1, {1250}}},
                                  SimulationConfig{});
    return collection_efficiency(near_to_far(r.monitor("plane"), 1250, FarFieldOptions{}, &map), 0.7);
  };
  const double exact = oracle::dipole_cone_fraction(std::asin(0.7));
  const double narrow = eta_for(6000) - exact;
  const double wide = eta_for(12000) - exact;
  CHECK(narrow > 0.0);
  CHECK(wide > 0.0);
  CHECK(wide < 0.5 * narrow);
  CHECK(wide < 0.1 * exact);
}

TEST_CASE("zero fields give a zero pattern") {
  const auto m = uniform_map(1200, 1200, 30, 8, 1.0);
  DipoleSource src;
  src.pulse.amplitude = 0.0;
  const double z = m.membrane_mid_nm() + 300;
  const auto r = run_simulation(m, src, {{"p", MonitorSurface::z_plane, z, 0, m.interior_radius_nm(), 1, {1250}}},
                                SimulationConfig{});
  const auto pat = near_to_far(r.monitor("p"), 1250);
  for (double v : pat.intensity) CHECK(v == 0.0);
  CHECK_THROWS_AS(collection_efficiency(pat, 0.5), DataError);
}

TEST_CASE("side lobes and exports") {
  // Main lobe on axis plus a ring at 40 degrees.
  const auto p = grid_pattern([](double t, double) {
    const double d = (t - 40 * oracle::kPi / 180) / 0.05;
    return std::exp(-t * t / 0.01) + 0.3 * std::exp(-d * d);
  });
  CHECK(side_lobe_ratio(cross_section(p, 0), 30) == approx(0.3).epsilon(0.01));
  const auto csv = pattern_csv(p);
  CHECK(csv.rfind("theta_deg,phi_deg,intensity\n", 0) == 0);
  CHECK(cross_section_csv(cross_section(p, 0)).rfind("theta_deg,intensity\n", 0) == 0);
  const auto j = eta_curve_json(eta_curve(p, {0.5, 1.0}));
  CHECK(j.find("\"na\"") != std::string::npos);
  CHECK(j.find("\"eta\"") != std::string::npos);
}

}  // TEST_SUITE
