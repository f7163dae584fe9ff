#include "doctest.h"
#include "../approx.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "cbg/error.hpp"
#include "cbg/fiber.hpp"

using namespace cbg;

namespace {

FacetField gaussian_field(double w, double dr = 15.0, double extent = 40000.0) {
  std::vector<double> rho;
  std::vector<std::complex<double>> g;
  for (int j = 0; j * dr < extent; ++j) {
    rho.push_back(j * dr);
    g.emplace_back(std::exp(-rho.back() * rho.back() / (w * w)), 0.0);
  }
  return axisymmetric_field(rho, dr, g);
}

// Random smooth radial profiles for both angular orders.
FacetField random_field(std::mt19937_64& rng, double max_extent = 1e9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dr = 20.0 + 60.0 * u(rng);
  const int n = std::min(50 + static_cast<int>(400 * u(rng)), static_cast<int>(max_extent / dr));
  FacetField f;
  f.wavelength_nm = 1250;
  const int terms = 1 + static_cast<int>(4 * u(rng));
  std::vector<double> width(terms), centre(terms), k(terms);
  std::vector<std::complex<double>> a0(terms), a2(terms);
  for (int t = 0; t < terms; ++t) {
    width[t] = 300 + 6000 * u(rng);
    centre[t] = n * dr * u(rng);
    k[t] = 0.01 * u(rng);
    a0[t] = std::polar(u(rng), 2 * oracle::kPi * u(rng));
    a2[t] = std::polar(u(rng), 2 * oracle::kPi * u(rng));
  }
  for (int j = 0; j < n; ++j) {
    const double r = j * dr;
    f.rho_nm.push_back(r);
    f.weight.push_back(j == 0 ? 0.125 * dr * dr : r * dr);
    std::complex<double> s0 = 0.0, s2 = 0.0;
    for (int t = 0; t < terms; ++t) {
      const double env = std::exp(-std::pow((r - centre[t]) / width[t], 2)) * std::cos(k[t] * r);
      s0 += a0[t] * env;
      s2 += a2[t] * env * (r / (r + 200.0));
    }
    f.g0.push_back(s0);
    f.g2.push_back(s2);
  }
  return f;
}

}  // namespace

TEST_SUITE("fiber") {

TEST_CASE("gaussian mode normalisation and shape") {
  const auto m = gaussian_mode(9200, 1250);
  CHECK(m.mode_field_radius_nm == 4600);
  // Radial power integral 2 pi int |u|^2 rho d rho.
  double p = 0.0;
  const double dr = 1.0;
  for (double r = 0.5 * dr; r < 40000; r += dr) p += 2 * oracle::kPi * r * dr * std::pow(m.amplitude(r), 2);
  CHECK(p == approx(1.0).epsilon(1e-6));
  CHECK(m.amplitude(4600) / m.amplitude(0) == approx(std::exp(-1.0)).epsilon(1e-14));
  const auto wide = gaussian_mode(18400, 1250);
  CHECK(std::pow(wide.peak_amplitude(), 2) == approx(std::pow(m.peak_amplitude(), 2) / 4).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_mode(-1, 1250), DomainError);
  CHECK_THROWS_AS(gaussian_mode(9200, 1250, 1.5), DomainError);
}

TEST_CASE("self overlap is one") {
  const auto m = gaussian_mode(9200, 1250);
  CHECK(coupling_efficiency(gaussian_field(4600), m, 0.0) == approx(1.0).epsilon(1e-9));
}

TEST_CASE("offset gaussians follow exp(-dx^2/w^2)") {
  const auto m = gaussian_mode(9200, 1250);
  const auto f = gaussian_field(4600);
  std::vector<double> dx;
  for (double x = 0; x <= 20000; x += 500) dx.push_back(x);
  const auto curve = misalignment_sweep(f, m, dx);
  for (std::size_t i = 0; i < dx.size(); ++i) {
    CHECK(std::abs(curve.eta[i] - oracle::gaussian_offset_overlap(dx[i], 4600)) < 1e-6);
  }
  CHECK(coupling_efficiency(f, m, 4600) == approx(0.3679).epsilon(1e-4));
  CHECK(coupling_efficiency(f, m, 46000) < 1e-3);
  // Symmetric in the sign of the offset.
  for (double x : {700.0, 3000.0, 9000.0}) {
    CHECK(std::abs(coupling_efficiency(f, m, x) - coupling_efficiency(f, m, -x)) < 1e-6);
  }
}

TEST_CASE("random fixtures stay within [0, 1] and respect invariances") {
  std::mt19937_64 rng(20260);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto m = gaussian_mode(9200, 1250);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = random_field(rng);
    const double dx = 8000 * u(rng);
    const double eta = coupling_efficiency(f, m, dx);
    CHECK(eta >= -1e-9);
    CHECK(eta <= 1.0 + 1e-9);
    if (trial % 50 == 0) {
      FacetField g = f;
      const auto s = std::polar(0.1 + 5 * u(rng), 2 * oracle::kPi * u(rng));
      for (auto& v : g.g0) v *= s;
      for (auto& v : g.g2) v *= s;
      CHECK(std::abs(coupling_efficiency(g, m, dx) - eta) <= 1e-10 * eta + 1e-15);
    }
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("compact fields decouple at ten waists") {
  const auto m = gaussian_mode(9200, 1250);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    auto f = random_field(rng, 3 * 4600);
    CHECK(coupling_efficiency(f, m, 46000) < 1e-3);
  }
}

TEST_CASE("invalid inputs") {
  const auto m = gaussian_mode(9200, 1250);
  FacetField zero = gaussian_field(4600);
  for (auto& v : zero.g0) v = 0.0;
  CHECK_THROWS_AS(coupling_efficiency(zero, m, 0), DataError);
  FacetField bad = gaussian_field(4600);
  bad.weight.pop_back();
  CHECK_THROWS(coupling_efficiency(bad, m, 0));
}

TEST_CASE("csv layout") {
  MisalignmentCurve c{{0, 500}, {0.5, 0.25}};
  CHECK(misalignment_csv(c) == "dx_nm,eta_c\n0,0.5\n500,0.25\n");
}

}  // TEST_SUITE
