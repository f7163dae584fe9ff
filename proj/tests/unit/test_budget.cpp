#include "doctest.h"
#include "../approx.hpp"

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "cbg/budget.hpp"
#include "cbg/error.hpp"
#include "json.hpp"

using namespace cbg;

namespace {

BudgetInput fiber_numbers() {
  BudgetInput in;
  in.detected_rate_hz = {10630, 110};
  in.repetition_rate_hz = 2.5e6;
  in.stages = {{"fiber system", 0.046, 0.3 / 4.6}};
  in.g2 = {0.24, 0.0};
  in.projection_repetition_rate_hz = 80e6;
  return in;
}

// Pulsed histogram: peaks every `period` with two-sided exponential shape.
CoincidenceHistogram pulsed(double centre_area, double side_area, double period = 400, int peaks = 6,
                            double bin = 1.0) {
  CoincidenceHistogram h;
  h.repetition_period_ns = period;
  const double half = (peaks + 0.5) * period;
  const int n = static_cast<int>(2 * half / bin);
  for (int i = 0; i <= n; ++i) h.bin_edges_ns.push_back(-half + i * bin);
  for (int i = 0; i < n; ++i) {
    const double t = -half + (i + 0.5) * bin;
    double c = 0.0;
    for (int m = -peaks; m <= peaks; ++m) {
      const double a = m == 0 ? centre_area : side_area;
      c += a / 3.0 * std::exp(-std::abs(t - m * period) / 1.5) * bin;
    }
    h.counts.push_back(c);
  }
  return h;
}

}  // namespace

TEST_SUITE("budget") {

TEST_CASE("fiber efficiency chain") {
  const auto r = source_efficiency(fiber_numbers());
  CHECK(r.efficiency.value == approx(oracle::budget_eta(10630, 0, 0, 2.5e6, 0.046, 0.24)).epsilon(1e-14));
  CHECK(std::round(r.efficiency.value * 1000) / 10 == approx(8.1));
  CHECK(std::abs(r.efficiency.value - 0.0806) < 5e-5);
  CHECK(r.efficiency.sigma == approx(0.005).epsilon(0.1));
  CHECK(std::abs(r.projected_rate_hz.value - 6.5e6) < 0.1e6);
  CHECK(r.multiphoton_factor == approx(0.872).epsilon(1e-3));
  CHECK_FALSE(r.unphysical);
}

TEST_CASE("corrections and conversions") {
  CHECK(std::round(multiphoton_correction(0.24) * 1000) == 872);
  CHECK(std::round(multiphoton_correction(0.395) * 1000) == 778);
  CHECK(multiphoton_correction(0.0) == 1.0);
  CHECK_THROWS_AS(multiphoton_correction(1.2), DomainError);
  CHECK_THROWS_AS(multiphoton_correction(-0.1), DomainError);
  CHECK(std::abs(db_to_factor(8.7) - 7.413) < 1e-3);
  CHECK(db_to_factor(0) == 1.0);
  CHECK(db_to_factor(10) == approx(10.0).epsilon(1e-15));
  CHECK_THROWS_AS(db_to_factor(-3), DomainError);
}

TEST_CASE("chain efficiency") {
  const auto c = chain_efficiency({{"pre-detector", 0.23, 0.05}, {"detector", 0.20, 0.02}});
  CHECK(c.value == approx(0.046).epsilon(1e-14));
  CHECK(c.sigma / c.value == approx(std::hypot(0.05, 0.02)).epsilon(1e-14));
  const auto swapped = chain_efficiency({{"detector", 0.20, 0.02}, {"pre-detector", 0.23, 0.05}});
  CHECK(swapped.value == c.value);
  CHECK(swapped.sigma == c.sigma);
  CHECK(chain_efficiency({}).value == 1.0);
  CHECK_THROWS_AS(chain_efficiency({{"bad", 1.5, 0.0}}), DomainError);
}

TEST_CASE("lossless source saturates the chain") {
  BudgetInput in;
  in.repetition_rate_hz = 1e6;
  in.stages = {{"system", 0.25, 0.0}};
  in.detected_rate_hz = {1e6 * 0.25, 0.0};
  CHECK(source_efficiency(in).efficiency.value == approx(1.0).epsilon(1e-15));
  in.detected_rate_hz.value *= 1.5;
  const auto r = source_efficiency(in);
  CHECK(r.unphysical);
}

TEST_CASE("homogeneity and ND invariance") {
  auto in = fiber_numbers();
  const double base = source_efficiency(in).efficiency.value;
  auto doubled = in;
  doubled.detected_rate_hz.value *= 2;
  CHECK(source_efficiency(doubled).efficiency.value == approx(2 * base).epsilon(1e-14));
  for (double db : {1.0, 3.0, 8.7, 20.0}) {
    auto nd = in;
    nd.nd_filter_db = db;
    nd.detected_rate_hz.value /= std::pow(10.0, db / 10.0);
    CHECK(std::abs(source_efficiency(nd).efficiency.value - base) <= 1e-12 * base);
  }
  auto dark = in;
  dark.dark_rate_hz = 630;
  CHECK(source_efficiency(dark).efficiency.value ==
        approx(oracle::budget_eta(10630, 630, 0, 2.5e6, 0.046, 0.24)).epsilon(1e-14));
  dark.dark_rate_hz = 20000;
  CHECK_THROWS_AS(source_efficiency(dark), DataError);
}

TEST_CASE("propagated uncertainty agrees with Monte Carlo") {
  BudgetInput in = fiber_numbers();
  in.stages = {{"a", 0.23, 0.04}, {"b", 0.2, 0.03}};
  in.g2 = {0.24, 0.02};
  in.detected_rate_hz = {10630, 300};
  const auto r = source_efficiency(in);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double rate = in.detected_rate_hz.value + in.detected_rate_hz.sigma * z(rng);
    const double a = 0.23 * (1 + 0.04 * z(rng));
    const double b = 0.2 * (1 + 0.03 * z(rng));
    const double g = 0.24 + 0.02 * z(rng);
    const double eta = oracle::budget_eta(rate, 0, 0, in.repetition_rate_hz, a * b, g);
    sum += eta;
    sum2 += eta * eta;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(r.efficiency.sigma == approx(sd).epsilon(0.01));
}

TEST_CASE("g2 from constructed histograms") {
  for (double ratio : {0.0, 0.16, 1.0}) {
    const auto e = g2_zero(pulsed(1000 * ratio, 1000));
    CHECK(std::abs(e.g2 - ratio) < 0.01);
    CHECK(e.g2 >= 0.0);
  }
  // Centre no larger than the side mean never exceeds one.
  CHECK(g2_zero(pulsed(999, 1000)).g2 <= 1.0);
  const auto e = g2_zero(pulsed(160, 1000));
  CHECK(e.side_peaks == 10);
}

TEST_CASE("g2 sigma matches Poisson Monte Carlo") {
  const auto mean = pulsed(160, 1000);
  const double expected_sigma = g2_zero(mean).sigma;
  std::mt19937_64 rng(5);
  const int trials = 4000;
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto h = mean;
    for (auto& c : h.counts) c = std::poisson_distribution<long>(c)(rng);
    const double g = g2_zero(h).g2;
    s += g;
    s2 += g * g;
  }
  const double m = s / trials;
  const double sd = std::sqrt(s2 / trials - m * m);
  CHECK(expected_sigma == approx(sd).epsilon(0.10));
}

TEST_CASE("histogram validation") {
  auto h = pulsed(160, 1000, 400, 2);
  CHECK_THROWS_AS(g2_zero(h), ShapeError);  // too few side peaks
  h = pulsed(160, 1000);
  h.counts.pop_back();
  CHECK_THROWS_AS(g2_zero(h), ShapeError);
  h = pulsed(160, 0);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (std::abs(h.bin_edges_ns[i]) > 200) h.counts[i] = 0.0;
  }
  CHECK_THROWS_AS(g2_zero(h), DataError);
  h = pulsed(160, 1000);
  h.repetition_period_ns = -1;
  CHECK_THROWS_AS(g2_zero(h), DomainError);
}

TEST_CASE("JSON round trip and ledger") {
  const std::string text = R"({"detected_rate_hz": {"value": 10630, "sigma": 110}, "repetition_rate_hz": 2.5e6,
    "stages": [{"label": "system", "efficiency": 0.046, "relative_uncertainty": 0.0652}], "g2": 0.24,
    "projection_repetition_rate_hz": 8e7})";
  const auto in = budget_input_from_json(text);
  CHECK(in.detected_rate_hz.sigma == 110);
  CHECK(in.g2.value == 0.24);
  const auto r = source_efficiency(in);
  const auto j = nlohmann::json::parse(budget_result_json(in, r));
  CHECK(j.dump().find("0.0805") != std::string::npos);
  CHECK(budget_ledger_table(in, r).find("source efficiency") != std::string::npos);
  CHECK_THROWS_AS(budget_input_from_json("{"), ConfigError);
  CHECK_THROWS_AS(budget_input_from_json(R"({"repetition_rate_hz": 1})"), ConfigError);
}

}  // TEST_SUITE
