#include "cbg/budget.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cbg/error.hpp"
#include "cbg/io.hpp"
#include "json.hpp"

namespace cbg {

void CoincidenceHistogram::validate() const {
  if (counts.empty() || bin_edges_ns.size() != counts.size() + 1) {
    throw ShapeError("histogram needs counts and one more bin edge than counts");
  }
  const double width = bin_edges_ns[1] - bin_edges_ns[0];
  if (!(width > 0.0)) throw ShapeError("histogram bin edges must increase");
  for (std::size_t i = 1; i < bin_edges_ns.size(); ++i) {
    const double w = bin_edges_ns[i] - bin_edges_ns[i - 1];
    if (std::abs(w - width) > 1e-6 * width) throw ShapeError("histogram bins are not uniform");
  }
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DataError("histogram counts must be finite and non-negative");
  }
  if (!(repetition_period_ns > 0.0)) throw DomainError("repetition period must be positive");
  if (!(repetition_period_ns > 2.0 * window())) {
    throw DomainError("repetition period must exceed twice the integration window");
  }
}

double CoincidenceHistogram::window() const {
  return window_half_width_ns > 0.0 ? window_half_width_ns : 0.25 * repetition_period_ns;
}

CoincidenceHistogram histogram_from_rows(const std::vector<std::pair<double, double>>& rows,
                                         double repetition_period_ns, double window_half_width_ns) {
  if (rows.size() < 2) throw ShapeError("histogram needs at least two bins");
  CoincidenceHistogram h;
  const double width = rows[1].first - rows[0].first;
  for (const auto& [t, c] : rows) {
    h.bin_edges_ns.push_back(t - 0.5 * width);
    h.counts.push_back(c);
  }
  h.bin_edges_ns.push_back(rows.back().first + 0.5 * width);
  h.repetition_period_ns = repetition_period_ns;
  h.window_half_width_ns = window_half_width_ns;
  h.validate();
  return h;
}

G2Estimate g2_zero(const CoincidenceHistogram& hist) {
  hist.validate();
  const double w = hist.window();
  const double period = hist.repetition_period_ns;
  const double lo = hist.bin_edges_ns.front();
  const double hi = hist.bin_edges_ns.back();
  // A bin belongs to a peak when its centre lies in [m T - w, m T + w).
  auto area = [&](double centre) {
    double s = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      const double t = 0.5 * (hist.bin_edges_ns[i] + hist.bin_edges_ns[i + 1]);
      if (t >= centre - w && t < centre + w) s += hist.counts[i];
    }
    return s;
  };
  if (lo > -w || hi < w) throw ShapeError("histogram does not cover the zero-delay peak");
  const long m_min = static_cast<long>(std::ceil((lo + w) / period));
  const long m_max = static_cast<long>(std::floor((hi - w) / period));
  double side_total = 0.0;
  int side_count = 0;
  for (long m = m_min; m <= m_max; ++m) {
    if (m >= -1 && m <= 1) continue;
    side_total += area(m * period);
    ++side_count;
  }
  if (side_count < 5) {
    throw ShapeError("histogram spans " + std::to_string(side_count) +
                     " usable side peaks; at least 5 are needed");
  }
  if (!(side_total > 0.0)) throw DataError("side peaks are empty; g2(0) is undefined");

  G2Estimate e;
  e.center_area = area(0.0);
  e.mean_side_area = side_total / side_count;
  e.side_peaks = side_count;
  e.g2 = e.center_area / e.mean_side_area;
  // Var(C) = C, Var(mean S) = sum S / N^2.
  const double s = e.mean_side_area;
  const double var_mean = side_total / (static_cast<double>(side_count) * side_count);
  e.sigma = std::sqrt(e.center_area / (s * s) + e.center_area * e.center_area * var_mean / (s * s * s * s));
  return e;
}

double multiphoton_correction(double g2) {
  if (!(g2 >= 0.0 && g2 < 1.0)) throw DomainError("multi-photon correction needs 0 <= g2 < 1, got " + fmt_num(g2));
  return std::sqrt(1.0 - g2);
}

double db_to_factor(double db) {
  if (!(db >= 0.0) || !std::isfinite(db)) throw DomainError("attenuation in dB must be >= 0");
  return std::pow(10.0, db / 10.0);
}

void EfficiencyStage::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw DomainError("stage '" + label + "' efficiency must lie in (0, 1]");
  }
  if (!(relative_uncertainty >= 0.0) || !std::isfinite(relative_uncertainty)) {
    throw DomainError("stage '" + label + "' relative uncertainty must be >= 0");
  }
}

Measured chain_efficiency(const std::vector<EfficiencyStage>& stages) {
  double product = 1.0;
  double rel2 = 0.0;
  for (const auto& s : stages) {
    s.validate();
    product *= s.efficiency;
    rel2 += s.relative_uncertainty * s.relative_uncertainty;
  }
  return {product, product * std::sqrt(rel2)};
}

void BudgetInput::validate() const {
  if (!(detected_rate_hz.value >= 0.0) || !(detected_rate_hz.sigma >= 0.0)) {
    throw DomainError("detected rate and its uncertainty must be >= 0");
  }
  if (!(repetition_rate_hz > 0.0)) throw DomainError("repetition rate must be positive");
  if (!(g2.value >= 0.0 && g2.value < 1.0)) throw DomainError("g2 must lie in [0, 1)");
  if (!(g2.sigma >= 0.0)) throw DomainError("g2 uncertainty must be >= 0");
  if (!(nd_filter_db >= 0.0)) throw DomainError("ND filter attenuation must be >= 0 dB");
  if (!(dark_rate_hz >= 0.0)) throw DomainError("dark rate must be >= 0");
  if (!(projection_repetition_rate_hz >= 0.0)) throw DomainError("projection repetition rate must be >= 0");
  for (const auto& s : stages) s.validate();
}

BudgetResult source_efficiency(const BudgetInput& in) {
  in.validate();
  BudgetResult r;
  r.corrected_rate_hz = in.detected_rate_hz.value - in.dark_rate_hz;
  if (!(r.corrected_rate_hz > 0.0)) throw DataError("rate after dark-count subtraction is not positive");
  r.nd_factor = db_to_factor(in.nd_filter_db);
  r.chain = chain_efficiency(in.stages);
  r.multiphoton_factor = multiphoton_correction(in.g2.value);
  const double eta = r.corrected_rate_hz * r.nd_factor / (in.repetition_rate_hz * r.chain.value) * r.multiphoton_factor;
  const double rel_rate = in.detected_rate_hz.sigma / r.corrected_rate_hz;
  const double rel_chain = r.chain.sigma / r.chain.value;
  const double rel_g2 = in.g2.sigma / (2.0 * (1.0 - in.g2.value));
  const double rel = std::sqrt(rel_rate * rel_rate + rel_chain * rel_chain + rel_g2 * rel_g2);
  r.efficiency = {eta, eta * rel};
  r.unphysical = eta > 1.0;
  if (in.projection_repetition_rate_hz > 0.0) {
    r.projected_rate_hz = {eta * in.projection_repetition_rate_hz, eta * rel * in.projection_repetition_rate_hz};
  }
  return r;
}

namespace {

Measured measured_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("budget input lacks '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_number()) return {v.get<double>(), 0.0};
  return {v.at("value").get<double>(), v.value("sigma", 0.0)};
}

}  // namespace

BudgetInput budget_input_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("budget input is not valid JSON: ") + e.what());
  }
  BudgetInput in;
  try {
    in.detected_rate_hz = measured_from(j, "detected_rate_hz");
    in.repetition_rate_hz = j.at("repetition_rate_hz").get<double>();
    in.g2 = measured_from(j, "g2");
    in.nd_filter_db = j.value("nd_filter_db", 0.0);
    in.dark_rate_hz = j.value("dark_rate_hz", 0.0);
    in.projection_repetition_rate_hz = j.value("projection_repetition_rate_hz", 0.0);
    for (const auto& s : j.value("stages", nlohmann::json::array())) {
      in.stages.push_back({s.value("label", std::string("stage")), s.at("efficiency").get<double>(),
                           s.value("relative_uncertainty", 0.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("budget input: ") + e.what());
  }
  in.validate();
  return in;
}

std::string budget_result_json(const BudgetInput& in, const BudgetResult& r) {
  nlohmann::json j;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : in.stages) {
    stages.push_back({{"label", s.label}, {"efficiency", s.efficiency}, {"relative_uncertainty", s.relative_uncertainty}});
  }
  j["stages"] = stages;
  j["chain_efficiency"] = {{"value", r.chain.value}, {"sigma", r.chain.sigma}};
  j["detected_rate_hz"] = {{"value", in.detected_rate_hz.value}, {"sigma", in.detected_rate_hz.sigma}};
  j["dark_rate_hz"] = in.dark_rate_hz;
  j["corrected_rate_hz"] = r.corrected_rate_hz;
  j["nd_filter_db"] = in.nd_filter_db;
  j["nd_factor"] = r.nd_factor;
  j["repetition_rate_hz"] = in.repetition_rate_hz;
  j["g2"] = {{"value", in.g2.value}, {"sigma", in.g2.sigma}};
  j["multiphoton_correction"] = r.multiphoton_factor;
  j["efficiency"] = {{"value", r.efficiency.value}, {"sigma", r.efficiency.sigma}};
  j["unphysical"] = r.unphysical;
  if (in.projection_repetition_rate_hz > 0.0) {
    j["projection"] = {{"repetition_rate_hz", in.projection_repetition_rate_hz},
                       {"single_photon_rate_hz", r.projected_rate_hz.value},
                       {"sigma_hz", r.projected_rate_hz.sigma}};
  }
  return j.dump(2) + "\n";
}

std::string budget_ledger_table(const BudgetInput& in, const BudgetResult& r) {
  std::string out;
  char line[160];
  auto add = [&](const std::string& label, const std::string& value) {
    std::snprintf(line, sizeof line, "%-32s %s\n", label.c_str(), value.c_str());
    out += line;
  };
  add("detected rate [Hz]", fmt_num(in.detected_rate_hz.value) + " +- " + fmt_num(in.detected_rate_hz.sigma));
  add("dark + afterpulse [Hz]", fmt_num(in.dark_rate_hz));
  add("corrected rate [Hz]", fmt_num(r.corrected_rate_hz));
  add("ND filter factor", fmt_num(r.nd_factor) + " (" + fmt_num(in.nd_filter_db) + " dB)");
  for (const auto& s : in.stages) {
    add("stage: " + s.label, fmt_num(s.efficiency) + " (rel +- " + fmt_num(s.relative_uncertainty) + ")");
  }
  add("chain efficiency", fmt_num(r.chain.value) + " +- " + fmt_num(r.chain.sigma));
  add("repetition rate [Hz]", fmt_num(in.repetition_rate_hz));
  add("multi-photon correction", fmt_num(r.multiphoton_factor) + " (g2 = " + fmt_num(in.g2.value) + ")");
  add("source efficiency", fmt_num(r.efficiency.value) + " +- " + fmt_num(r.efficiency.sigma) +
                               (r.unphysical ? "  UNPHYSICAL (> 1)" : ""));
  if (in.projection_repetition_rate_hz > 0.0) {
    add("projected rate [Hz] @ " + fmt_num(in.projection_repetition_rate_hz),
        fmt_num(r.projected_rate_hz.value) + " +- " + fmt_num(r.projected_rate_hz.sigma));
  }
  return out;
}

std::string g2_json(const G2Estimate& e) {
  nlohmann::json j{{"g2", e.g2},
                   {"sigma", e.sigma},
                   {"center_area", e.center_area},
                   {"mean_side_area", e.mean_side_area},
                   {"side_peaks", e.side_peaks}};
  return j.dump(2) + "\n";
}

}  // namespace cbg
