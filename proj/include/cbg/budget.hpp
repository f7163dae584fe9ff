#pragma once

#include <string>
#include <vector>

namespace cbg {

struct Measured {
  double value = 0.0;
  double sigma = 0.0;
};

/// Pulsed start-stop coincidence histogram. Bins are uniform; `bin_edges_ns`
/// has one more entry than `counts`.
struct CoincidenceHistogram {
  std::vector<double> bin_edges_ns;
  std::vector<double> counts;
  double repetition_period_ns = 0.0;
  /// Integration half-width around each peak; <= 0 selects period / 4.
  double window_half_width_ns = 0.0;

  void validate() const;
  double window() const;
};

/// Histogram from (bin centre, counts) rows.
CoincidenceHistogram histogram_from_rows(const std::vector<std::pair<double, double>>& rows,
                                         double repetition_period_ns, double window_half_width_ns = 0.0);

struct G2Estimate {
  double g2 = 0.0;
  double sigma = 0.0;
  double center_area = 0.0;
  double mean_side_area = 0.0;
  int side_peaks = 0;
};

/// Centre-peak area over the mean area of all complete side peaks, skipping
/// the two peaks adjacent to zero delay. Poisson errors on the raw counts.
G2Estimate g2_zero(const CoincidenceHistogram& hist);

/// sqrt(1 - g2).
double multiphoton_correction(double g2);

double db_to_factor(double db);

struct EfficiencyStage {
  std::string label;
  double efficiency = 1.0;
  double relative_uncertainty = 0.0;

  void validate() const;
};

/// Product of stage efficiencies with relative uncertainties in quadrature.
Measured chain_efficiency(const std::vector<EfficiencyStage>& stages);

struct BudgetInput {
  Measured detected_rate_hz;
  double repetition_rate_hz = 0.0;
  std::vector<EfficiencyStage> stages;
  Measured g2;
  double nd_filter_db = 0.0;
  double dark_rate_hz = 0.0;
  /// Repetition rate used for the brightness projection; 0 disables it.
  double projection_repetition_rate_hz = 0.0;

  void validate() const;
};

struct BudgetResult {
  Measured efficiency;
  Measured chain;
  double corrected_rate_hz = 0.0;
  double nd_factor = 1.0;
  double multiphoton_factor = 1.0;
  /// Efficiency above 1: returned, but physically impossible.
  bool unphysical = false;
  /// Single-photon rate at the first fiber for the projection repetition rate.
  Measured projected_rate_hz;
};

/// eta = (detected - dark) * nd / (repetition * chain) * sqrt(1 - g2).
BudgetResult source_efficiency(const BudgetInput& input);

BudgetInput budget_input_from_json(const std::string& text);
std::string budget_result_json(const BudgetInput& input, const BudgetResult& result);
/// Human-readable stage-by-stage ledger.
std::string budget_ledger_table(const BudgetInput& input, const BudgetResult& result);

std::string g2_json(const G2Estimate& estimate);

}  // namespace cbg
