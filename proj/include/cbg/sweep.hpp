#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cbg/geometry.hpp"

namespace cbg {

/// Parameter names accepted by sweeps: radial_period_nm, center_disk_radius_nm,
/// thickness_nm, num_rings, material_index, plus hole_diameter_nm and
/// azimuthal_period_nm (H-CBG) or trench_width_nm (R-CBG).
void apply_parameter(StructureSpec& spec, const std::string& name, double value);
double get_parameter(const StructureSpec& spec, const std::string& name);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

enum class WavelengthRule { at_resonance, fixed };

struct ObjectiveSpec {
  double na = 0.12;
  WavelengthRule rule = WavelengthRule::at_resonance;
  double fixed_wavelength_nm = 1250.0;
  /// eta * peak Purcell instead of eta alone.
  bool composite = false;
};

struct SweepPlan {
  StructureSpec base;
  std::vector<SweepAxis> axes;
  ObjectiveSpec objective;

  /// Throws before any evaluation if an axis is empty or a grid point is invalid.
  void validate() const;
  std::size_t size() const;
  /// Parameter tuple of grid point `index` (first axis varies slowest).
  std::vector<double> point(std::size_t index) const;
  StructureSpec spec_at(std::size_t index) const;
};

struct PointOutcome {
  bool ok = false;
  double objective = -std::numeric_limits<double>::infinity();
  double lambda0_nm = 0.0;
  double q = 0.0;
  double purcell = 0.0;
  int steps = 0;
  std::string status = "pending";
};

/// Evaluates one structure; throwing marks the point failed with the message.
using Evaluator = std::function<PointOutcome(const StructureSpec&)>;

struct SweepRow {
  std::vector<double> params;
  PointOutcome outcome;
};

struct SweepResult {
  std::vector<std::string> names;
  std::vector<SweepRow> rows;
  /// Index into `rows`; only meaningful when `complete`.
  std::size_t argmax = 0;
  bool complete = false;
  int evaluated = 0;  // points computed in this call (not restored)
};

struct SweepOptions {
  int workers = 1;
  /// JSON checkpoint; completed points found there are not recomputed.
  std::filesystem::path checkpoint;
  /// Stop after this many new evaluations (0: no limit). Used to emulate interruption.
  int max_new_points = 0;
};

/// Highest objective among successful rows, ties to the lexicographically
/// smallest parameter tuple. Throws SweepError when no row succeeded.
std::size_t sweep_argmax(const std::vector<SweepRow>& rows);

SweepResult sweep(const SweepPlan& plan, const Evaluator& evaluate, const SweepOptions& options = {});

/// CSV: one column per parameter, then objective, lambda0_nm, q, status.
std::string sweep_table_csv(const SweepResult& result);
std::string sweep_argmax_json(const SweepResult& result);

struct Bound {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

struct OptimizeOptions {
  int levels = 2;
  int points = 5;
  /// Smallest admissible final grid step (e.g. the simulation grid resolution).
  double min_step = 0.0;
  int workers = 1;
};

struct AuditEntry {
  int level = 0;  // -1 marks the seed point (recorded, not evaluated)
  std::vector<double> params;
  PointOutcome outcome;
};

struct OptimizeResult {
  std::vector<std::string> names;
  StructureSpec best;
  std::vector<double> best_params;
  PointOutcome best_outcome;
  std::vector<AuditEntry> audit;
};

/// Coarse-to-fine grid search: each level is a points^d grid, the next level
/// spans one previous grid step either side of the running argmax.
OptimizeResult optimize(const StructureSpec& base, const std::vector<Bound>& bounds, const Evaluator& evaluate,
                        const OptimizeOptions& options = {});

/// R-CBG start point: Lambda = bragg_seed(lambda, n_eff), c = 1.1 Lambda.
RCbgSpec seeded_rcbg(double target_wavelength_nm, double effective_index, const RCbgSpec& base = {});

std::string audit_json(const OptimizeResult& result);

}  // namespace cbg
