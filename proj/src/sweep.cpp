#include "cbg/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "cbg/error.hpp"
#include "cbg/io.hpp"
#include "json.hpp"

namespace cbg {

namespace {

template <class Spec>
double* common_field(Spec& s, const std::string& name) {
  if (name == "radial_period_nm") return &s.radial_period_nm;
  if (name == "center_disk_radius_nm") return &s.center_disk_radius_nm;
  if (name == "thickness_nm") return &s.thickness_nm;
  if (name == "material_index") return &s.material_index;
  return nullptr;
}

double* field_of(RCbgSpec& s, const std::string& name) {
  if (double* p = common_field(s, name)) return p;
  if (name == "trench_width_nm") return &s.trench_width_nm;
  return nullptr;
}

double* field_of(HCbgSpec& s, const std::string& name) {
  if (double* p = common_field(s, name)) return p;
  if (name == "hole_diameter_nm") return &s.hole_diameter_nm;
  if (name == "azimuthal_period_nm") return &s.azimuthal_period_nm;
  return nullptr;
}

bool tuple_less(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

nlohmann::json outcome_json(const PointOutcome& o) {
  nlohmann::json j{{"ok", o.ok},
                   {"lambda0_nm", o.lambda0_nm},
                   {"q", o.q},
                   {"purcell", o.purcell},
                   {"steps", o.steps},
                   {"status", o.status}};
  j["objective"] = std::isfinite(o.objective) ? nlohmann::json(o.objective) : nlohmann::json(nullptr);
  return j;
}

PointOutcome outcome_from(const nlohmann::json& j) {
  PointOutcome o;
  o.ok = j.at("ok").get<bool>();
  o.objective = j.at("objective").is_null() ? -std::numeric_limits<double>::infinity()
                                            : j.at("objective").get<double>();
  o.lambda0_nm = j.at("lambda0_nm").get<double>();
  o.q = j.at("q").get<double>();
  o.purcell = j.at("purcell").get<double>();
  o.steps = j.at("steps").get<int>();
  o.status = j.at("status").get<std::string>();
  return o;
}

PointOutcome evaluate_safely(const Evaluator& evaluate, const StructureSpec& spec) {
  try {
    PointOutcome o = evaluate(spec);
    if (o.status == "pending") o.status = o.ok ? "ok" : "failed";
    if (!o.ok || !std::isfinite(o.objective)) {
      o.ok = false;
      o.objective = -std::numeric_limits<double>::infinity();
    }
    return o;
  } catch (const std::exception& e) {
    PointOutcome o;
    o.status = std::string("failed: ") + e.what();
    return o;
  }
}

// Canonical description of a plan; a checkpoint is only reused for the same plan.
std::string plan_key(const SweepPlan& plan) {
  nlohmann::json j;
  j["kind"] = std::holds_alternative<HCbgSpec>(plan.base) ? "hcbg" : "rcbg";
  nlohmann::json base;
  for (const char* n : {"radial_period_nm", "center_disk_radius_nm", "thickness_nm", "num_rings", "material_index"}) {
    base[n] = get_parameter(plan.base, n);
  }
  if (const auto* h = std::get_if<HCbgSpec>(&plan.base)) {
    base["hole_diameter_nm"] = h->hole_diameter_nm;
    base["azimuthal_period_nm"] = h->azimuthal_period_nm;
    base["smearing"] = h->smearing == EmtSmearing::annulus ? "annulus" : "period";
  } else {
    base["trench_width_nm"] = std::get<RCbgSpec>(plan.base).trench_width_nm;
  }
  j["base"] = base;
  for (const auto& a : plan.axes) j["axes"].push_back({{"name", a.name}, {"values", a.values}});
  j["objective"] = {{"na", plan.objective.na},
                    {"rule", plan.objective.rule == WavelengthRule::at_resonance ? "resonance" : "fixed"},
                    {"wavelength_nm", plan.objective.fixed_wavelength_nm},
                    {"composite", plan.objective.composite}};
  return j.dump();
}

void write_checkpoint(const std::filesystem::path& path, const std::string& key, const SweepPlan& plan,
                      const std::vector<SweepRow>& rows, const std::vector<char>& done) {
  nlohmann::json j;
  j["plan"] = key;
  j["rows"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!done[i]) continue;
    j["rows"].push_back({{"index", i}, {"params", plan.point(i)}, {"outcome", outcome_json(rows[i].outcome)}});
  }
  // Write-then-rename so an interrupted write never leaves a torn checkpoint.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text(tmp, j.dump(1) + "\n");
  std::filesystem::rename(tmp, path);
}

}  // namespace

void apply_parameter(StructureSpec& spec, const std::string& name, double value) {
  std::visit(
      [&](auto& s) {
        if (name == "num_rings") {
          if (value != std::floor(value)) throw ConfigError("num_rings must be an integer");
          s.num_rings = static_cast<int>(value);
          return;
        }
        double* p = field_of(s, name);
        if (p == nullptr) throw ConfigError("unknown sweep parameter '" + name + "' for this structure");
        *p = value;
      },
      spec);
}

double get_parameter(const StructureSpec& spec, const std::string& name) {
  StructureSpec copy = spec;
  return std::visit(
      [&](auto& s) -> double {
        if (name == "num_rings") return s.num_rings;
        double* p = field_of(s, name);
        if (p == nullptr) throw ConfigError("unknown sweep parameter '" + name + "' for this structure");
        return *p;
      },
      copy);
}

void SweepPlan::validate() const {
  if (axes.empty()) throw ConfigError("sweep plan has no axes");
  for (const auto& a : axes) {
    if (a.values.empty()) throw ConfigError("sweep axis '" + a.name + "' has no values");
    for (const auto& b : axes) {
      if (&a != &b && a.name == b.name) throw ConfigError("sweep axis '" + a.name + "' listed twice");
    }
  }
  if (!(objective.na > 0.0 && objective.na <= 1.0)) throw ConfigError("objective NA must lie in (0, 1]");
  for (std::size_t i = 0; i < size(); ++i) {
    try {
      cbg::validate(spec_at(i));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("sweep point " + std::to_string(i) + " is invalid: " + e.what());
    }
  }
}

std::size_t SweepPlan::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return axes.empty() ? 0 : n;
}

std::vector<double> SweepPlan::point(std::size_t index) const {
  std::vector<double> p(axes.size());
  for (std::size_t d = axes.size(); d-- > 0;) {
    const std::size_t n = axes[d].values.size();
    p[d] = axes[d].values[index % n];
    index /= n;
  }
  return p;
}

StructureSpec SweepPlan::spec_at(std::size_t index) const {
  StructureSpec s = base;
  const auto p = point(index);
  for (std::size_t d = 0; d < axes.size(); ++d) apply_parameter(s, axes[d].name, p[d]);
  return s;
}

std::size_t sweep_argmax(const std::vector<SweepRow>& rows) {
  std::size_t best = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& o = rows[i].outcome;
    if (!o.ok) continue;
    if (best == rows.size() || o.objective > rows[best].outcome.objective ||
        (o.objective == rows[best].outcome.objective && tuple_less(rows[i].params, rows[best].params))) {
      best = i;
    }
  }
  if (best == rows.size()) throw SweepError("every sweep point failed");
  return best;
}

SweepResult sweep(const SweepPlan& plan, const Evaluator& evaluate, const SweepOptions& options) {
  plan.validate();
  if (options.workers < 1) throw ConfigError("worker count must be >= 1");
  const std::size_t n = plan.size();
  const std::string key = plan_key(plan);

  SweepResult result;
  for (const auto& a : plan.axes) result.names.push_back(a.name);
  result.rows.resize(n);
  std::vector<char> done(n, 0);
  for (std::size_t i = 0; i < n; ++i) result.rows[i].params = plan.point(i);

  const bool use_checkpoint = !options.checkpoint.empty();
  if (use_checkpoint && std::filesystem::exists(options.checkpoint)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(options.checkpoint));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("unreadable sweep checkpoint " + options.checkpoint.string() + ": " + e.what());
    }
    if (j.value("plan", std::string()) != key) {
      throw ConfigError("checkpoint " + options.checkpoint.string() + " belongs to a different sweep plan");
    }
    for (const auto& row : j.at("rows")) {
      const std::size_t i = row.at("index").get<std::size_t>();
      if (i >= n) throw ConfigError("checkpoint row index out of range");
      result.rows[i].outcome = outcome_from(row.at("outcome"));
      done[i] = 1;
    }
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    if (!done[i]) todo.push_back(i);
  }
  if (options.max_new_points > 0 && todo.size() > static_cast<std::size_t>(options.max_new_points)) {
    todo.resize(static_cast<std::size_t>(options.max_new_points));
  }

  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const std::size_t i = todo[t];
      PointOutcome o = evaluate_safely(evaluate, plan.spec_at(i));
      std::lock_guard<std::mutex> lock(mutex);
      result.rows[i].outcome = std::move(o);
      done[i] = 1;
      if (use_checkpoint) write_checkpoint(options.checkpoint, key, plan, result.rows, done);
    }
  };
  const int threads = std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(todo.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.evaluated = static_cast<int>(todo.size());
  result.complete = std::all_of(done.begin(), done.end(), [](char d) { return d != 0; });
  if (result.complete) result.argmax = sweep_argmax(result.rows);
  return result;
}

std::string sweep_table_csv(const SweepResult& result) {
  std::vector<std::string> header = result.names;
  for (const char* c : {"objective", "lambda0_nm", "q", "status"}) header.emplace_back(c);
  std::string out = csv_row(header);
  for (const auto& row : result.rows) {
    std::vector<std::string> cells;
    for (double p : row.params) cells.push_back(fmt_num(p));
    cells.push_back(row.outcome.ok ? fmt_num(row.outcome.objective) : "-inf");
    cells.push_back(fmt_num(row.outcome.lambda0_nm));
    cells.push_back(fmt_num(row.outcome.q));
    std::string status = row.outcome.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    cells.push_back(status);
    out += csv_row(cells);
  }
  return out;
}

std::string sweep_argmax_json(const SweepResult& result) {
  if (!result.complete) throw DataError("sweep is incomplete; no argmax");
  const auto& row = result.rows.at(result.argmax);
  nlohmann::json params;
  for (std::size_t d = 0; d < result.names.size(); ++d) params[result.names[d]] = row.params[d];
  nlohmann::json j{{"index", result.argmax}, {"params", params}, {"outcome", outcome_json(row.outcome)}};
  int failed = 0;
  for (const auto& r : result.rows) failed += r.outcome.ok ? 0 : 1;
  j["points"] = result.rows.size();
  j["failed_points"] = failed;
  return j.dump(2) + "\n";
}

OptimizeResult optimize(const StructureSpec& base, const std::vector<Bound>& bounds, const Evaluator& evaluate,
                        const OptimizeOptions& options) {
  if (bounds.empty()) throw ConfigError("optimisation needs at least one bounded parameter");
  if (options.levels < 1 || options.points < 2) throw ConfigError("optimisation needs >= 1 level and >= 2 points");
  for (const auto& b : bounds) {
    if (!(b.hi > b.lo)) throw ConfigError("bounds for '" + b.name + "' are empty");
    // Each level shrinks the step by 2 / (points - 1).
    double step = (b.hi - b.lo) / (options.points - 1);
    for (int l = 1; l < options.levels; ++l) step *= 2.0 / (options.points - 1);
    if (step < options.min_step) {
      throw ConfigError("bounds for '" + b.name + "' collapse below the grid resolution (final step " +
                        fmt_num(step) + " < " + fmt_num(options.min_step) + ")");
    }
    get_parameter(base, b.name);  // unknown names fail here
  }

  OptimizeResult out;
  for (const auto& b : bounds) out.names.push_back(b.name);
  {
    AuditEntry seed;
    seed.level = -1;
    for (const auto& b : bounds) seed.params.push_back(get_parameter(base, b.name));
    out.audit.push_back(seed);
  }

  std::vector<double> lo, hi;
  for (const auto& b : bounds) {
    lo.push_back(b.lo);
    hi.push_back(b.hi);
  }
  std::vector<SweepRow> all;
  for (int level = 0; level < options.levels; ++level) {
    SweepPlan plan;
    plan.base = base;
    for (std::size_t d = 0; d < bounds.size(); ++d) {
      SweepAxis axis{bounds[d].name, {}};
      for (int p = 0; p < options.points; ++p) {
        axis.values.push_back(lo[d] + (hi[d] - lo[d]) * p / (options.points - 1));
      }
      plan.axes.push_back(std::move(axis));
    }
    SweepOptions so;
    so.workers = options.workers;
    const SweepResult r = sweep(plan, evaluate, so);
    for (const auto& row : r.rows) {
      out.audit.push_back({level, row.params, row.outcome});
      all.push_back(row);
    }
    const auto& centre = r.rows[r.argmax].params;
    for (std::size_t d = 0; d < bounds.size(); ++d) {
      const double step = (hi[d] - lo[d]) / (options.points - 1);
      lo[d] = std::max(bounds[d].lo, centre[d] - step);
      hi[d] = std::min(bounds[d].hi, centre[d] + step);
    }
  }
  const std::size_t best = sweep_argmax(all);
  out.best_params = all[best].params;
  out.best_outcome = all[best].outcome;
  out.best = base;
  for (std::size_t d = 0; d < bounds.size(); ++d) apply_parameter(out.best, bounds[d].name, out.best_params[d]);
  return out;
}

RCbgSpec seeded_rcbg(double target_wavelength_nm, double effective_index, const RCbgSpec& base) {
  RCbgSpec s = base;
  s.radial_period_nm = bragg_seed(target_wavelength_nm, effective_index);
  s.center_disk_radius_nm = center_disk_seed(s.radial_period_nm);
  return s;
}

std::string audit_json(const OptimizeResult& result) {
  nlohmann::json j;
  j["names"] = result.names;
  j["best"] = {{"params", result.best_params}, {"outcome", outcome_json(result.best_outcome)}};
  j["audit"] = nlohmann::json::array();
  for (const auto& a : result.audit) {
    nlohmann::json e{{"level", a.level}, {"params", a.params}};
    if (a.level >= 0) e["outcome"] = outcome_json(a.outcome);
    j["audit"].push_back(e);
  }
  return j.dump(2) + "\n";
}

}  // namespace cbg
