#include "cbg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbg/budget.hpp"
#include "cbg/config.hpp"
#include "cbg/error.hpp"
#include "cbg/io.hpp"
#include "cbg/pipeline.hpp"

#ifndef CBG_VERSION
#define CBG_VERSION "0.0.0"
#endif

namespace cbg {

std::string tool_version() { return CBG_VERSION; }

Manifest::Manifest(std::filesystem::path out_dir, std::string command, std::string config_hash)
    : out_dir_(std::move(out_dir)), command_(std::move(command)), hash_(std::move(config_hash)) {}

void Manifest::expect(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    const bool known = std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == n; });
    if (!known) entries_.push_back({n, ""});
  }
  flush();
}

void Manifest::write(const std::string& name, const std::string& text) {
  write_text(out_dir_ / name, text);
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
  if (it == entries_.end()) it = entries_.insert(entries_.end(), Entry{name, ""});
  it->sha256 = sha256_hex(text);
  flush();
}

void Manifest::fail(const std::string& message) {
  error_ = message;
  flush();
}

bool Manifest::complete() const {
  return error_.empty() && std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) { return !e.sha256.empty(); });
}

void Manifest::flush() const {
  nlohmann::json j;
  j["tool"] = "cbg";
  j["version"] = tool_version();
  j["command"] = command_;
  j["config_hash"] = hash_;
  j["complete"] = complete();
  j["error"] = error_.empty() ? nlohmann::json(nullptr) : nlohmann::json(error_);
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json a{{"name", e.name}, {"complete", !e.sha256.empty()}};
    if (!e.sha256.empty()) a["sha256"] = e.sha256;
    arts.push_back(a);
  }
  j["artifacts"] = arts;
  write_text(out_dir_ / "manifest.json", j.dump(2) + "\n");
}

namespace {

struct Flags {
  std::string config;
  std::string out;
  int workers = 0;
  double resolution = 0.0;
  std::vector<std::string> sets;
};

std::string two_spectra_csv(const Spectrum& device, const Spectrum& bulk) {
  std::string out = "wavelength_nm,device_power,bulk_power\n";
  for (std::size_t i = 0; i < device.value.size(); ++i) {
    out += csv_row({device.wavelength_nm[i], device.value[i], bulk.value[i]});
  }
  return out;
}

std::string eta_curve_csv(const EtaCurve& curve) {
  std::string out = "na,eta\n";
  for (std::size_t i = 0; i < curve.na.size(); ++i) out += csv_row({curve.na[i], curve.eta[i]});
  return out;
}

std::string resonance_json(const DesignRun& run, const DesignSettings& s) {
  auto j = nlohmann::json::parse(spectral_summary_json(run.fit, run.purcell, {run.fit.lambda0_nm}));
  try {
    j["ringdown_q"] = ringdown_q(run.device.probe, run.fit.lambda0_nm, s.source.pulse.end_time());
  } catch (const FitError&) {
    j["ringdown_q"] = nullptr;
  }
  j["steps"] = run.device.steps;
  j["hit_step_cap"] = run.device.hit_step_cap;
  j["final_energy_ratio"] = run.device.final_energy_ratio;
  return j.dump(2) + "\n";
}

void cmd_design(const RunConfig& cfg, Manifest& m, std::ostream& out) {
  m.expect({"map_preview.txt", "spectrum.csv", "purcell.csv", "resonance.json", "farfield.csv",
            "farfield_slice.csv", "eta_curve.csv", "eta_curve.json", "coupling.csv"});
  const DesignSettings& s = cfg.design;
  const auto observer = [&](const DesignRun& run, DesignStage stage) {
    switch (stage) {
      case DesignStage::structure:
        m.write("map_preview.txt", render_preview(run.map));
        break;
      case DesignStage::spectra:
        m.write("spectrum.csv", two_spectra_csv(run.emitted, run.bulk));
        m.write("purcell.csv", spectrum_csv(Spectrum{run.purcell.wavelength_nm, run.purcell.factor}, "purcell"));
        break;
      case DesignStage::resonance:
        m.write("resonance.json", resonance_json(run, s));
        break;
      case DesignStage::farfield:
        m.write("farfield.csv", pattern_csv(run.pattern));
        m.write("farfield_slice.csv", cross_section_csv(cross_section(run.pattern, 0.0)));
        m.write("eta_curve.csv", eta_curve_csv(run.eta));
        m.write("eta_curve.json", eta_curve_json(run.eta));
        break;
      case DesignStage::coupling:
        m.write("coupling.csv", misalignment_csv(run.coupling));
        break;
    }
  };
  const DesignRun run = run_design(s, nullptr, observer);
  out << "lambda0_nm " << fmt_num(run.fit.lambda0_nm) << "  Q " << fmt_num(run.fit.q) << "  Fp_peak "
      << fmt_num(run.purcell.peak_value) << "  eta(NA " << fmt_num(s.na) << ") " << fmt_num(run.eta_na)
      << "  eta_c(0) " << fmt_num(run.coupling.eta.front()) << "\n";
}

std::vector<StructureSpec> corner_specs(const StructureSpec& base, const std::vector<Bound>& bounds) {
  std::vector<StructureSpec> specs;
  const std::size_t n = std::size_t{1} << bounds.size();
  for (std::size_t mask = 0; mask < n; ++mask) {
    StructureSpec s = base;
    for (std::size_t d = 0; d < bounds.size(); ++d) {
      apply_parameter(s, bounds[d].name, (mask >> d) & 1 ? bounds[d].hi : bounds[d].lo);
    }
    specs.push_back(s);
  }
  return specs;
}

void cmd_sweep(const RunConfig& cfg, Manifest& m, std::ostream& out) {
  if (!cfg.sweep) throw ConfigError("sweep needs a [sweep] section");
  const SweepSection& sw = *cfg.sweep;
  DesignSettings s = cfg.design;
  // Worker threads each run their own simulation; the kernels are bitwise
  // identical between backends, so this only avoids oversubscription.
  if (cfg.workers > 1) s.simulation.backend = KernelBackend::serial;
  BulkCache cache;

  if (sw.mode == SweepMode::grid) {
    m.expect({"sweep_table.csv", "sweep_argmax.json"});
    const SweepPlan plan{s.structure, sw.axes, sw.objective};
    std::vector<StructureSpec> specs;
    for (std::size_t i = 0; i < plan.size(); ++i) specs.push_back(plan.spec_at(i));
    s.grid = common_grid(s, specs);
    SweepOptions opt;
    opt.workers = cfg.workers;
    opt.checkpoint = cfg.out_dir / "sweep_checkpoint.json";
    const SweepResult r = sweep(plan, design_evaluator(s, sw.objective, cache), opt);
    m.write("sweep_table.csv", sweep_table_csv(r));
    m.write("sweep_argmax.json", sweep_argmax_json(r));
    const auto& best = r.rows[r.argmax];
    out << "points " << r.rows.size() << " (computed " << r.evaluated << ")  best objective "
        << fmt_num(best.outcome.objective) << " at";
    for (std::size_t d = 0; d < r.names.size(); ++d) out << " " << r.names[d] << "=" << fmt_num(best.params[d]);
    out << "\n";
    return;
  }

  m.expect({"optimize_audit.json", "sweep_argmax.json"});
  s.grid = common_grid(s, corner_specs(s.structure, sw.bounds));
  OptimizeOptions opt;
  opt.levels = sw.levels;
  opt.points = sw.points;
  opt.min_step = s.grid.resolution_nm;
  opt.workers = cfg.workers;
  const OptimizeResult r = optimize(s.structure, sw.bounds, design_evaluator(s, sw.objective, cache), opt);
  m.write("optimize_audit.json", audit_json(r));
  nlohmann::json best;
  for (std::size_t d = 0; d < r.names.size(); ++d) best["params"][r.names[d]] = r.best_params[d];
  best["objective"] = r.best_outcome.objective;
  best["lambda0_nm"] = r.best_outcome.lambda0_nm;
  best["q"] = r.best_outcome.q;
  best["status"] = r.best_outcome.status;
  m.write("sweep_argmax.json", best.dump(2) + "\n");
  out << "evaluations " << r.audit.size() << "  best objective " << fmt_num(r.best_outcome.objective) << "\n";
}

FacetField field_from_fixture(const std::filesystem::path& path, double wavelength_nm) {
  const auto rows = read_two_column_csv(path);
  if (rows.size() < 2) throw DataError("field fixture needs at least two rows");
  std::vector<double> rho;
  std::vector<std::complex<double>> g0;
  for (const auto& [r, a] : rows) {
    rho.push_back(r);
    g0.emplace_back(a, 0.0);
  }
  const double spacing = rho[1] - rho[0];
  for (std::size_t i = 1; i < rho.size(); ++i) {
    if (std::abs(rho[i] - rho[i - 1] - spacing) > 1e-6 * std::abs(spacing)) {
      throw ShapeError("field fixture radii must be uniformly spaced");
    }
  }
  FacetField f = axisymmetric_field(rho, spacing, g0);
  f.wavelength_nm = wavelength_nm;
  return f;
}

void cmd_couple(const RunConfig& cfg, Manifest& m, std::ostream& out) {
  const DesignSettings& s = cfg.design;
  if (!cfg.couple_field.empty()) {
    m.expect({"coupling.csv"});
    const double lambda = s.source.pulse.center_nm;
    const FacetField field = field_from_fixture(cfg.couple_field, lambda);
    const FiberMode mode = gaussian_mode(s.fiber_mfd_nm, lambda, s.fiber_na);
    const MisalignmentCurve c = misalignment_sweep(field, mode, s.dx_nm);
    m.write("coupling.csv", misalignment_csv(c));
    out << "eta_c(" << fmt_num(c.dx_nm.front()) << " nm) " << fmt_num(c.eta.front()) << "\n";
    return;
  }
  m.expect({"resonance.json", "coupling.csv"});
  const DesignRun run = run_design(s, nullptr, [&](const DesignRun& r, DesignStage stage) {
    if (stage == DesignStage::resonance) m.write("resonance.json", resonance_json(r, s));
    if (stage == DesignStage::coupling) m.write("coupling.csv", misalignment_csv(r.coupling));
  });
  out << "lambda0_nm " << fmt_num(run.fit.lambda0_nm) << "  eta_c(" << fmt_num(run.coupling.dx_nm.front())
      << " nm) " << fmt_num(run.coupling.eta.front()) << "\n";
}

void cmd_budget(const RunConfig& cfg, Manifest& m, std::ostream& out) {
  if (cfg.budget_input.empty()) throw ConfigError("budget needs budget.input (a JSON file)");
  m.expect({"budget.json", "budget_ledger.txt"});
  const BudgetInput input = budget_input_from_json(read_text(cfg.budget_input));
  const BudgetResult result = source_efficiency(input);
  const std::string table = budget_ledger_table(input, result);
  m.write("budget.json", budget_result_json(input, result));
  m.write("budget_ledger.txt", table);
  out << table;
}

void cmd_g2(const RunConfig& cfg, Manifest& m, std::ostream& out) {
  if (cfg.histogram.empty()) throw ConfigError("g2 needs g2.histogram (CSV of time_ns, counts)");
  if (!(cfg.histogram_period_ns > 0.0)) throw ConfigError("g2 needs g2.period_ns > 0");
  m.expect({"g2.json"});
  const auto hist =
      histogram_from_rows(read_two_column_csv(cfg.histogram), cfg.histogram_period_ns, cfg.histogram_window_ns);
  const G2Estimate e = g2_zero(hist);
  m.write("g2.json", g2_json(e));
  out << "g2(0) " << fmt_num(e.g2) << " +- " << fmt_num(e.sigma) << "  (" << e.side_peaks << " side peaks)\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::domain_error*>(&e) ||
      dynamic_cast<const std::out_of_range*>(&e)) {
    return kExitConfig;
  }
  return kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circular Bragg grating single-photon source toolkit", "cbg"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"design", "simulate one structure: spectra, resonance, far field, eta(NA), fiber coupling"},
      {"sweep", "grid sweep or coarse-to-fine optimisation over structure parameters"},
      {"couple", "fiber coupling versus lateral offset (field fixture or simulated facet field)"},
      {"budget", "source efficiency from detected rates and a setup-efficiency chain"},
      {"g2", "zero-delay g2 from a pulsed coincidence histogram"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "INI run configuration");
    sub->add_option("--out", flags.out, "output directory (overrides output.dir)");
    sub->add_option("--workers", flags.workers, "sweep worker threads (overrides output.workers and CBG_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--resolution", flags.resolution, "grid resolution in nm (overrides simulation.resolution_nm)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--set", flags.sets, "override, section.key=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  // Precedence: file < CBG_WORKERS < --set < dedicated flags.
  std::vector<std::string> overrides;
  if (const char* env = std::getenv("CBG_WORKERS"); env != nullptr && *env != '\0') {
    overrides.push_back(std::string("output.workers=") + env);
  }
  overrides.insert(overrides.end(), flags.sets.begin(), flags.sets.end());
  if (!flags.out.empty()) overrides.push_back("output.dir=" + flags.out);
  if (flags.workers > 0) overrides.push_back("output.workers=" + std::to_string(flags.workers));
  if (flags.resolution > 0.0) overrides.push_back("simulation.resolution_nm=" + fmt_num(flags.resolution));

  RunConfig cfg;
  try {
    cfg = flags.config.empty() ? parse_config("", overrides, std::filesystem::current_path())
                               : load_config(flags.config, overrides);
  } catch (const std::exception& e) {
    err << "cbg " << command << ": " << e.what() << "\n";
    return exit_code_for(e);
  }

  std::unique_ptr<Manifest> manifest;
  try {
    manifest = std::make_unique<Manifest>(cfg.out_dir, command, config_hash(cfg));
    if (command == "design") cmd_design(cfg, *manifest, out);
    else if (command == "sweep") cmd_sweep(cfg, *manifest, out);
    else if (command == "couple") cmd_couple(cfg, *manifest, out);
    else if (command == "budget") cmd_budget(cfg, *manifest, out);
    else cmd_g2(cfg, *manifest, out);
    manifest->flush();
  } catch (const std::exception& e) {
    err << "cbg " << command << ": " << e.what() << "\n";
    if (manifest) {
      try {
        manifest->fail(e.what());
      } catch (const std::exception& inner) {
        err << "cbg " << command << ": manifest not written: " << inner.what() << "\n";
      }
    }
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace cbg
