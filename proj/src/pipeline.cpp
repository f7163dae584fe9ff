#include "cbg/pipeline.hpp"

#include <cmath>

#include "cbg/error.hpp"

namespace cbg {

void DesignSettings::validate() const {
  cbg::validate(structure);
  cbg::validate(grid);
  cbg::validate(simulation);
  cbg::validate(source.pulse);
  if (!(band_min_nm > 0.0) || !(band_max_nm > band_min_nm) || !(band_step_nm > 0.0)) {
    throw ConfigError("spectral band needs 0 < band_min_nm < band_max_nm and band_step_nm > 0");
  }
  if ((band_max_nm - band_min_nm) / band_step_nm > 1e6) throw ConfigError("spectral band has too many samples");
  if (!(plane_gap_nm > 0.0)) throw ConfigError("plane_gap_nm must be positive");
  if (!(plane_gap_nm + grid.resolution_nm * 2 < grid.padding_nm)) {
    throw ConfigError("far-field plane must sit inside the padding above the membrane");
  }
  if (!(farfield.theta_step_deg > 0.0) || !(farfield.phi_step_deg > 0.0)) {
    throw ConfigError("far-field angular steps must be positive");
  }
  if (!(na > 0.0 && na <= 1.0)) throw ConfigError("na must lie in (0, 1]");
  if (!(fiber_mfd_nm > 0.0)) throw ConfigError("fiber mfd_nm must be positive");
  if (!(fiber_na > 0.0 && fiber_na <= 1.0)) throw ConfigError("fiber na must lie in (0, 1]");
  for (double dx : dx_nm) {
    if (!std::isfinite(dx)) throw ConfigError("fiber offsets must be finite");
  }
}

std::vector<double> DesignSettings::band() const {
  std::vector<double> out;
  const long n = std::lround((band_max_nm - band_min_nm) / band_step_nm);
  for (long i = 0; i <= n; ++i) out.push_back(band_min_nm + i * band_step_nm);
  return out;
}

Spectrum BulkCache::get(const PermittivityMap& like, const DesignSettings& s) {
  // The emitted power of a homogeneous run depends only on the grid, the
  // medium, the source and the time-stepping settings.
  const auto& c = s.simulation;
  std::vector<double> key = {like.dr_nm(), like.dz_nm(), double(like.nr()), double(like.nz()),
                             double(like.pml_cells()), like.membrane_mid_nm(), like.material_index(),
                             std::isnan(s.source.z_nm) ? like.membrane_mid_nm() : s.source.z_nm,
                             s.source.pulse.center_nm, s.source.pulse.bandwidth_nm,
                             s.source.pulse.amplitude, c.courant, double(c.max_steps), c.decay_threshold,
                             double(c.dft_stride), double(c.pml_order), c.pml_sigma_scale, c.pml_alpha_fraction,
                             s.band_min_nm, s.band_max_nm, s.band_step_nm};
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  SimulationConfig cfg = s.simulation;
  cfg.source_power_wavelengths_nm = s.band();
  const SimulationResult r = bulk_reference(like, like.material_index(), s.source, {}, cfg);
  Spectrum bulk = emitted_power(r);
  cache_.emplace(key, bulk);
  return bulk;
}

MonitorSpec top_plane_monitor(const PermittivityMap& map, double gap_nm) {
  const double z = map.membrane_top_nm() + std::round(gap_nm / map.dz_nm()) * map.dz_nm();
  return {kTopPlane, MonitorSurface::z_plane, z, 0.0, map.interior_radius_nm(), 1, {}, true};
}

DesignRun run_design(const DesignSettings& settings, BulkCache* cache, const DesignObserver& observer) {
  settings.validate();
  DesignRun run;
  const auto notify = [&](DesignStage stage) {
    if (observer) observer(run, stage);
  };
  run.map = build_structure(settings.structure, settings.grid);
  notify(DesignStage::structure);

  SimulationConfig cfg = settings.simulation;
  cfg.source_power_wavelengths_nm = settings.band();
  run.device = run_simulation(run.map, settings.source, {top_plane_monitor(run.map, settings.plane_gap_nm)}, cfg);
  run.emitted = emitted_power(run.device);
  if (cache != nullptr) {
    run.bulk = cache->get(run.map, settings);
  } else {
    BulkCache local;
    run.bulk = local.get(run.map, settings);
  }
  run.purcell = purcell_spectrum(run.emitted, run.bulk);
  notify(DesignStage::spectra);
  run.fit = fit_resonance(Spectrum{run.purcell.wavelength_nm, run.purcell.factor}, settings.fit);
  notify(DesignStage::resonance);

  const SpectralMonitor& top = run.device.monitor(kTopPlane);
  run.pattern = near_to_far(top, run.fit.lambda0_nm, settings.farfield, &run.map);
  run.eta = eta_curve(run.pattern, default_na_grid());
  run.eta_na = collection_efficiency(run.pattern, settings.na);
  notify(DesignStage::farfield);

  run.facet = facet_field(top, run.fit.lambda0_nm);
  const FiberMode mode = gaussian_mode(settings.fiber_mfd_nm, run.fit.lambda0_nm, settings.fiber_na);
  run.coupling = misalignment_sweep(run.facet, mode, settings.dx_nm.empty() ? std::vector<double>{0.0} : settings.dx_nm);
  notify(DesignStage::coupling);
  return run;
}

Evaluator design_evaluator(const DesignSettings& settings, const ObjectiveSpec& objective, BulkCache& cache) {
  return [settings, objective, &cache](const StructureSpec& spec) {
    DesignSettings s = settings;
    s.structure = spec;
    s.dx_nm = {0.0};
    const DesignRun run = run_design(s, &cache);
    PointOutcome o;
    o.lambda0_nm = run.fit.lambda0_nm;
    o.q = run.fit.q;
    o.purcell = run.purcell.peak_value;
    o.steps = run.device.steps;
    double eta = run.eta_na;
    if (objective.rule == WavelengthRule::fixed) {
      eta = collection_efficiency(near_to_far(run.device.monitor(kTopPlane), objective.fixed_wavelength_nm,
                                              s.farfield, &run.map),
                                  objective.na);
    } else if (objective.na != s.na) {
      eta = collection_efficiency(run.pattern, objective.na);
    }
    o.objective = objective.composite ? eta * run.purcell.peak_value : eta;
    o.ok = true;
    o.status = run.device.hit_step_cap ? "ok (step cap)" : (run.fit.flagged ? "ok (fit flagged)" : "ok");
    return o;
  };
}

GridSpec common_grid(const DesignSettings& settings, const std::vector<StructureSpec>& specs) {
  GridSpec g = settings.grid;
  if (g.domain_radius_nm > 0.0) return g;
  double radius = 0.0;
  for (const auto& s : specs) radius = std::max(radius, device_radius_of(s));
  g.domain_radius_nm = radius + g.padding_nm + g.pml_cells * g.resolution_nm;
  return g;
}

}  // namespace cbg
