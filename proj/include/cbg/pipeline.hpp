#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "cbg/farfield.hpp"
#include "cbg/fdtd.hpp"
#include "cbg/fiber.hpp"
#include "cbg/geometry.hpp"
#include "cbg/spectral.hpp"
#include "cbg/sweep.hpp"

namespace cbg {

/// Everything needed to go from a structure to its resonance, far field and
/// fiber overlap.
struct DesignSettings {
  StructureSpec structure = HCbgSpec{};
  GridSpec grid;
  SimulationConfig simulation;
  DipoleSource source;
  double band_min_nm = 1150.0;
  double band_max_nm = 1350.0;
  double band_step_nm = 0.05;
  /// Height of the far-field / facet plane above the membrane top.
  double plane_gap_nm = 600.0;
  FarFieldOptions farfield;
  double na = 0.12;
  FitOptions fit;
  double fiber_mfd_nm = kSmf28ModeFieldDiameterNm;
  double fiber_na = 0.12;
  std::vector<double> dx_nm;

  void validate() const;
  std::vector<double> band() const;
};

/// Bulk reference spectra keyed by grid shape; shared by sweep workers.
class BulkCache {
 public:
  Spectrum get(const PermittivityMap& like, const DesignSettings& settings);

 private:
  std::mutex mutex_;
  std::map<std::vector<double>, Spectrum> cache_;
};

struct DesignRun {
  PermittivityMap map;
  SimulationResult device;
  Spectrum emitted;
  Spectrum bulk;
  PurcellSpectrum purcell;
  ResonanceFit fit;
  FarFieldPattern pattern;  // at fit.lambda0_nm
  EtaCurve eta;
  double eta_na = 0.0;
  FacetField facet;
  MisalignmentCurve coupling;
};

/// Monitor names used by run_design.
inline constexpr const char* kTopPlane = "top";

MonitorSpec top_plane_monitor(const PermittivityMap& map, double gap_nm);

enum class DesignStage { structure, spectra, resonance, farfield, coupling };

/// Called after each stage with the fields filled so far.
using DesignObserver = std::function<void(const DesignRun&, DesignStage)>;

/// Geometry -> FDTD -> Purcell/fit -> far field -> fiber overlap at the fitted resonance.
DesignRun run_design(const DesignSettings& settings, BulkCache* cache = nullptr,
                     const DesignObserver& observer = {});

/// Pipeline objective for sweeps: eta(NA) at the run's own fitted resonance
/// (or a fixed wavelength), optionally times the peak Purcell factor.
Evaluator design_evaluator(const DesignSettings& settings, const ObjectiveSpec& objective, BulkCache& cache);

/// Grid whose radius fits the largest device of a sweep, so every point
/// shares one bulk reference.
GridSpec common_grid(const DesignSettings& settings, const std::vector<StructureSpec>& specs);

}  // namespace cbg
