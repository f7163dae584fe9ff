#pragma once

#include <array>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "cbg/geometry.hpp"

namespace cbg {

/// Speed of light in nm/fs; simulation time is measured in nm (c = 1).
inline constexpr double kLightSpeedNmPerFs = 299.792458;

enum class KernelBackend { serial, openmp };

/// Gaussian-envelope sine carrier. The envelope width is chosen so that the
/// emitted power spectrum drops to one half at the farther of the two band
/// edges center +/- bandwidth/2.
struct PulseSpec {
  double center_nm = 1250.0;
  double bandwidth_nm = 200.0;
  double amplitude = 1.0;

  double envelope_width() const;  // tau, in nm of light travel
  double peak_time() const;       // t0 = 6 tau
  double end_time() const;        // 2 t0
  double value(double t) const;   // current at time t
};

/// In-plane point dipole on the axis (r = 0), excited as azimuthal mode m = 1.
/// A NaN `z_nm` places it on the membrane mid-plane.
struct DipoleSource {
  double z_nm = std::numeric_limits<double>::quiet_NaN();
  int azimuthal_mode = 1;
  PulseSpec pulse;
};

enum class MonitorSurface { z_plane, cylinder };

/// Surface on which tangential fields are Fourier-accumulated.
///  - z_plane: z = position, r in [extent_min, extent_max]; normal +z when orientation = +1.
///  - cylinder: r = position, z in [extent_min, extent_max]; normal +r when orientation = +1.
/// Positions snap to the nearest grid node.
struct MonitorSpec {
  std::string name;
  MonitorSurface surface = MonitorSurface::z_plane;
  double position_nm = 0.0;
  double extent_min_nm = 0.0;
  double extent_max_nm = 0.0;
  int orientation = +1;
  std::vector<double> wavelengths_nm;
  /// Keep decimated time samples so fields can be evaluated at any wavelength later.
  bool record = false;
};

/// Closed cylindrical box around the axis, expanded into `name/top`,
/// `name/bottom` and `name/side` monitors with outward orientation.
struct BoxSpec {
  std::string name;
  double radius_nm = 0.0;
  double z_min_nm = 0.0;
  double z_max_nm = 0.0;
  std::vector<double> wavelengths_nm;
};

std::vector<MonitorSpec> box_monitors(const BoxSpec& box);

struct SimulationConfig {
  double courant = 0.5;
  int max_steps = 300000;
  double decay_threshold = 1e-8;
  /// DFT/recording sample interval in steps. The fields are band-limited far
  /// below the decimated Nyquist rate, so this only trades memory and time.
  int dft_stride = 8;
  /// Interval of the decimated time series kept by recorded monitors.
  int record_stride = 32;
  int energy_interval = 50;
  int pml_order = 3;
  double pml_sigma_scale = 1.0;
  /// CFS alpha at the PML entrance as a fraction of the pulse carrier angular frequency.
  double pml_alpha_fraction = 0.05;
  /// Peak matched loss in the radial layer as a fraction of the peak PML conductivity.
  double pml_loss_fraction = 0.01;
  KernelBackend backend = KernelBackend::openmp;
  /// Abort when any field amplitude exceeds this value.
  double overflow_guard = 1e150;
  /// Wavelengths at which the source-delivered power -1/2 Re(J* E) is accumulated.
  std::vector<double> source_power_wavelengths_nm;
};

/// Complex tangential field samples of one monitor at one wavelength.
/// z_plane components: {e_r, e_phi, h_r, h_phi}; cylinder: {e_phi, e_z, h_phi, h_z}.
/// The azimuthal dependence is implied by the m = 1 ansatz: e_r, e_z, h_phi
/// carry cos(phi), the others sin(phi).
struct TangentialFields {
  double wavelength_nm = 0.0;
  std::array<std::vector<std::complex<double>>, 4> c;
};

class SpectralMonitor {
 public:
  SpectralMonitor() = default;
  SpectralMonitor(MonitorSpec spec, std::vector<double> coords, double spacing_nm,
                  double position_nm);

  const std::string& name() const { return spec_.name; }
  MonitorSurface surface() const { return spec_.surface; }
  int orientation() const { return spec_.orientation; }
  /// Snapped surface position (z for planes, r for cylinders).
  double position_nm() const { return position_; }
  /// Cell-centre sample coordinates along the surface (r for planes, z for
  /// cylinders); `fields` is co-located on these.
  const std::vector<double>& coords() const { return coords_; }
  /// Grid-node coordinates bracketing `coords` (one more entry).
  std::vector<double> node_coords() const;
  double spacing_nm() const { return spacing_; }
  const std::vector<double>& wavelengths_nm() const { return spec_.wavelengths_nm; }
  bool recorded() const { return spec_.record; }

  std::size_t wavelength_index(double wavelength_nm) const;
  bool has_wavelength(double wavelength_nm) const;

  /// Fields at a listed wavelength, or at any wavelength when recorded.
  TangentialFields fields(double wavelength_nm) const;

  /// Outward Poynting flux 1/2 Re(E x H*) . n integrated over the full
  /// surface of revolution (2 pi r weight folded into the azimuthal integral).
  /// Each E component is paired with H at its own staggered position, the
  /// grid-consistent quadrature under which closed boxes conserve power.
  double flux(double wavelength_nm) const;

  /// Orientation-reversed copy (same fields, opposite normal).
  SpectralMonitor reversed() const;

  /// Whether component c (TangentialFields order) is sampled on grid nodes
  /// (size coords + 1) rather than cell centres.
  bool on_nodes(int c) const;
  std::size_t native_size(int c) const { return coords_.size() + (on_nodes(c) ? 1 : 0); }

  // Accumulation interface used by the time stepper. Each pointer holds
  // native_size samples; weights are stride * dt.
  void begin(double dft_weight, double record_weight);
  void accumulate(bool magnetic, double t, const double* c0, const double* c1);
  void record(bool magnetic, double t, const double* c0, const double* c1);

  const MonitorSpec& spec() const { return spec_; }

 private:
  TangentialFields native(double wavelength_nm) const;
  TangentialFields from_record(double wavelength_nm) const;

  MonitorSpec spec_;
  std::vector<double> coords_;
  double spacing_ = 0.0;
  double position_ = 0.0;
  double dft_weight_ = 0.0;
  double record_weight_ = 0.0;
  // [component][wavelength * native_size + sample]
  std::array<std::vector<std::complex<double>>, 4> dft_;
  // Decimated time samples, [component][record * native_size + sample]; single precision
  // keeps long high-Q runs within memory.
  std::array<std::vector<double>, 2> record_times_;  // 0: E, 1: H
  std::array<std::vector<float>, 4> record_;
};

struct ProbeTrace {
  double r_nm = 0.0;
  double z_nm = 0.0;
  double dt_nm = 0.0;
  std::string component = "e_r";
  std::vector<double> values;
};

struct SimulationResult {
  std::vector<SpectralMonitor> monitors;
  ProbeTrace probe;
  int steps = 0;
  double dt_nm = 0.0;
  double courant = 0.0;
  bool hit_step_cap = false;
  double final_energy_ratio = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> source_power_wavelengths_nm;
  std::vector<double> source_power_values;

  const SpectralMonitor& monitor(const std::string& name) const;
  bool has_monitor(const std::string& name) const;
  /// Power delivered by the dipole, -1/2 Re(J* . E) over the source cell.
  double source_power(double wavelength_nm) const;
};

/// Outward flux through a monitor at a listed wavelength.
double flux(const SpectralMonitor& monitor, double wavelength_nm);

/// Sum of the three faces of a box created with `box_monitors`.
double box_flux(const SimulationResult& result, const std::string& box_name, double wavelength_nm);

/// Time-domain body-of-revolution solver state. Externally single-threaded.
class BorSimulation {
 public:
  BorSimulation(const PermittivityMap& map, const DipoleSource& source,
                const std::vector<MonitorSpec>& monitors, const SimulationConfig& config);
  ~BorSimulation();
  BorSimulation(const BorSimulation&) = delete;
  BorSimulation& operator=(const BorSimulation&) = delete;

  /// Advance one leapfrog step (H then E).
  void step();
  /// Step until the decay criterion or the step cap.
  SimulationResult run();

  int steps_taken() const;
  double time_nm() const;
  double dt_nm() const;
  double energy() const;
  double max_abs_field() const;
  /// Raw field arrays, (nr + 1) x (nz + 1) with z fastest. Order: e_r, e_phi, e_z, h_r, h_phi, h_z.
  const std::vector<double>& field(int index) const;

 private:
  struct Impl;
  Impl* impl_;
};

/// Fail-fast checks used before any run starts.
void validate(const PulseSpec& pulse);
void validate(const SimulationConfig& config);

/// Runs one full simulation.
SimulationResult run_simulation(const PermittivityMap& map, const DipoleSource& source,
                                const std::vector<MonitorSpec>& monitors,
                                const SimulationConfig& config);

/// Same source and monitors in a homogeneous medium of the given index on the same grid.
SimulationResult bulk_reference(const PermittivityMap& like, double index, const DipoleSource& source,
                                const std::vector<MonitorSpec>& monitors,
                                const SimulationConfig& config);

/// Largest stable Courant number used for validation (c dt <= S min(dr, dz)).
inline constexpr double kMaxCourant = 0.7071067811865476;

}  // namespace cbg
