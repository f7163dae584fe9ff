#pragma once

#include <array>
#include <vector>

// Leapfrog update kernels for the m = 1 body-of-revolution Yee grid.
//
// Node layout (i: radial index, k: axial index, arrays (nr+1) x (nz+1), z fastest):
//   e_r (i+1/2, k)     e_phi (i, k)        e_z (i, k+1/2)
//   h_r (i, k+1/2)     h_phi (i+1/2, k+1/2) h_z (i+1/2, k)
// The outer faces r = R, z = 0, z = Z are perfect conductors; the absorbing
// layer sits just inside them.

namespace cbg::kernels {

enum Field { kEr = 0, kEphi, kEz, kHr, kHphi, kHz };

struct YeeFields {
  int nr = 0;
  int nz = 0;
  int m = 1;
  double dr = 0.0;
  double dz = 0.0;
  double dt = 0.0;
  std::array<double*, 6> f{};
  // dt / eps at e_r, e_phi, e_z nodes.
  std::array<const double*, 3> ce{};
};

// Convolutional PML (kappa = 1, CFS alpha) recursion coefficients, one entry
// per grid index, and the auxiliary convolution arrays. In the radial layer
// the 1/r terms are stretched as well (1/r -> 1/r~, the *_t coefficients);
// stretching only d/dr leaves an unstable system for m = 1.
struct Cpml {
  int cells = 0;
  std::vector<double> b_r_int, a_r_int, b_r_half, a_r_half;
  std::vector<double> b_t_int, a_t_int, b_t_half, a_t_half;
  std::vector<double> b_z_int, a_z_int, b_z_half, a_z_half;
  // Matched (equal E and H rate) damping factors per step in the radial
  // layer. The stretched m = 1 system keeps a slowly growing low-frequency
  // mode; a weak matched loss removes it without an impedance step.
  std::vector<double> d_int, d_half;
  enum Psi { kErZ = 0, kEpZ, kEpR, kEzR, kHrZ, kHpR, kHpZ, kHzR, kErT, kEzT, kHrT, kHzT };
  std::array<std::vector<double>, 12> psi;
};

namespace serial {
void update_h(YeeFields& g, Cpml& pml);
void update_e(YeeFields& g, Cpml& pml);
}  // namespace serial

namespace omp {
void update_h(YeeFields& g, Cpml& pml);
void update_e(YeeFields& g, Cpml& pml);
}  // namespace omp

/// Number of threads the OpenMP backend will use (1 without OpenMP).
int omp_threads();

}  // namespace cbg::kernels
