#pragma once

// Per-row bodies shared by the serial and OpenMP backends. Each call touches
// only row i of the updated fields (and its own PML state), so rows can be
// processed in any order or concurrently with bit-identical results.

#include "cbg/kernels.hpp"

namespace cbg::kernels::detail {

inline void h_row(const YeeFields& g, Cpml& pml, int i) {
  const int nz = g.nz;
  const std::size_t s = static_cast<std::size_t>(nz) + 1;
  const std::size_t o = static_cast<std::size_t>(i) * s;
  const double dt = g.dt;
  const double idr = 1.0 / g.dr;
  const double idz = 1.0 / g.dz;
  const double m = g.m;

  double* hr = g.f[kHr] + o;
  double* hp = g.f[kHphi] + o;
  double* hz = g.f[kHz] + o;
  const double* er = g.f[kEr] + o;
  const double* ep = g.f[kEphi] + o;
  const double* ep1 = ep + s;
  const double* ez = g.f[kEz] + o;
  const double* ez1 = ez + s;

  // h_r at (i, k+1/2). On the axis m e_z / r -> e_z(dr) / dr for m = 1.
  if (i == 0) {
    for (int k = 0; k < nz; ++k) hr[k] += dt * (ez1[k] * idr + (ep[k + 1] - ep[k]) * idz);
  } else {
    const double mr = m / (i * g.dr);
    for (int k = 0; k < nz; ++k) hr[k] += dt * (mr * ez[k] + (ep[k + 1] - ep[k]) * idz);
  }

  for (int k = 0; k < nz; ++k) {
    hp[k] += dt * ((ez1[k] - ez[k]) * idr - (er[k + 1] - er[k]) * idz);
  }

  const double rh = (i + 0.5) * g.dr;
  const double half_inv_r = 0.5 / rh;
  const double m_inv_r = m / rh;
  for (int k = 1; k < nz; ++k) {
    hz[k] -= dt * ((ep1[k] - ep[k]) * idr + (ep1[k] + ep[k]) * half_inv_r + m_inv_r * er[k]);
  }

  const int n = pml.cells;
  if (n == 0) return;

  if (i >= g.nr - n) {
    const double b = pml.b_r_half[i];
    const double a = pml.a_r_half[i];
    double* phr = pml.psi[Cpml::kHpR].data() + o;
    double* pzr = pml.psi[Cpml::kHzR].data() + o;
    for (int k = 0; k < nz; ++k) {
      phr[k] = b * phr[k] + a * (ez1[k] - ez[k]) * idr;
      hp[k] += dt * phr[k];
    }
    for (int k = 1; k < nz; ++k) {
      pzr[k] = b * pzr[k] + a * (ep1[k] - ep[k]) * idr;
      hz[k] -= dt * pzr[k];
    }
    // (e_phi + m e_r) / r~ at r = (i + 1/2) dr.
    const double bt = pml.b_t_half[i];
    const double at = pml.a_t_half[i];
    double* pzt = pml.psi[Cpml::kHzT].data() + o;
    for (int k = 1; k < nz; ++k) {
      pzt[k] = bt * pzt[k] + at * (0.5 * (ep1[k] + ep[k]) + m * er[k]);
      hz[k] -= dt * pzt[k] / rh;
    }
    // m e_z / r~ at r = i dr.
    if (i > 0) {
      const double bi = pml.b_t_int[i];
      const double ai = pml.a_t_int[i];
      double* prt = pml.psi[Cpml::kHrT].data() + o;
      const double mr = m / (i * g.dr);
      for (int k = 0; k < nz; ++k) {
        prt[k] = bi * prt[k] + ai * ez[k];
        hr[k] += dt * mr * prt[k];
      }
    }
  }

  double* prz = pml.psi[Cpml::kHrZ].data() + o;
  double* ppz = pml.psi[Cpml::kHpZ].data() + o;
  auto z_slab = [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      const double b = pml.b_z_half[k];
      const double a = pml.a_z_half[k];
      prz[k] = b * prz[k] + a * (ep[k + 1] - ep[k]) * idz;
      hr[k] += dt * prz[k];
      ppz[k] = b * ppz[k] + a * (er[k + 1] - er[k]) * idz;
      hp[k] -= dt * ppz[k];
    }
  };
  z_slab(0, n);
  z_slab(nz - n, nz);

  if (i >= g.nr - n) {
    const double di = pml.d_int[i];
    const double dh = pml.d_half[i];
    for (int k = 0; k < nz; ++k) {
      hr[k] *= di;
      hp[k] *= dh;
    }
    for (int k = 1; k < nz; ++k) hz[k] *= dh;
  }
}

inline void e_row(const YeeFields& g, Cpml& pml, int i) {
  const int nz = g.nz;
  const std::size_t s = static_cast<std::size_t>(nz) + 1;
  const std::size_t o = static_cast<std::size_t>(i) * s;
  const double idr = 1.0 / g.dr;
  const double idz = 1.0 / g.dz;
  const double m = g.m;

  double* er = g.f[kEr] + o;
  double* ep = g.f[kEphi] + o;
  double* ez = g.f[kEz] + o;
  const double* hr = g.f[kHr] + o;
  const double* hp = g.f[kHphi] + o;
  const double* hz = g.f[kHz] + o;
  const double* cer = g.ce[0] + o;
  const double* cep = g.ce[1] + o;
  const double* cez = g.ce[2] + o;

  const double rh = (i + 0.5) * g.dr;
  const double m_inv_rh = m / rh;
  for (int k = 1; k < nz; ++k) {
    er[k] += cer[k] * (m_inv_rh * hz[k] - (hp[k] - hp[k - 1]) * idz);
  }

  // e_phi at (i, k). h_z is odd in r for m = 1, so on the axis
  // d(h_z)/dr -> 2 h_z(dr/2) / dr.
  if (i == 0) {
    for (int k = 1; k < nz; ++k) {
      ep[k] += cep[k] * ((hr[k] - hr[k - 1]) * idz - 2.0 * hz[k] * idr);
    }
  } else {
    const double* hzm = hz - s;
    for (int k = 1; k < nz; ++k) {
      ep[k] += cep[k] * ((hr[k] - hr[k - 1]) * idz - (hz[k] - hzm[k]) * idr);
    }
  }

  // e_z vanishes on the axis for m = 1.
  if (i >= 1) {
    const double* hpm = hp - s;
    const double ri = i * g.dr;
    const double half_inv_r = 0.5 / ri;
    const double m_inv_r = m / ri;
    for (int k = 0; k < nz; ++k) {
      ez[k] += cez[k] * ((hp[k] - hpm[k]) * idr + (hp[k] + hpm[k]) * half_inv_r - m_inv_r * hr[k]);
    }
  }

  const int n = pml.cells;
  if (n == 0) return;

  if (i >= g.nr - n) {
    // m h_z / r~ at r = (i + 1/2) dr.
    const double bt = pml.b_t_half[i];
    const double at = pml.a_t_half[i];
    double* prt = pml.psi[Cpml::kErT].data() + o;
    for (int k = 1; k < nz; ++k) {
      prt[k] = bt * prt[k] + at * hz[k];
      er[k] += cer[k] * m_inv_rh * prt[k];
    }
  }

  if (i >= g.nr - n + 1) {
    // (h_phi - m h_r) / r~ at r = i dr.
    const double bt = pml.b_t_int[i];
    const double at = pml.a_t_int[i];
    const double* hpm_t = hp - s;
    double* pzt = pml.psi[Cpml::kEzT].data() + o;
    const double inv_r = 1.0 / (i * g.dr);
    for (int k = 0; k < nz; ++k) {
      pzt[k] = bt * pzt[k] + at * (0.5 * (hp[k] + hpm_t[k]) - m * hr[k]);
      ez[k] += cez[k] * inv_r * pzt[k];
    }
  }

  if (i >= g.nr - n + 1) {
    const double b = pml.b_r_int[i];
    const double a = pml.a_r_int[i];
    const double* hzm = hz - s;
    const double* hpm = hp - s;
    double* ppr = pml.psi[Cpml::kEpR].data() + o;
    double* pzr = pml.psi[Cpml::kEzR].data() + o;
    for (int k = 1; k < nz; ++k) {
      ppr[k] = b * ppr[k] + a * (hz[k] - hzm[k]) * idr;
      ep[k] -= cep[k] * ppr[k];
    }
    for (int k = 0; k < nz; ++k) {
      pzr[k] = b * pzr[k] + a * (hp[k] - hpm[k]) * idr;
      ez[k] += cez[k] * pzr[k];
    }
  }

  double* prz = pml.psi[Cpml::kErZ].data() + o;
  double* ppz = pml.psi[Cpml::kEpZ].data() + o;
  auto z_slab = [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      const double b = pml.b_z_int[k];
      const double a = pml.a_z_int[k];
      prz[k] = b * prz[k] + a * (hp[k] - hp[k - 1]) * idz;
      er[k] -= cer[k] * prz[k];
      ppz[k] = b * ppz[k] + a * (hr[k] - hr[k - 1]) * idz;
      ep[k] += cep[k] * ppz[k];
    }
  };
  z_slab(1, n);
  z_slab(nz - n + 1, nz);

  if (i >= g.nr - n) {
    const double di = pml.d_int[i];
    const double dh = pml.d_half[i];
    for (int k = 1; k < nz; ++k) {
      er[k] *= dh;
      ep[k] *= di;
    }
    for (int k = 0; k < nz; ++k) ez[k] *= di;
  }
}

}  // namespace cbg::kernels::detail
