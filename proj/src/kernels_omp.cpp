#include "cbg/kernels.hpp"
#include "kernel_rows.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cbg::kernels {

namespace omp {

// Rows are independent within each half step, so a static schedule gives the
// same arithmetic as the serial loop.
void update_h(YeeFields& g, Cpml& pml) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < g.nr; ++i) detail::h_row(g, pml, i);
}

void update_e(YeeFields& g, Cpml& pml) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < g.nr; ++i) detail::e_row(g, pml, i);
}

}  // namespace omp

int omp_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cbg::kernels
