#include "cbg/kernels.hpp"
#include "kernel_rows.hpp"

namespace cbg::kernels::serial {

void update_h(YeeFields& g, Cpml& pml) {
  for (int i = 0; i < g.nr; ++i) detail::h_row(g, pml, i);
}

void update_e(YeeFields& g, Cpml& pml) {
  for (int i = 0; i < g.nr; ++i) detail::e_row(g, pml, i);
}

}  // namespace cbg::kernels::serial
