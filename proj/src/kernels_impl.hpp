#pragma once

#include <cstddef>

// Internal: per-ISA entry points behind the dispatch table in kernels.cpp.

namespace gapmin::kernels::detail {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double*, double, std::size_t);
  double (*max_abs_diff)(const double*, const double*, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*,
                 double*);
  void (*matvec_t)(const double*, std::size_t, std::size_t, const double*,
                   double*);
  void (*weighted_gram)(const double*, std::size_t, std::size_t, const double*,
                        const double*, double*, double*);
};

const Vtable& scalar_vtable();
#if defined(GAPMIN_HAVE_AVX2)
const Vtable& avx2_vtable();
#endif

}  // namespace gapmin::kernels::detail
