#pragma once

#include <cstddef>

// Dense double-precision primitives used by the hot loops (batch prediction,
// gradient accumulation, normal-equation assembly, boosting bookkeeping).
// Every primitive has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The variant is picked once at runtime from
// cpuid; force_isa() pins a specific path (used by the equivalence tests).

namespace gapmin::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
// Pins the dispatch table to the given path. Requesting avx2 on a machine
// without it throws std::runtime_error.
void force_isa(Isa isa);
// Back to cpuid-based auto selection.
void reset_isa();
bool avx2_available();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* a, double alpha, std::size_t n);
// max_i |a[i] - b[i]|, 0 for n == 0
double max_abs_diff(const double* a, const double* b, std::size_t n);
// out[i] = <x.row(i), w> for row-major x of shape n x d
void matvec(const double* x, std::size_t n, std::size_t d, const double* w,
            double* out);
// g += sum_i c[i] * x.row(i)
void matvec_t(const double* x, std::size_t n, std::size_t d, const double* c,
              double* g);
// G += sum_i w[i] * x_i x_i^T (full d x d row-major), b += sum_i wy[i] * x_i
void weighted_gram(const double* x, std::size_t n, std::size_t d,
                   const double* w, const double* wy, double* G, double* b);

}  // namespace gapmin::kernels
