// AVX2+FMA variants. This TU is compiled with -mavx2 -mfma and must only be
// entered through the dispatch table after the cpuid check.

#if defined(GAPMIN_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "kernels_impl.hpp"

namespace gapmin::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double* a, double alpha, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(a + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), va));
  }
  for (; i < n; ++i) a[i] *= alpha;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d signmask = _mm256_set1_pd(-0.0);
  __m256d vm = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d diff =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    vm = _mm256_max_pd(vm, _mm256_andnot_pd(signmask, diff));
  }
  double buf[4];
  _mm256_storeu_pd(buf, vm);
  double m = buf[0];
  for (int k = 1; k < 4; ++k)
    if (buf[k] > m) m = buf[k];
  for (; i < n; ++i) {
    double v = std::fabs(a[i] - b[i]);
    if (v > m) m = v;
  }
  return m;
}

void matvec_avx2(const double* x, std::size_t n, std::size_t d,
                 const double* w, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot_avx2(x + i * d, w, d);
}

void matvec_t_avx2(const double* x, std::size_t n, std::size_t d,
                   const double* c, double* g) {
  for (std::size_t i = 0; i < n; ++i) axpy_avx2(c[i], x + i * d, g, d);
}

void weighted_gram_avx2(const double* x, std::size_t n, std::size_t d,
                        const double* w, const double* wy, double* G,
                        double* b) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      axpy_avx2(w[i] * xi[j], xi, G + j * d, d);
    }
    axpy_avx2(wy[i], xi, b, d);
  }
}

}  // namespace

const Vtable& avx2_vtable() {
  static const Vtable t = {dot_avx2,      sum_avx2,
                           axpy_avx2,     scale_avx2,
                           max_abs_diff_avx2, matvec_avx2,
                           matvec_t_avx2, weighted_gram_avx2};
  return t;
}

}  // namespace gapmin::kernels::detail

#endif  // GAPMIN_HAVE_AVX2
