#include "gapmin/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "kernels_impl.hpp"

namespace gapmin::kernels {

// ===== scalar reference kernels =====

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double* a, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= alpha;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::fabs(a[i] - b[i]);
    if (v > m) m = v;
  }
  return m;
}

void matvec_scalar(const double* x, std::size_t n, std::size_t d,
                   const double* w, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot_scalar(x + i * d, w, d);
}

void matvec_t_scalar(const double* x, std::size_t n, std::size_t d,
                     const double* c, double* g) {
  for (std::size_t i = 0; i < n; ++i) axpy_scalar(c[i], x + i * d, g, d);
}

void weighted_gram_scalar(const double* x, std::size_t n, std::size_t d,
                          const double* w, const double* wy, double* G,
                          double* b) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      double wxj = w[i] * xi[j];
      double* Gj = G + j * d;
      for (std::size_t l = 0; l < d; ++l) Gj[l] += wxj * xi[l];
      b[j] += wy[i] * xi[j];
    }
  }
}

}  // namespace

namespace detail {

const Vtable& scalar_vtable() {
  static const Vtable t = {dot_scalar,      sum_scalar,
                           axpy_scalar,     scale_scalar,
                           max_abs_diff_scalar, matvec_scalar,
                           matvec_t_scalar, weighted_gram_scalar};
  return t;
}

}  // namespace detail

// ===== runtime dispatch =====

namespace {

bool cpu_has_avx2() {
#if defined(GAPMIN_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const detail::Vtable* pick_default() {
#if defined(GAPMIN_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_vtable();
#endif
  return &detail::scalar_vtable();
}

struct Dispatch {
  const detail::Vtable* table;
  Isa isa;
  Dispatch() { reset(); }
  void reset() {
    table = pick_default();
    isa = (table == &detail::scalar_vtable()) ? Isa::scalar : Isa::avx2;
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Isa active_isa() { return dispatch().isa; }

bool avx2_available() { return cpu_has_avx2(); }

void force_isa(Isa isa) {
  if (isa == Isa::scalar) {
    dispatch().table = &detail::scalar_vtable();
    dispatch().isa = Isa::scalar;
    return;
  }
#if defined(GAPMIN_HAVE_AVX2)
  if (cpu_has_avx2()) {
    dispatch().table = &detail::avx2_vtable();
    dispatch().isa = Isa::avx2;
    return;
  }
#endif
  throw std::runtime_error("kernels: avx2 not available on this cpu");
}

void reset_isa() { dispatch().reset(); }

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table->dot(a, b, n);
}

double sum(const double* a, std::size_t n) {
  return dispatch().table->sum(a, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}

void scale(double* a, double alpha, std::size_t n) {
  dispatch().table->scale(a, alpha, n);
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  return dispatch().table->max_abs_diff(a, b, n);
}

void matvec(const double* x, std::size_t n, std::size_t d, const double* w,
            double* out) {
  dispatch().table->matvec(x, n, d, w, out);
}

void matvec_t(const double* x, std::size_t n, std::size_t d, const double* c,
              double* g) {
  dispatch().table->matvec_t(x, n, d, c, g);
}

void weighted_gram(const double* x, std::size_t n, std::size_t d,
                   const double* w, const double* wy, double* G, double* b) {
  dispatch().table->weighted_gram(x, n, d, w, wy, G, b);
}

}  // namespace gapmin::kernels
