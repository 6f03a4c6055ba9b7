#include "rdmeta/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#if defined(__x86_64__) || defined(_M_X64)
#define RDMETA_X86 1
#include <immintrin.h>
#else
#define RDMETA_X86 0
#endif

namespace rdmeta::kernels {

namespace scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sumsq(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void allen_cahn(const double* u, double* f, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) f[i] = u[i] - u[i] * u[i] * u[i];
}

void quintic(double mu, double beta, const double* u, double* f, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u2 = u[i] * u[i];
    f[i] = u[i] * (-mu + u2 * (beta - u2));
  }
}

}  // namespace scalar

#if RDMETA_X86
namespace avx2 {

__attribute__((target("avx2,fma"))) void axpy(double a, const double* x, double* y,
                                              std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma"))) void axpby(double a, const double* x, double b,
                                               const double* y, double* z, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    v = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), v);
    _mm256_storeu_pd(z + i, v);
  }
  for (; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

__attribute__((target("avx2,fma"))) void scale(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

__attribute__((target("avx2,fma"))) static double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma"))) double sumsq(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

__attribute__((target("avx2,fma"))) double dot(const double* x, const double* y,
                                               std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

__attribute__((target("avx2,fma"))) double max_abs(const double* x, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(x + i)));
  double m = 0.0;
  alignas(32) double buf[4];
  _mm256_store_pd(buf, acc);
  for (double b : buf) m = std::max(m, b);
  for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

__attribute__((target("avx2,fma"))) void allen_cahn(const double* u, double* f,
                                                    std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(u + i);
    const __m256d v3 = _mm256_mul_pd(_mm256_mul_pd(v, v), v);
    _mm256_storeu_pd(f + i, _mm256_sub_pd(v, v3));
  }
  for (; i < n; ++i) f[i] = u[i] - u[i] * u[i] * u[i];
}

__attribute__((target("avx2,fma"))) void quintic(double mu, double beta, const double* u,
                                                 double* f, std::size_t n) {
  const __m256d vmu = _mm256_set1_pd(-mu);
  const __m256d vbeta = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(u + i);
    const __m256d v2 = _mm256_mul_pd(v, v);
    const __m256d inner = _mm256_add_pd(vmu, _mm256_mul_pd(v2, _mm256_sub_pd(vbeta, v2)));
    _mm256_storeu_pd(f + i, _mm256_mul_pd(v, inner));
  }
  for (; i < n; ++i) {
    const double u2 = u[i] * u[i];
    f[i] = u[i] * (-mu + u2 * (beta - u2));
  }
}

}  // namespace avx2
#endif  // RDMETA_X86

namespace {

struct Backend {
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*axpby)(double, const double*, double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*max_abs)(const double*, std::size_t);
  void (*allen_cahn)(const double*, double*, std::size_t);
  void (*quintic)(double, double, const double*, double*, std::size_t);
  bool avx2 = false;
};

Backend make_scalar() {
  return {scalar::axpy, scalar::axpby, scalar::scale,   scalar::sumsq,
          scalar::dot,  scalar::max_abs, scalar::allen_cahn, scalar::quintic, false};
}

#if RDMETA_X86
Backend make_avx2() {
  return {avx2::axpy, avx2::axpby, avx2::scale,   avx2::sumsq,
          avx2::dot,  avx2::max_abs, avx2::allen_cahn, avx2::quintic, true};
}
#endif

Backend detect() {
#if RDMETA_X86
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return make_avx2();
#endif
  return make_scalar();
}

Backend g_backend = detect();

}  // namespace

void select_backend(int kind) {
  if (kind == 1) {
    g_backend = make_scalar();
  }
#if RDMETA_X86
  else if (kind == 2) {
    g_backend = make_avx2();
  }
#endif
  else {
    g_backend = detect();
  }
}

bool using_avx2() { return g_backend.avx2; }

void axpy(double a, const double* x, double* y, std::size_t n) { g_backend.axpy(a, x, y, n); }
void axpby(double a, const double* x, double b, const double* y, double* z, std::size_t n) {
  g_backend.axpby(a, x, b, y, z, n);
}
void scale(double a, double* x, std::size_t n) { g_backend.scale(a, x, n); }
double sumsq(const double* x, std::size_t n) { return g_backend.sumsq(x, n); }
double dot(const double* x, const double* y, std::size_t n) { return g_backend.dot(x, y, n); }
double max_abs(const double* x, std::size_t n) { return g_backend.max_abs(x, n); }
void allen_cahn(const double* u, double* f, std::size_t n) { g_backend.allen_cahn(u, f, n); }
void quintic(double mu, double beta, const double* u, double* f, std::size_t n) {
  g_backend.quintic(mu, beta, u, f, n);
}

}  // namespace rdmeta::kernels
