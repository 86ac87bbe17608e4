#include "lmd/simd/dispatch.hpp"

#if (defined(__x86_64__) || defined(_M_X64)) && defined(__AVX2__) && defined(__FMA__)
#define LMD_AVX2_COMPILED 1
#include <immintrin.h>
#else
#define LMD_AVX2_COMPILED 0
#endif

#if LMD_AVX2_COMPILED

namespace lmd::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void axpy_v(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_v(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq_diff_v(std::size_t n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_sq_v(std::size_t n, const double* a) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

void conv3x3_row_v(std::size_t n, const double* r0, const double* r1,
                   const double* r2, const double* k, double* dst) {
  const __m256d k0 = _mm256_set1_pd(k[0]), k1 = _mm256_set1_pd(k[1]),
                k2 = _mm256_set1_pd(k[2]), k3 = _mm256_set1_pd(k[3]),
                k4 = _mm256_set1_pd(k[4]), k5 = _mm256_set1_pd(k[5]),
                k6 = _mm256_set1_pd(k[6]), k7 = _mm256_set1_pd(k[7]),
                k8 = _mm256_set1_pd(k[8]);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_loadu_pd(dst + j);
    acc = _mm256_fmadd_pd(k0, _mm256_loadu_pd(r0 + j), acc);
    acc = _mm256_fmadd_pd(k1, _mm256_loadu_pd(r0 + j + 1), acc);
    acc = _mm256_fmadd_pd(k2, _mm256_loadu_pd(r0 + j + 2), acc);
    acc = _mm256_fmadd_pd(k3, _mm256_loadu_pd(r1 + j), acc);
    acc = _mm256_fmadd_pd(k4, _mm256_loadu_pd(r1 + j + 1), acc);
    acc = _mm256_fmadd_pd(k5, _mm256_loadu_pd(r1 + j + 2), acc);
    acc = _mm256_fmadd_pd(k6, _mm256_loadu_pd(r2 + j), acc);
    acc = _mm256_fmadd_pd(k7, _mm256_loadu_pd(r2 + j + 1), acc);
    acc = _mm256_fmadd_pd(k8, _mm256_loadu_pd(r2 + j + 2), acc);
    _mm256_storeu_pd(dst + j, acc);
  }
  for (; j < n; ++j) {
    dst[j] += k[0] * r0[j] + k[1] * r0[j + 1] + k[2] * r0[j + 2] +
              k[3] * r1[j] + k[4] * r1[j + 1] + k[5] * r1[j + 2] +
              k[6] * r2[j] + k[7] * r2[j + 1] + k[8] * r2[j + 2];
  }
}

void lap5_row_v(std::size_t n, const double* up, const double* mid,
                const double* down, double* dst) {
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d s = _mm256_add_pd(_mm256_loadu_pd(up + j), _mm256_loadu_pd(down + j));
    s = _mm256_add_pd(s, _mm256_loadu_pd(mid + j));
    s = _mm256_add_pd(s, _mm256_loadu_pd(mid + j + 2));
    s = _mm256_fnmadd_pd(four, _mm256_loadu_pd(mid + j + 1), s);
    _mm256_storeu_pd(dst + j, s);
  }
  for (; j < n; ++j)
    dst[j] = up[j] + down[j] + mid[j] + mid[j + 2] - 4.0 * mid[j + 1];
}

void mul_acc_v(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d o = _mm256_loadu_pd(out + i);
    o = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), o);
    _mm256_storeu_pd(out + i, o);
  }
  for (; i < n; ++i) out[i] += x[i] * y[i];
}

}  // namespace

const Kernels& avx2_kernels() {
  static const Kernels k{axpy_v,        dot_v,      sum_sq_diff_v, sum_sq_v,
                         conv3x3_row_v, lap5_row_v, mul_acc_v};
  return k;
}

}  // namespace lmd::simd
#elif defined(__x86_64__) || defined(_M_X64)
namespace lmd::simd {
// TU built without AVX2 support; dispatch falls back to scalar.
const Kernels& avx2_kernels() { return scalar_kernels(); }
}  // namespace lmd::simd
#endif
