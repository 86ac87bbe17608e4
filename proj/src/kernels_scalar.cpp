#include "lmd/simd/dispatch.hpp"

namespace lmd::simd {
namespace {

void axpy_s(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_s(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_sq_diff_s(std::size_t n, const double* a, const double* b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sum_sq_s(std::size_t n, const double* a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void conv3x3_row_s(std::size_t n, const double* r0, const double* r1,
                   const double* r2, const double* k, double* dst) {
  for (std::size_t j = 0; j < n; ++j) {
    dst[j] += k[0] * r0[j] + k[1] * r0[j + 1] + k[2] * r0[j + 2] +
              k[3] * r1[j] + k[4] * r1[j + 1] + k[5] * r1[j + 2] +
              k[6] * r2[j] + k[7] * r2[j + 1] + k[8] * r2[j + 2];
  }
}

void lap5_row_s(std::size_t n, const double* up, const double* mid,
                const double* down, double* dst) {
  for (std::size_t j = 0; j < n; ++j)
    dst[j] = up[j] + down[j] + mid[j] + mid[j + 2] - 4.0 * mid[j + 1];
}

void mul_acc_s(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] += x[i] * y[i];
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{axpy_s,        dot_s,      sum_sq_diff_s, sum_sq_s,
                         conv3x3_row_s, lap5_row_s, mul_acc_s};
  return k;
}

}  // namespace lmd::simd
