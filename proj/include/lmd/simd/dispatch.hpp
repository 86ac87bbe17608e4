#pragma once
// Runtime-dispatched arithmetic kernels. Every kernel has a scalar
// reference implementation; on x86 with AVX2+FMA a vectorized variant
// is selected at startup. Set LMD_ISA=scalar to force the reference path.

#include <cstddef>

namespace lmd::simd {

struct Kernels {
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // sum_i x[i] * y[i]
  double (*dot)(std::size_t n, const double* x, const double* y);
  // sum_i (a[i] - b[i])^2
  double (*sum_sq_diff)(std::size_t n, const double* a, const double* b);
  // sum_i a[i]^2
  double (*sum_sq)(std::size_t n, const double* a);
  // dst[j] += sum over the 3x3 taps of k applied to three padded rows
  // (each row has length n+2; tap column j..j+2 maps to output column j)
  void (*conv3x3_row)(std::size_t n, const double* r0, const double* r1,
                      const double* r2, const double* k, double* dst);
  // 5-point Laplacian row: mid is padded (length n+2), up/down unpadded;
  // dst[j] = up[j] + down[j] + mid[j] + mid[j+2] - 4*mid[j+1]
  void (*lap5_row)(std::size_t n, const double* up, const double* mid,
                   const double* down, double* dst);
  // out[i] += x[i] * y[i]
  void (*mul_acc)(std::size_t n, const double* x, const double* y, double* out);
};

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif

// Active table, chosen once on first use.
const Kernels& kernels();
const char* active_isa();

}  // namespace lmd::simd
