#pragma once
// Dense B x C x H x W tensor of doubles, row-major innermost width.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lmd {

struct Tensor4 {
  int B = 0, C = 0, H = 0, W = 0;
  std::vector<double> v;

  Tensor4() = default;
  Tensor4(int b, int c, int h, int w)
      : B(b), C(c), H(h), W(w),
        v(static_cast<std::size_t>(b) * c * h * w, 0.0) {
    if (b <= 0 || c <= 0 || h <= 0 || w <= 0)
      throw std::invalid_argument("Tensor4: nonpositive dimension");
  }

  std::size_t size() const { return v.size(); }

  double& at(int b, int c, int h, int w) {
    return v[((static_cast<std::size_t>(b) * C + c) * H + h) * W + w];
  }
  double at(int b, int c, int h, int w) const {
    return v[((static_cast<std::size_t>(b) * C + c) * H + h) * W + w];
  }

  // Pointer to the start of one (b, c, h) row.
  double* row(int b, int c, int h) {
    return v.data() + ((static_cast<std::size_t>(b) * C + c) * H + h) * W;
  }
  const double* row(int b, int c, int h) const {
    return v.data() + ((static_cast<std::size_t>(b) * C + c) * H + h) * W;
  }

  bool same_shape(const Tensor4& o) const {
    return B == o.B && C == o.C && H == o.H && W == o.W;
  }
};

}  // namespace lmd
