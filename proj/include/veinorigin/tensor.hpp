#pragma once

#include <cstdint>
#include <vector>

#include "veinorigin/error.hpp"

namespace veinorigin {

/// Dense NHWC tensor.
template <typename T>
struct Tensor {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_),
        data(static_cast<std::size_t>(n_) * h_ * w_ * c_, T(0)) {}

  std::int64_t size() const { return static_cast<std::int64_t>(n) * h * w * c; }

  T at(int in, int iy, int ix, int ic) const {
    return data[((static_cast<std::size_t>(in) * h + iy) * w + ix) * c + ic];
  }
  T& at(int in, int iy, int ix, int ic) {
    return data[((static_cast<std::size_t>(in) * h + iy) * w + ix) * c + ic];
  }

  void release() {
    std::vector<T>().swap(data);
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }
};

}  // namespace veinorigin
