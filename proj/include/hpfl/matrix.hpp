#pragma once

#include <cstddef>
#include <vector>

namespace hpfl {

// Dense row-major matrix. Plain value type; rows() of a batch are samples.
template <typename T>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Matrix() = default;
  Matrix(int r, int c, T fill = T{})
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  T* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

  T& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  std::size_t size() const { return v.size(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

}  // namespace hpfl
