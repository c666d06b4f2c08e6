#pragma once

#include <cstddef>

namespace hpfl::kernels {

// Dense kernels behind the forward/backward passes. The OpenMP versions
// parallelize over output rows only: each output element is accumulated by a
// single thread in fixed index order, so results are identical for any thread
// count. The ref:: versions are naive serial loops kept as the correctness
// oracle for the parallel ones and as the baseline in bench/.

// c[n x m] = a[n x k] * b[k x m] + bias[m]; bias may be null.
template <typename T>
void affine(const T* a, const T* b, const T* bias, T* c, int n, int k, int m) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * k;
    T* ci = c + static_cast<std::size_t>(i) * m;
    if (bias) {
      for (int j = 0; j < m; ++j) ci[j] = bias[j];
    } else {
      for (int j = 0; j < m; ++j) ci[j] = T(0);
    }
    for (int p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[n x k] = a[n x m] * b[k x m]^T
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int n, int m, int k) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * m;
    T* ci = c + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const T* bj = b + static_cast<std::size_t>(j) * m;
      T s = T(0);
      for (int p = 0; p < m; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

// c[k x m] = a[n x k]^T * d[n x m]
template <typename T>
void matmul_tn(const T* a, const T* d, T* c, int n, int k, int m) {
#pragma omp parallel for schedule(static)
  for (int p = 0; p < k; ++p) {
    T* cp = c + static_cast<std::size_t>(p) * m;
    for (int j = 0; j < m; ++j) cp[j] = T(0);
    for (int i = 0; i < n; ++i) {
      const T aip = a[static_cast<std::size_t>(i) * k + p];
      const T* di = d + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) cp[j] += aip * di[j];
    }
  }
}

// out[m] = column sums of a[n x m]
template <typename T>
void col_sum(const T* a, T* out, int n, int m) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j) {
    T s = T(0);
    for (int i = 0; i < n; ++i) s += a[static_cast<std::size_t>(i) * m + j];
    out[j] = s;
  }
}

namespace ref {

// Plain nested loops; summation order per output element matches the
// parallel versions above.

template <typename T>
void affine(const T* a, const T* b, const T* bias, T* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * k;
    T* ci = c + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      T s = bias ? bias[j] : T(0);
      for (int p = 0; p < k; ++p) s += ai[p] * b[static_cast<std::size_t>(p) * m + j];
      ci[j] = s;
    }
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int n, int m, int k) {
  for (int i = 0; i < n; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * m;
    T* ci = c + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const T* bj = b + static_cast<std::size_t>(j) * m;
      T s = T(0);
      for (int p = 0; p < m; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

template <typename T>
void matmul_tn(const T* a, const T* d, T* c, int n, int k, int m) {
  for (int p = 0; p < k; ++p) {
    T* cp = c + static_cast<std::size_t>(p) * m;
    for (int j = 0; j < m; ++j) {
      T s = T(0);
      for (int i = 0; i < n; ++i) {
        s += a[static_cast<std::size_t>(i) * k + p] * d[static_cast<std::size_t>(i) * m + j];
      }
      cp[j] = s;
    }
  }
}

template <typename T>
void col_sum(const T* a, T* out, int n, int m) {
  for (int j = 0; j < m; ++j) {
    T s = T(0);
    for (int i = 0; i < n; ++i) s += a[static_cast<std::size_t>(i) * m + j];
    out[j] = s;
  }
}

}  // namespace ref

}  // namespace hpfl::kernels
