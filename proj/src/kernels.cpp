#include "refcap/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace refcap::kernels {
namespace {

// Computes row i of C += op(A) * op(B).
template <typename T>
inline void gemm_row(Trans ta, Trans tb, std::size_t i, std::size_t m,
                     std::size_t n, std::size_t k, const T* a, const T* b,
                     T* c) {
  T* crow = c + i * n;
  if (tb == Trans::kNo) {
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ta == Trans::kNo ? a[i * k + p] : a[p * m + i];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      if (ta == Trans::kNo) {
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      } else {
        for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * brow[p];
      }
      crow[j] += acc;
    }
  }
}

template <typename T>
inline void softmax_row(std::size_t i, std::size_t n, const T* x, T* y) {
  const T* xr = x + i * n;
  T* yr = y + i * n;
  const T mx = *std::max_element(xr, xr + n);
  T sum = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    yr[j] = std::exp(xr[j] - mx);
    sum += yr[j];
  }
  const T inv = T(1) / sum;
  for (std::size_t j = 0; j < n; ++j) yr[j] *= inv;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const T> a, std::span<const T> b,
          std::span<T> c) {
  const bool parallel = m > 1 && m * n * k >= kParallelThreshold;
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    gemm_row(trans_a, trans_b, static_cast<std::size_t>(i), m, n, k, a.data(),
             b.data(), c.data());
  }
}

template <typename T>
void softmax_rows(std::size_t m, std::size_t n, std::span<const T> x,
                  std::span<T> y) {
  const bool parallel = m > 1 && m * n >= kParallelThreshold;
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    softmax_row(static_cast<std::size_t>(i), n, x.data(), y.data());
  }
}

namespace serial {

template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const T> a, std::span<const T> b,
          std::span<T> c) {
  for (std::size_t i = 0; i < m; ++i) {
    gemm_row(trans_a, trans_b, i, m, n, k, a.data(), b.data(), c.data());
  }
}

template <typename T>
void softmax_rows(std::size_t m, std::size_t n, std::span<const T> x,
                  std::span<T> y) {
  for (std::size_t i = 0; i < m; ++i) softmax_row(i, n, x.data(), y.data());
}

}  // namespace serial

#define REFCAP_INSTANTIATE_KERNELS(T)                                        \
  template void gemm<T>(Trans, Trans, std::size_t, std::size_t, std::size_t, \
                        std::span<const T>, std::span<const T>, std::span<T>); \
  template void softmax_rows<T>(std::size_t, std::size_t, std::span<const T>, \
                                std::span<T>);                               \
  template void serial::gemm<T>(Trans, Trans, std::size_t, std::size_t,      \
                                std::size_t, std::span<const T>,             \
                                std::span<const T>, std::span<T>);           \
  template void serial::softmax_rows<T>(std::size_t, std::size_t,            \
                                        std::span<const T>, std::span<T>);

REFCAP_INSTANTIATE_KERNELS(float)
REFCAP_INSTANTIATE_KERNELS(double)

#undef REFCAP_INSTANTIATE_KERNELS

}  // namespace refcap::kernels
