#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the autodiff primitives. Each kernel exists twice: a
// plain serial reference under kernels::serial, and an OpenMP version that
// partitions output rows across threads. Every output element is produced by
// exactly one thread with the same summation order as the reference, so the
// two agree bit for bit.

namespace refcap::kernels {

enum class Trans { kNo, kYes };

// Work (m*n*k multiply-adds) below which the parallel kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

/// C[m x n] += op(A)[m x k] * op(B)[k x n], all row-major.
/// op(A) = A when trans_a is kNo (A stored m x k), else A^T (A stored k x m).
template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const T> a, std::span<const T> b,
          std::span<T> c);

/// Row-wise max-subtracted softmax of an m x n matrix.
template <typename T>
void softmax_rows(std::size_t m, std::size_t n, std::span<const T> x,
                  std::span<T> y);

int max_threads();

namespace serial {

template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const T> a, std::span<const T> b,
          std::span<T> c);

template <typename T>
void softmax_rows(std::size_t m, std::size_t n, std::span<const T> x,
                  std::span<T> y);

}  // namespace serial

}  // namespace refcap::kernels
