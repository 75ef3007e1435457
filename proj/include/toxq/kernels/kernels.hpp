// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Dense arithmetic kernels used by the language model. Every entry point has
// a scalar reference implementation and an AVX2/FMA implementation; the
// variant is chosen once at startup from the running CPU and can be pinned
// with SetIsa() or the TOXQ_KERNELS environment variable ("scalar"/"avx2").
//
// Within one variant each output element is reduced in a fixed order that
// does not depend on matrix shape or blocking, so results are reproducible
// run to run. The two variants round differently and agree to a few ulps.

#pragma once

#include <cstddef>

namespace toxq::kernels {

enum class Isa { kScalar, kAvx2 };

Isa DetectIsa();
Isa ActiveIsa();
// Throws ContractError if the CPU does not support `isa`.
void SetIsa(Isa isa);
const char* IsaName(Isa isa);

// Row-major view: element (r, c) lives at data[r * stride + c].
template <typename T>
struct Mat {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  T& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
  T* row(std::size_t r) const { return data + r * stride; }
};

template <typename T>
Mat<T> MakeMat(T* data, std::size_t rows, std::size_t cols) {
  return Mat<T>{data, rows, cols, cols};
}
template <typename T>
Mat<T> MakeMat(T* data, std::size_t rows, std::size_t cols, std::size_t stride) {
  return Mat<T>{data, rows, cols, stride};
}

template <typename T>
T Dot(const T* a, const T* b, std::size_t n);

// y += alpha * x
template <typename T>
void Axpy(T alpha, const T* x, T* y, std::size_t n);

// c = alpha * a * b^T (+ c if accumulate).   a: m x k, b: n x k, c: m x n
template <typename T>
void GemmNT(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate);

// c = alpha * a * b (+ c if accumulate).     a: m x k, b: k x n, c: m x n
template <typename T>
void GemmNN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate);

// c = alpha * a^T * b (+ c if accumulate).   a: k x m, b: k x n, c: m x n
template <typename T>
void GemmTN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate);

}  // namespace toxq::kernels
