// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels: straightforward loops, ascending reduction index.

#include "variants.hpp"

namespace toxq::kernels::scalar {

namespace {

template <typename T>
T DotImpl(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void AxpyImpl(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void Store(T* dst, T value, T alpha, bool accumulate) {
  *dst = accumulate ? *dst + alpha * value : alpha * value;
}

template <typename T>
void GemmNTImpl(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      Store(&c(i, j), DotImpl(a.row(i), b.row(j), a.cols), alpha, accumulate);
    }
  }
}

template <typename T>
void GemmNNImpl(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += a(i, p) * b(p, j);
      Store(&c(i, j), acc, alpha, accumulate);
    }
  }
}

template <typename T>
void GemmTNImpl(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  for (std::size_t i = 0; i < a.cols; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < a.rows; ++p) acc += a(p, i) * b(p, j);
      Store(&c(i, j), acc, alpha, accumulate);
    }
  }
}

}  // namespace

#define TOXQ_DEFINE_SCALAR(T)                                                                        \
  T Dot(const T* a, const T* b, std::size_t n) { return DotImpl(a, b, n); }                          \
  void Axpy(T alpha, const T* x, T* y, std::size_t n) { AxpyImpl(alpha, x, y, n); }                  \
  void GemmNT(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {                  \
    GemmNTImpl(a, b, c, alpha, accumulate);                                                          \
  }                                                                                                  \
  void GemmNN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {                  \
    GemmNNImpl(a, b, c, alpha, accumulate);                                                          \
  }                                                                                                  \
  void GemmTN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {                  \
    GemmTNImpl(a, b, c, alpha, accumulate);                                                          \
  }

TOXQ_DEFINE_SCALAR(float)
TOXQ_DEFINE_SCALAR(double)

#undef TOXQ_DEFINE_SCALAR

}  // namespace toxq::kernels::scalar
