// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "toxq/kernels/kernels.hpp"

namespace toxq::kernels {

#define TOXQ_DECLARE_KERNELS(NS, T)                                                        \
  namespace NS {                                                                           \
  T Dot(const T* a, const T* b, std::size_t n);                                            \
  void Axpy(T alpha, const T* x, T* y, std::size_t n);                                     \
  void GemmNT(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate);         \
  void GemmNN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate);         \
  void GemmTN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate);         \
  }

TOXQ_DECLARE_KERNELS(scalar, float)
TOXQ_DECLARE_KERNELS(scalar, double)
TOXQ_DECLARE_KERNELS(avx2, float)
TOXQ_DECLARE_KERNELS(avx2, double)

#undef TOXQ_DECLARE_KERNELS

bool CpuHasAvx2();

}  // namespace toxq::kernels
