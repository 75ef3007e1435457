// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2/FMA kernels. Functions carry target attributes instead of relying on
// translation-unit flags; they are only reached after the dispatcher has
// confirmed CPU support.
//
// Reduction order per output element:
//   Dot/GemmNT: one W-lane accumulator over full W-chunks of k, lanes summed
//               in a fixed tree, then the k-tail folded in with scalar FMA.
//   GemmNN/TN:  sequential FMA over the shared index.
// Every blocking variant below performs exactly that sequence per element.

#include <immintrin.h>

#include "variants.hpp"

#define TOXQ_TARGET __attribute__((target("avx2,fma")))

namespace toxq::kernels::avx2 {

namespace {

template <typename T>
struct Simd;

template <>
struct Simd<double> {
  using Reg = __m256d;
  static constexpr std::size_t kWidth = 4;
  TOXQ_TARGET static Reg Zero() { return _mm256_setzero_pd(); }
  TOXQ_TARGET static Reg Load(const double* p) { return _mm256_loadu_pd(p); }
  TOXQ_TARGET static void Store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
  TOXQ_TARGET static Reg Set1(double x) { return _mm256_set1_pd(x); }
  TOXQ_TARGET static Reg Fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  TOXQ_TARGET static Reg Mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
  TOXQ_TARGET static Reg Add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  TOXQ_TARGET static double Sum(Reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    const __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
  }
  TOXQ_TARGET static double FmaScalar(double a, double b, double c) {
    return _mm_cvtsd_f64(_mm_fmadd_sd(_mm_set_sd(a), _mm_set_sd(b), _mm_set_sd(c)));
  }
};

template <>
struct Simd<float> {
  using Reg = __m256;
  static constexpr std::size_t kWidth = 8;
  TOXQ_TARGET static Reg Zero() { return _mm256_setzero_ps(); }
  TOXQ_TARGET static Reg Load(const float* p) { return _mm256_loadu_ps(p); }
  TOXQ_TARGET static void Store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
  TOXQ_TARGET static Reg Set1(float x) { return _mm256_set1_ps(x); }
  TOXQ_TARGET static Reg Fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  TOXQ_TARGET static Reg Mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
  TOXQ_TARGET static Reg Add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  TOXQ_TARGET static float Sum(Reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    const __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_shuffle_ps(lo, lo, 0x1);
    return _mm_cvtss_f32(_mm_add_ss(lo, sh));
  }
  TOXQ_TARGET static float FmaScalar(float a, float b, float c) {
    return _mm_cvtss_f32(_mm_fmadd_ss(_mm_set_ss(a), _mm_set_ss(b), _mm_set_ss(c)));
  }
};

template <typename T>
TOXQ_TARGET inline T Finish(T old, T value, T alpha, bool accumulate) {
  const T scaled = alpha * value;
  return accumulate ? old + scaled : scaled;
}

template <typename T>
TOXQ_TARGET T DotImpl(const T* a, const T* b, std::size_t n) {
  using S = Simd<T>;
  constexpr std::size_t W = S::kWidth;
  const std::size_t nw = n - n % W;
  auto acc = S::Zero();
  for (std::size_t k = 0; k < nw; k += W) acc = S::Fma(S::Load(a + k), S::Load(b + k), acc);
  T s = S::Sum(acc);
  for (std::size_t k = nw; k < n; ++k) s = S::FmaScalar(a[k], b[k], s);
  return s;
}

template <typename T>
TOXQ_TARGET void AxpyImpl(T alpha, const T* x, T* y, std::size_t n) {
  using S = Simd<T>;
  constexpr std::size_t W = S::kWidth;
  const std::size_t nw = n - n % W;
  const auto va = S::Set1(alpha);
  for (std::size_t i = 0; i < nw; i += W) S::Store(y + i, S::Fma(va, S::Load(x + i), S::Load(y + i)));
  for (std::size_t i = nw; i < n; ++i) y[i] = S::FmaScalar(alpha, x[i], y[i]);
}

// MR rows of a against NR rows of b.
template <typename T, int MR, int NR>
TOXQ_TARGET void NTBlock(Mat<const T> a, Mat<const T> b, Mat<T> c, std::size_t i0, std::size_t j0, T alpha,
                         bool accumulate) {
  using S = Simd<T>;
  constexpr std::size_t W = S::kWidth;
  const std::size_t k = a.cols;
  const std::size_t kw = k - k % W;
  typename S::Reg acc[MR][NR];
  for (int r = 0; r < MR; ++r)
    for (int q = 0; q < NR; ++q) acc[r][q] = S::Zero();
  for (std::size_t p = 0; p < kw; p += W) {
    typename S::Reg av[MR];
    for (int r = 0; r < MR; ++r) av[r] = S::Load(a.row(i0 + r) + p);
    for (int q = 0; q < NR; ++q) {
      const auto bv = S::Load(b.row(j0 + q) + p);
      for (int r = 0; r < MR; ++r) acc[r][q] = S::Fma(av[r], bv, acc[r][q]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    const T* ar = a.row(i0 + r);
    for (int q = 0; q < NR; ++q) {
      const T* bq = b.row(j0 + q);
      T s = S::Sum(acc[r][q]);
      for (std::size_t p = kw; p < k; ++p) s = S::FmaScalar(ar[p], bq[p], s);
      T& dst = c(i0 + r, j0 + q);
      dst = Finish(dst, s, alpha, accumulate);
    }
  }
}

template <typename T, int MR>
TOXQ_TARGET void NTRows(Mat<const T> a, Mat<const T> b, Mat<T> c, std::size_t i0, T alpha, bool accumulate) {
  constexpr int NR = 4;
  const std::size_t n = b.rows;
  std::size_t j = 0;
  for (; j + NR <= n; j += NR) NTBlock<T, MR, NR>(a, b, c, i0, j, alpha, accumulate);
  for (; j < n; ++j) NTBlock<T, MR, 1>(a, b, c, i0, j, alpha, accumulate);
}

template <typename T>
TOXQ_TARGET void GemmNTImpl(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  std::size_t i = 0;
  for (; i + 2 <= a.rows; i += 2) NTRows<T, 2>(a, b, c, i, alpha, accumulate);
  for (; i < a.rows; ++i) NTRows<T, 1>(a, b, c, i, alpha, accumulate);
}

// Shared body of NN and TN: c(i, j) = sum_p A(i, p) * b(p, j) where A(i, p)
// is a(i, p) for NN and a(p, i) for TN.
template <typename T, bool kTransA, int MR, int NV>
TOXQ_TARGET void NNBlock(Mat<const T> a, Mat<const T> b, Mat<T> c, std::size_t i0, std::size_t j0, T alpha,
                         bool accumulate) {
  using S = Simd<T>;
  constexpr std::size_t W = S::kWidth;
  const std::size_t kdim = kTransA ? a.rows : a.cols;
  typename S::Reg acc[MR][NV];
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < NV; ++v) acc[r][v] = S::Zero();
  for (std::size_t p = 0; p < kdim; ++p) {
    typename S::Reg bv[NV];
    const T* brow = b.row(p) + j0;
    for (int v = 0; v < NV; ++v) bv[v] = S::Load(brow + v * W);
    for (int r = 0; r < MR; ++r) {
      const auto av = S::Set1(kTransA ? a(p, i0 + r) : a(i0 + r, p));
      for (int v = 0; v < NV; ++v) acc[r][v] = S::Fma(av, bv[v], acc[r][v]);
    }
  }
  const auto valpha = S::Set1(alpha);
  for (int r = 0; r < MR; ++r) {
    T* crow = c.row(i0 + r) + j0;
    for (int v = 0; v < NV; ++v) {
      auto out = S::Mul(valpha, acc[r][v]);
      if (accumulate) out = S::Add(S::Load(crow + v * W), out);
      S::Store(crow + v * W, out);
    }
  }
}

template <typename T, bool kTransA>
TOXQ_TARGET void NNScalarColumn(Mat<const T> a, Mat<const T> b, Mat<T> c, std::size_t i, std::size_t j, T alpha,
                                bool accumulate) {
  using S = Simd<T>;
  const std::size_t kdim = kTransA ? a.rows : a.cols;
  T s = 0;
  for (std::size_t p = 0; p < kdim; ++p) s = S::FmaScalar(kTransA ? a(p, i) : a(i, p), b(p, j), s);
  T& dst = c(i, j);
  dst = Finish(dst, s, alpha, accumulate);
}

template <typename T, bool kTransA, int MR>
TOXQ_TARGET void NNRows(Mat<const T> a, Mat<const T> b, Mat<T> c, std::size_t i0, T alpha, bool accumulate) {
  constexpr std::size_t W = Simd<T>::kWidth;
  const std::size_t n = b.cols;
  std::size_t j = 0;
  for (; j + 2 * W <= n; j += 2 * W) NNBlock<T, kTransA, MR, 2>(a, b, c, i0, j, alpha, accumulate);
  for (; j + W <= n; j += W) NNBlock<T, kTransA, MR, 1>(a, b, c, i0, j, alpha, accumulate);
  for (; j < n; ++j) {
    for (int r = 0; r < MR; ++r) NNScalarColumn<T, kTransA>(a, b, c, i0 + r, j, alpha, accumulate);
  }
}

template <typename T, bool kTransA>
TOXQ_TARGET void GemmNNImpl(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  const std::size_t m = kTransA ? a.cols : a.rows;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) NNRows<T, kTransA, 4>(a, b, c, i, alpha, accumulate);
  for (; i < m; ++i) NNRows<T, kTransA, 1>(a, b, c, i, alpha, accumulate);
}

}  // namespace

#define TOXQ_DEFINE_AVX2(T)                                                                          \
  T Dot(const T* a, const T* b, std::size_t n) { return DotImpl(a, b, n); }                          \
  void Axpy(T alpha, const T* x, T* y, std::size_t n) { AxpyImpl(alpha, x, y, n); }                  \
  void GemmNT(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {                  \
    GemmNTImpl(a, b, c, alpha, accumulate);                                                          \
  }                                                                                                  \
  void GemmNN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {                  \
    GemmNNImpl<T, false>(a, b, c, alpha, accumulate);                                                \
  }                                                                                                  \
  void GemmTN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {                  \
    GemmNNImpl<T, true>(a, b, c, alpha, accumulate);                                                 \
  }

TOXQ_DEFINE_AVX2(float)
TOXQ_DEFINE_AVX2(double)

#undef TOXQ_DEFINE_AVX2

}  // namespace toxq::kernels::avx2
