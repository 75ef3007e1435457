// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "toxq/common/errors.hpp"
#include "variants.hpp"

namespace toxq::kernels {

bool CpuHasAvx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Isa InitialIsa() {
  if (const char* env = std::getenv("TOXQ_KERNELS")) {
    const std::string_view v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && CpuHasAvx2()) return Isa::kAvx2;
  }
  return DetectIsa();
}

std::atomic<Isa>& Active() {
  static std::atomic<Isa> isa{InitialIsa()};
  return isa;
}

}  // namespace

Isa DetectIsa() { return CpuHasAvx2() ? Isa::kAvx2 : Isa::kScalar; }

Isa ActiveIsa() { return Active().load(std::memory_order_relaxed); }

void SetIsa(Isa isa) {
  if (isa == Isa::kAvx2 && !CpuHasAvx2()) throw ContractError("kernels: AVX2/FMA not supported on this CPU");
  Active().store(isa, std::memory_order_relaxed);
}

const char* IsaName(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

#define TOXQ_DISPATCH(NAME, ...)                       \
  if (ActiveIsa() == Isa::kAvx2) return avx2::NAME(__VA_ARGS__); \
  return scalar::NAME(__VA_ARGS__)

template <typename T>
T Dot(const T* a, const T* b, std::size_t n) {
  TOXQ_DISPATCH(Dot, a, b, n);
}

template <typename T>
void Axpy(T alpha, const T* x, T* y, std::size_t n) {
  TOXQ_DISPATCH(Axpy, alpha, x, y, n);
}

template <typename T>
void GemmNT(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  TOXQ_DISPATCH(GemmNT, a, b, c, alpha, accumulate);
}

template <typename T>
void GemmNN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  TOXQ_DISPATCH(GemmNN, a, b, c, alpha, accumulate);
}

template <typename T>
void GemmTN(Mat<const T> a, Mat<const T> b, Mat<T> c, T alpha, bool accumulate) {
  TOXQ_DISPATCH(GemmTN, a, b, c, alpha, accumulate);
}

#undef TOXQ_DISPATCH

template float Dot<float>(const float*, const float*, std::size_t);
template double Dot<double>(const double*, const double*, std::size_t);
template void Axpy<float>(float, const float*, float*, std::size_t);
template void Axpy<double>(double, const double*, double*, std::size_t);
template void GemmNT<float>(Mat<const float>, Mat<const float>, Mat<float>, float, bool);
template void GemmNT<double>(Mat<const double>, Mat<const double>, Mat<double>, double, bool);
template void GemmNN<float>(Mat<const float>, Mat<const float>, Mat<float>, float, bool);
template void GemmNN<double>(Mat<const double>, Mat<const double>, Mat<double>, double, bool);
template void GemmTN<float>(Mat<const float>, Mat<const float>, Mat<float>, float, bool);
template void GemmTN<double>(Mat<const double>, Mat<const double>, Mat<double>, double, bool);

}  // namespace toxq::kernels
