// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace toxq {

#if defined(TOXQ_REAL_FLOAT)
using Real = float;
#else
using Real = double;
#endif

inline constexpr bool kRealIsDouble = sizeof(Real) == sizeof(double);

}  // namespace toxq
