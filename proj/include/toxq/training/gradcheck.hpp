// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "toxq/training/losses.hpp"

namespace toxq::training {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor): the floor keeps coordinates whose true
// gradient is ~0 from dominating through rounding noise.
double RelativeError(double analytic, double numeric, double floor = 1e-6);

// Central differences (f(x + eps) - f(x - eps)) / (2 eps) for every
// coordinate of x, compared with `analytic`. x is restored on return.
GradCheckResult GradCheck(const std::function<double()>& loss, std::span<Real> x, std::span<const Real> analytic,
                          double epsilon = 1e-5, double floor = 1e-6);

enum class Objective { kSft, kDpo, kCombined };

// Checks the adapter gradient of one objective on `batch`. For the preference
// objectives the reference values of `pairs` must be filled.
GradCheckResult AdapterGradCheck(Objective objective, const lm::ModelParams& params, lm::LoraAdapter& adapter,
                                 std::span<const PackedSequence> sft_batch, std::span<const PreferencePair> pairs,
                                 double beta, double gamma, double epsilon = 1e-5);

}  // namespace toxq::training
