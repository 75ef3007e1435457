// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/training/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "toxq/common/errors.hpp"

namespace toxq::training {

double RelativeError(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult GradCheck(const std::function<double()>& loss, std::span<Real> x, std::span<const Real> analytic,
                          double epsilon, double floor) {
  if (x.size() != analytic.size()) throw ContractError("grad_check: gradient size mismatch");
  GradCheckResult r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real saved = x[i];
    x[i] = static_cast<Real>(saved + epsilon);
    const double up = loss();
    x[i] = static_cast<Real>(saved - epsilon);
    const double down = loss();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = RelativeError(static_cast<double>(analytic[i]), numeric, floor);
    ++r.checked;
    if (r.checked == 1 || err > r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_index = i;
      r.analytic = static_cast<double>(analytic[i]);
      r.numeric = numeric;
    }
  }
  return r;
}

GradCheckResult AdapterGradCheck(Objective objective, const lm::ModelParams& params, lm::LoraAdapter& adapter,
                                 std::span<const PackedSequence> sft_batch, std::span<const PreferencePair> pairs,
                                 double beta, double gamma, double epsilon) {
  auto evaluate = [&](Gradients* g) {
    switch (objective) {
      case Objective::kSft:
        return SftLoss(params, &adapter, sft_batch, g).loss;
      case Objective::kDpo:
        return DpoLoss(params, &adapter, pairs, beta, g).loss;
      case Objective::kCombined:
        return CombinedLoss(params, &adapter, pairs, beta, gamma, g).loss;
    }
    return 0.0;
  };
  Gradients g;
  g.adapter.assign(adapter.data.size(), Real{0});
  evaluate(&g);
  return GradCheck([&] { return evaluate(nullptr); }, adapter.data, g.adapter, epsilon);
}

}  // namespace toxq::training
