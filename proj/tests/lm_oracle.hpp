// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// A deliberately plain transformer forward pass: nested vectors, scalar loops,
// no shared code with the library's kernels.

#pragma once

#include <cmath>
#include <vector>

#include "toxq/lm/model.hpp"
#include "toxq/lm/transformer.hpp"

namespace toxq::oracle {

using Matrix = std::vector<std::vector<double>>;

class PlainModel {
 public:
  PlainModel(const lm::ModelParams& p, const lm::LoraAdapter* a) : p_(p), a_(a) {}

  // T x V logits.
  Matrix Logits(const std::vector<lm::TokenId>& tokens) const {
    const auto& c = p_.config();
    const std::size_t T = tokens.size(), d = c.d_model;
    Matrix x(T, std::vector<double>(d));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        x[t][i] = At(p_.token_embedding() + tokens[t] * d + i) + At(p_.position_embedding() + t * d + i);
      }
    }
    for (std::size_t l = 0; l < static_cast<std::size_t>(c.n_layers); ++l) {
      const auto& L = p_.layer(l);
      const Matrix h = Norm(x, L.ln1_gain, L.ln1_bias);
      const Matrix q = Linear(h, L.q, l * 6 + 0), k = Linear(h, L.k, l * 6 + 1), v = Linear(h, L.v, l * 6 + 2);
      const std::size_t H = c.n_heads, dh = d / H;
      Matrix att(T, std::vector<double>(d, 0.0));
      for (std::size_t hd = 0; hd < H; ++hd) {
        for (std::size_t i = 0; i < T; ++i) {
          std::vector<double> w(i + 1);
          double mx = -1e300;
          for (std::size_t j = 0; j <= i; ++j) {
            double s = 0;
            for (std::size_t e = 0; e < dh; ++e) s += q[i][hd * dh + e] * k[j][hd * dh + e];
            w[j] = s / std::sqrt(static_cast<double>(dh));
            mx = std::max(mx, w[j]);
          }
          double z = 0;
          for (auto& wj : w) z += (wj = std::exp(wj - mx));
          for (std::size_t j = 0; j <= i; ++j) {
            for (std::size_t e = 0; e < dh; ++e) att[i][hd * dh + e] += w[j] / z * v[j][hd * dh + e];
          }
        }
      }
      const Matrix o = Linear(att, L.o, l * 6 + 3);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < d; ++i) x[t][i] += o[t][i];
      }
      Matrix f = Linear(Norm(x, L.ln2_gain, L.ln2_bias), L.fc1, l * 6 + 4);
      for (auto& row : f) {
        for (auto& u : row) u = 0.5 * u * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (u + 0.044715 * u * u * u)));
      }
      const Matrix g = Linear(f, L.fc2, l * 6 + 5);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < d; ++i) x[t][i] += g[t][i];
      }
    }
    return Linear(Norm(x, p_.final_gain(), p_.final_bias()), p_.head(), p_.linear_maps().size() - 1);
  }

  // Log-probabilities of targets[t] at every position with a target >= 0.
  std::vector<double> TargetLogProbs(const lm::PackedSequence& seq) const {
    const Matrix z = Logits(seq.inputs);
    std::vector<double> out;
    for (std::size_t t = 0; t < seq.targets.size(); ++t) {
      if (seq.targets[t] < 0) continue;
      double mx = -1e300, s = 0;
      for (double v : z[t]) mx = std::max(mx, v);
      for (double v : z[t]) s += std::exp(v - mx);
      out.push_back(z[t][seq.targets[t]] - mx - std::log(s));
    }
    return out;
  }

  double SequenceLogProb(const lm::PackedSequence& seq) const {
    double s = 0;
    for (double v : TargetLogProbs(seq)) s += v;
    return s;
  }

 private:
  double At(std::size_t i) const { return static_cast<double>(p_.data[i]); }

  Matrix Norm(const Matrix& x, std::size_t gain, std::size_t bias) const {
    Matrix y = x;
    for (auto& row : y) {
      double mu = 0, var = 0;
      for (double v : row) mu += v;
      mu /= static_cast<double>(row.size());
      for (double v : row) var += (v - mu) * (v - mu);
      var /= static_cast<double>(row.size());
      for (std::size_t i = 0; i < row.size(); ++i) {
        row[i] = (row[i] - mu) / std::sqrt(var + 1e-5) * At(gain + i) + At(bias + i);
      }
    }
    return y;
  }

  Matrix Linear(const Matrix& x, const lm::LinearMap& m, std::size_t target) const {
    Matrix y(x.size(), std::vector<double>(m.out));
    for (std::size_t t = 0; t < x.size(); ++t) {
      for (std::size_t o = 0; o < m.out; ++o) {
        double s = At(m.bias + o);
        for (std::size_t i = 0; i < m.in; ++i) s += At(m.weight + o * m.in + i) * x[t][i];
        y[t][o] = s;
      }
      if (a_ == nullptr) continue;
      const auto& lt = a_->targets()[target];
      const std::size_t r = a_->rank();
      std::vector<double> u(r, 0.0);
      for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < m.in; ++i) u[j] += x[t][i] * a_->data[lt.a + i * r + j];
      }
      for (std::size_t o = 0; o < m.out; ++o) {
        double s = 0;
        for (std::size_t j = 0; j < r; ++j) s += u[j] * a_->data[lt.b + j * m.out + o];
        y[t][o] += a_->alpha() / static_cast<double>(r) * s;
      }
    }
    return y;
  }

  const lm::ModelParams& p_;
  const lm::LoraAdapter* a_;
};

}  // namespace toxq::oracle
