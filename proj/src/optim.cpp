// Copyright 2026 The shrinknas Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shrinknas/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "shrinknas/error.hpp"

namespace shrinknas {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& h, std::span<const std::uint8_t> mask) {
  const std::size_t n = params.size();
  if (grads.size() != n) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(n) + " parameters");
  }
  if (!mask.empty() && mask.size() != n) throw ShapeError("adam_step: mask size mismatch");
  if (state.m.size() != n || state.v.size() != n) {
    if (state.step != 0 || !state.m.empty()) {
      throw ShapeError("adam_step: optimizer state does not match parameter shape");
    }
    state.reset(n);
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    const double g = grads[i] + h.weight_decay * params[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamHyper hyper)
    : params_(std::move(params)), states_(params_.size()), hyper_(hyper) {
  reset();
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i]->tensor;
    if (!t.has_grad()) continue;
    adam_step(t.data(), t.grad(), states_[i], hyper_);
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->tensor.clear_grad();
}

void Adam::reset() {
  for (std::size_t i = 0; i < params_.size(); ++i) states_[i].reset(params_[i]->tensor.numel());
}

Sgd::Sgd(std::vector<Parameter*> params, double lr, double momentum, double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params_.size());
  for (Parameter* p : params_) velocity_.emplace_back(p->tensor.numel(), 0.0);
}

void Sgd::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& t = params_[k]->tensor;
    if (!t.has_grad()) continue;
    auto p = t.data();
    auto g = t.grad();
    auto& vel = velocity_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = g[i] + weight_decay_ * p[i];
      vel[i] = momentum_ * vel[i] + d;
      p[i] -= lr_ * vel[i];
    }
  }
}

void Sgd::zero_grad() {
  for (Parameter* p : params_) p->tensor.clear_grad();
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      if (!p->tensor.has_grad()) continue;
      for (double& g : p->tensor.grad_mut()) g *= s;
    }
  }
  return norm;
}

double cosine_lr(double base, std::int64_t t, std::int64_t total) {
  if (total <= 0 || t >= total) return 0.0;
  if (t <= 0) return base;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace shrinknas
