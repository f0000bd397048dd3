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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shrinknas/tensor.hpp"

namespace shrinknas {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty folded into the gradient (g += wd * p) before the moments.
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

/// One bias-corrected Adam update of `params` in place. Entries whose `mask`
/// value is zero are frozen (neither the value nor its moments change); an
/// empty mask updates everything.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper, std::span<const std::uint8_t> mask = {});

/// Adam over a fixed list of parameters. Parameters that received no gradient
/// in the last backward pass are skipped.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamHyper hyper);

  void step();
  void zero_grad();
  /// Zeroes all moments and step counters.
  void reset();

  const AdamHyper& hyper() const { return hyper_; }
  std::vector<AdamState>& states() { return states_; }
  const std::vector<AdamState>& states() const { return states_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamState> states_;
  AdamHyper hyper_;
};

/// SGD with classical momentum and L2 weight decay.
class Sgd {
 public:
  Sgd(std::vector<Parameter*> params, double lr, double momentum, double weight_decay);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  void step();
  void zero_grad();

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> velocity_;
  double lr_;
  double momentum_;
  double weight_decay_;
};

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

/// base * (1 + cos(pi * t / total)) / 2, exactly 0 at t >= total.
double cosine_lr(double base, std::int64_t t, std::int64_t total);

}  // namespace shrinknas
