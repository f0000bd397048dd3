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

#include "shrinknas/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"

namespace shrinknas {

double node_entropy(std::span<const double> weights) {
  double total = 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("node_entropy: negative weight " + std::to_string(w));
    total += w;
    if (w > 0.0) h -= w * std::log(w);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("node_entropy: weights sum to " + std::to_string(total) + ", expected 1");
  }
  return h;
}

std::vector<double> node_entropy_grad(std::span<const double> weights) {
  node_entropy(weights);  // validates
  // log a_e + H written as sum_m a_m (log a_e - log a_m), which is exactly 0
  // at a uniform distribution.
  std::vector<double> logw(weights.size(), 0.0);
  for (std::size_t e = 0; e < weights.size(); ++e)
    if (weights[e] > 0.0) logw[e] = std::log(weights[e]);
  std::vector<double> g(weights.size(), 0.0);
  for (std::size_t e = 0; e < weights.size(); ++e) {
    if (weights[e] <= 0.0) continue;
    double inner = 0.0;
    for (std::size_t m = 0; m < weights.size(); ++m)
      if (weights[m] > 0.0) inner += weights[m] * (logw[e] - logw[m]);
    g[e] = -weights[e] * inner;
  }
  return g;
}

double masked_softmax_entropy(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw ShapeError("masked_softmax_entropy: logits and mask differ in length");
  double mx = -INFINITY;
  for (std::size_t e = 0; e < logits.size(); ++e)
    if (mask[e]) mx = std::max(mx, logits[e]);
  if (mx == -INFINITY) throw DeadNodeError("masked_softmax_entropy: no alive entry");
  std::vector<double> w(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t e = 0; e < logits.size(); ++e) {
    if (!mask[e]) continue;
    w[e] = std::exp(logits[e] - mx);
    z += w[e];
  }
  for (double& v : w) v /= z;
  return node_entropy(w);
}

double cell_entropy(const ArchParams& arch, std::size_t k) {
  double h = 0.0;
  for (std::size_t j = 3; j < arch.nodes(); ++j) h += node_entropy(arch.contribution_weights(k, j));
  return h;
}

std::vector<double> cell_entropies(const ArchParams& arch) {
  std::vector<double> out;
  for (std::size_t k = 1; k <= arch.cells(); ++k) out.push_back(cell_entropy(arch, k));
  return out;
}

double total_entropy(const ArchParams& arch) {
  double h = 0.0;
  for (double c : cell_entropies(arch)) h += c;
  return h;
}

double cell_entropy_bound(const ArchParams& arch, std::size_t k) {
  double b = 0.0;
  for (std::size_t j = 3; j < arch.nodes(); ++j) {
    b += std::log(static_cast<double>(arch.alive_indices(k, j).size()));
  }
  return b;
}

std::vector<std::vector<double>> entropy_grad_analytic(const ArchParams& arch, std::size_t k) {
  std::vector<std::vector<double>> out;
  for (std::size_t j = 3; j < arch.nodes(); ++j) {
    std::vector<double> w = arch.contribution_weights(k, j);
    std::vector<double> g = node_entropy_grad(w);
    auto mask = arch.alive(k, j);
    for (std::size_t e = 0; e < g.size(); ++e)
      if (!mask[e]) g[e] = 0.0;
    out.push_back(std::move(g));
  }
  return out;
}

Tensor node_entropy_tensor(const ArchParams& arch, std::size_t k, std::size_t j) {
  const std::vector<std::size_t> alive = arch.alive_indices(k, j);
  if (alive.empty()) {
    throw DeadNodeError("dead node: cell " + std::to_string(k) + ", node " + std::to_string(j));
  }
  Tensor logits = ops::gather(arch.alpha(k, j).tensor, alive);
  Tensor p = ops::softmax(logits, 0);
  Tensor logp = ops::log_softmax(logits, 0);
  return ops::scale(ops::sum(ops::mul(p, logp)), -1.0);
}

Tensor cell_entropy_tensor(const ArchParams& arch, std::size_t k) {
  Tensor h = node_entropy_tensor(arch, k, 3);
  for (std::size_t j = 4; j < arch.nodes(); ++j) h = ops::add(h, node_entropy_tensor(arch, k, j));
  return h;
}

double expected_entropy_reduction(double initial_total_entropy, std::size_t cells, std::size_t steps_per_epoch,
                                  std::size_t t_search, std::size_t r_init) {
  const std::size_t denom = cells * steps_per_epoch * t_search * r_init;
  if (denom == 0) {
    throw ConfigError("expected_entropy_reduction: L, steps per epoch, T_search and R_init must all be positive");
  }
  return initial_total_entropy / static_cast<double>(denom);
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double lambda_exact(double delta_e, double eta, std::span<const double> grad_h, std::span<const double> grad_ce) {
  const double nh = l2_norm(grad_h);
  if (nh == 0.0) throw NumericalError("lambda_exact: entropy gradient is zero");
  if (eta <= 0.0) throw ConfigError("lambda_exact: eta must be positive");
  // |gH| |gCE| cos(theta) is just the inner product.
  return (delta_e - eta * dot(grad_h, grad_ce)) / (eta * nh * nh);
}

}  // namespace shrinknas
