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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shrinknas/supernet.hpp"
#include "shrinknas/tensor.hpp"

// Sparsity entropy of contribution-weight distributions (natural log).

namespace shrinknas {

/// -sum w log w over a probability vector, with 0 log 0 = 0. Throws
/// ConfigError on a negative weight or when the weights do not sum to 1
/// (1e-9).
double node_entropy(std::span<const double> weights);

/// Sum of node entropies over the computing nodes of cell k.
double cell_entropy(const ArchParams& arch, std::size_t k);
/// Entropy of every cell, index k-1.
std::vector<double> cell_entropies(const ArchParams& arch);
double total_entropy(const ArchParams& arch);

/// Entropy of softmax(logits) restricted to the entries whose mask is set.
double masked_softmax_entropy(std::span<const double> logits, std::span<const std::uint8_t> mask);

/// Upper bound sum_j log(alive entries at node j) for cell k.
double cell_entropy_bound(const ArchParams& arch, std::size_t k);

/// dH_j / d alpha_e = -a_e (log a_e + H_j) for alive entries, 0 for pruned.
/// Returned per computing node of cell k, in the layout of alpha(k, j).
std::vector<std::vector<double>> entropy_grad_analytic(const ArchParams& arch, std::size_t k);
/// Same formula for a single weight vector.
std::vector<double> node_entropy_grad(std::span<const double> weights);

/// H(softmax(alpha[alive])) recorded on the active tape. Same value as
/// node_entropy(contribution_weights(k, j)).
Tensor node_entropy_tensor(const ArchParams& arch, std::size_t k, std::size_t j);
Tensor cell_entropy_tensor(const ArchParams& arch, std::size_t k);

/// Per-step entropy budget: initial_total / (L * steps_per_epoch * T_search * R_init).
double expected_entropy_reduction(double initial_total_entropy, std::size_t cells, std::size_t steps_per_epoch,
                                  std::size_t t_search, std::size_t r_init);

/// lambda = (dE - eta |gH| |gCE| cos) / (eta |gH|^2), i.e. the coefficient for
/// which one gradient step of size eta on CE + lambda H lowers H by dE to
/// first order.
double lambda_exact(double delta_e, double eta, std::span<const double> grad_h, std::span<const double> grad_ce);

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace shrinknas
