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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shrinknas/cell_layout.hpp"
#include "shrinknas/operator_space.hpp"
#include "shrinknas/random.hpp"
#include "shrinknas/tensor.hpp"

namespace shrinknas {

struct SupernetConfig {
  std::size_t cells = 4;   // L
  std::size_t nodes = 5;   // N, including the two inputs and the output node
  OperatorSpace space = OperatorSpace::preset(2);
  std::size_t channels = 8;
  std::size_t classes = 4;
  std::size_t in_channels = 3;
  std::uint64_t seed = 0;
};

/// Value copy of all architectural parameters and alive masks.
struct ArchSnapshot {
  std::string label;
  std::size_t cells = 0;
  std::size_t nodes = 0;
  std::size_t ops = 0;
  /// One entry per (cell, computing node) in (k, j) order; each of length (j-1)*ops.
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<std::uint8_t>> alive;

  std::size_t alive_count() const;
  /// True when every entry alive here is also alive in `other`.
  bool alive_subset_of(const ArchSnapshot& other) const;
};

/// Cell-unique architectural parameters alpha[k][j][i][o] with alive masks.
///
/// Indices follow the cell DAG: k in [1, L], computing node j in [3, N-1],
/// predecessor i in [1, j-1], operator o in [0, |O|). Each (k, j) block is one
/// trainable 1-D tensor with entries ordered by (i, o). Pruned entries are
/// excluded from every softmax.
class ArchParams {
 public:
  ArchParams() = default;
  ArchParams(std::size_t cells, std::size_t nodes, std::size_t ops);

  std::size_t cells() const { return cells_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t ops() const { return ops_; }

  /// Number of (i, o) entries feeding node j.
  std::size_t node_entries(std::size_t j) const { return (j - 1) * ops_; }
  std::size_t entry_index(std::size_t i, std::size_t o) const { return (i - 1) * ops_ + o; }
  /// Total alpha scalars over all cells.
  std::size_t entry_count() const;
  std::size_t alive_count() const;

  Parameter& alpha(std::size_t k, std::size_t j);
  const Parameter& alpha(std::size_t k, std::size_t j) const;
  std::span<const std::uint8_t> alive(std::size_t k, std::size_t j) const;
  std::span<std::uint8_t> alive_mut(std::size_t k, std::size_t j);
  bool is_alive(std::size_t k, std::size_t i, std::size_t j, std::size_t o) const;
  std::vector<std::size_t> alive_indices(std::size_t k, std::size_t j) const;

  /// Node-wise contribution weights: softmax over all alive (i, o) entries of
  /// node j jointly; pruned entries are 0. Throws DeadNodeError when nothing
  /// is alive.
  std::vector<double> contribution_weights(std::size_t k, std::size_t j) const;
  /// Edge-wise weights: softmax over the alive operators of edge (i, j) only.
  /// Returns |O| values, 0 for pruned operators; all zeros if the edge has no
  /// alive operator.
  std::vector<double> edgewise_weights(std::size_t k, std::size_t i, std::size_t j) const;

  std::vector<Parameter*> parameters();

  ArchSnapshot snapshot(std::string label = {}) const;
  void restore(const ArchSnapshot& snap);

 private:
  std::size_t slot(std::size_t k, std::size_t j) const;

  std::size_t cells_ = 0, nodes_ = 0, ops_ = 0;
  std::vector<Parameter> alpha_;
  std::vector<std::vector<std::uint8_t>> alive_;
};

/// A mixed edge (i -> j): one operator instance per kind of the space.
struct MixedEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<OperatorInstance> ops;
};

/// Weight-shared super-network: stem, L cells of mixed edges, classifier.
class SuperNetwork {
 public:
  explicit SuperNetwork(const SupernetConfig& config);

  /// logits [B, classes]; records on the active tape, if any.
  Tensor forward(const Tensor& batch) const;

  ArchParams& arch() { return arch_; }
  const ArchParams& arch() const { return arch_; }
  const SupernetConfig& config() const { return config_; }
  const OperatorSpace& space() const { return config_.space; }
  const NetworkLayout& layout() const { return layout_; }

  /// All model parameters (stem, alignments, every edge operator, classifier),
  /// including those of pruned operators.
  std::vector<Parameter*> theta();
  std::size_t theta_size() const;

  /// Redraws theta from its initialization distribution; alpha and the alive
  /// mask are untouched.
  void reinit_theta();

  const MixedEdge& edge(std::size_t k, std::size_t i, std::size_t j) const;
  MixedEdge& edge(std::size_t k, std::size_t i, std::size_t j);

  Rng& rng() { return rng_; }

 private:
  struct Cell {
    CellLayout layout;
    std::optional<OperatorInstance> align;
    std::vector<std::vector<MixedEdge>> edges;  // edges[j - 3][i - 1]
  };

  Tensor forward_cell(const Cell& cell, const Tensor& in1, const Tensor& in2) const;

  SupernetConfig config_;
  NetworkLayout layout_;
  ArchParams arch_;
  Rng rng_;
  Parameter stem_weight_, stem_gain_, stem_bias_;
  std::vector<Cell> cells_;
  Parameter fc_weight_, fc_bias_;
};

/// Validates dimensions (L >= 3, N >= 4) and builds a fresh super-network
/// with alpha = 0 and everything alive.
SuperNetwork init_supernet(const SupernetConfig& config);

/// Stem conv + norm, global-average-pool + linear head; shared with the
/// discrete network so both count the same way.
std::size_t stem_param_count(std::size_t in_channels, std::size_t channels);
std::size_t classifier_param_count(std::size_t features, std::size_t classes);

}  // namespace shrinknas
