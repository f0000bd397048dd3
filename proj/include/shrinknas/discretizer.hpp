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
#include <span>
#include <vector>

#include "shrinknas/genotype.hpp"
#include "shrinknas/supernet.hpp"

namespace shrinknas {

struct PruneEvent {
  std::size_t cell = 0;
  std::size_t node = 0;
  std::size_t entry = 0;  // index into alpha(cell, node)
  double weight = 0.0;
};

struct PruneLog {
  std::vector<PruneEvent> pruned;
  /// Entries below epsilon kept alive because they were their node's last.
  std::vector<PruneEvent> guarded;
};

/// Entries to drop from one node: alive and weight < epsilon (strict). If that
/// would empty the node, the largest remaining weight (lowest index on ties)
/// is kept and reported through `guarded`.
std::vector<std::size_t> threshold_prune(std::span<const double> weights, std::span<const std::uint8_t> alive,
                                         double epsilon, std::size_t* guarded = nullptr);

/// Threshold pruning of every computing node in place. epsilon must lie in
/// (0, 1/|O|).
PruneLog dynamic_discretize(ArchParams& arch, double epsilon);

/// Alive entries as a genotype, ordered by (k, j, i, o).
Genotype extract_genotype(const ArchParams& arch, std::span<const CellKind> kinds, const OperatorSpace& space);
Genotype extract_genotype(const SuperNetwork& net);

/// Indices of the two largest values; ties go to the lower index. Needs >= 2.
std::pair<std::size_t, std::size_t> top2(std::span<const double> values);
/// Index of the largest value; ties go to the lower index.
std::size_t argmax(std::span<const double> values);

/// Classic rule: per edge keep the argmax operator of the edge-wise softmax,
/// per node keep the two predecessors whose retained operator weighs most.
Genotype constrained_discretize(const ArchParams& arch, std::span<const CellKind> kinds, const OperatorSpace& space);
Genotype constrained_discretize(const SuperNetwork& net);

}  // namespace shrinknas
