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

#include "shrinknas/discretizer.hpp"

#include <string>

#include "shrinknas/error.hpp"

namespace shrinknas {

std::vector<std::size_t> threshold_prune(std::span<const double> weights, std::span<const std::uint8_t> alive,
                                         double epsilon, std::size_t* guarded) {
  if (weights.size() != alive.size()) throw ShapeError("threshold_prune: weights and mask differ in length");
  std::vector<std::size_t> drop;
  std::size_t survivors = 0;
  std::size_t best = weights.size();
  for (std::size_t e = 0; e < weights.size(); ++e) {
    if (!alive[e]) continue;
    if (best == weights.size() || weights[e] > weights[best]) best = e;
    if (weights[e] < epsilon) {
      drop.push_back(e);
    } else {
      ++survivors;
    }
  }
  if (guarded) *guarded = weights.size();
  if (survivors == 0 && !drop.empty()) {
    std::erase(drop, best);
    if (guarded) *guarded = best;
  }
  return drop;
}

PruneLog dynamic_discretize(ArchParams& arch, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / static_cast<double>(arch.ops()))) {
    throw ConfigError("epsilon must lie in (0, 1/|O|), got " + std::to_string(epsilon));
  }
  PruneLog log;
  for (std::size_t k = 1; k <= arch.cells(); ++k) {
    for (std::size_t j = 3; j < arch.nodes(); ++j) {
      const std::vector<double> w = arch.contribution_weights(k, j);
      std::size_t guarded = 0;
      const auto drop = threshold_prune(w, arch.alive(k, j), epsilon, &guarded);
      auto mask = arch.alive_mut(k, j);
      for (std::size_t e : drop) {
        mask[e] = 0;
        log.pruned.push_back({k, j, e, w[e]});
      }
      if (guarded < w.size()) log.guarded.push_back({k, j, guarded, w[guarded]});
    }
  }
  return log;
}

Genotype extract_genotype(const ArchParams& arch, std::span<const CellKind> kinds, const OperatorSpace& space) {
  if (kinds.size() != arch.cells() || space.size() != arch.ops()) {
    throw ConfigError("extract_genotype: cell kinds or operator space do not match the architecture");
  }
  Genotype g;
  g.space = space.id();
  g.nodes = arch.nodes();
  for (std::size_t k = 1; k <= arch.cells(); ++k) {
    GenotypeCell cell{k, kinds[k - 1], {}};
    for (std::size_t j = 3; j < arch.nodes(); ++j) {
      const auto alive = arch.alive_indices(k, j);
      if (alive.empty()) {
        throw DeadNodeError("dead node: cell " + std::to_string(k) + ", node " + std::to_string(j));
      }
      for (std::size_t e : alive) cell.edges.push_back({e / arch.ops() + 1, j, space[e % arch.ops()]});
    }
    g.cells.push_back(std::move(cell));
  }
  g.validate();
  return g;
}

Genotype extract_genotype(const SuperNetwork& net) {
  return extract_genotype(net.arch(), default_cell_kinds(net.config().cells), net.space());
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ConfigError("argmax of an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::pair<std::size_t, std::size_t> top2(std::span<const double> values) {
  if (values.size() < 2) throw ConfigError("top2 needs at least two candidates");
  const std::size_t first = argmax(values);
  std::size_t second = first == 0 ? 1 : 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != first && values[i] > values[second]) second = i;
  }
  return first < second ? std::pair{first, second} : std::pair{second, first};
}

Genotype constrained_discretize(const ArchParams& arch, std::span<const CellKind> kinds, const OperatorSpace& space) {
  if (kinds.size() != arch.cells() || space.size() != arch.ops()) {
    throw ConfigError("constrained_discretize: cell kinds or operator space do not match the architecture");
  }
  Genotype g;
  g.space = space.id();
  g.nodes = arch.nodes();
  for (std::size_t k = 1; k <= arch.cells(); ++k) {
    GenotypeCell cell{k, kinds[k - 1], {}};
    for (std::size_t j = 3; j < arch.nodes(); ++j) {
      std::vector<std::size_t> preds;
      std::vector<double> strength;
      std::vector<std::size_t> best_op;
      for (std::size_t i = 1; i < j; ++i) {
        const std::vector<double> w = arch.edgewise_weights(k, i, j);
        const std::size_t o = argmax(w);
        if (w[o] == 0.0) continue;  // every operator on this edge is pruned
        preds.push_back(i);
        strength.push_back(w[o]);
        best_op.push_back(o);
      }
      if (preds.size() < 2) {
        throw ConfigError("constrained_discretize: node " + std::to_string(j) + " of cell " + std::to_string(k) +
                          " has fewer than two live predecessors");
      }
      const auto [a, b] = top2(strength);
      cell.edges.push_back({preds[a], j, space[best_op[a]]});
      cell.edges.push_back({preds[b], j, space[best_op[b]]});
    }
    g.cells.push_back(std::move(cell));
  }
  g.validate();
  return g;
}

Genotype constrained_discretize(const SuperNetwork& net) {
  return constrained_discretize(net.arch(), default_cell_kinds(net.config().cells), net.space());
}

}  // namespace shrinknas
