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
#include <string>
#include <vector>

#include "shrinknas/cell_layout.hpp"
#include "shrinknas/operator_space.hpp"

namespace shrinknas {

struct GenotypeEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  OperatorKind op = OperatorKind::SkipConnect;

  bool operator==(const GenotypeEdge&) const = default;
};

struct GenotypeCell {
  std::size_t k = 0;
  CellKind kind = CellKind::Normal;
  std::vector<GenotypeEdge> edges;  // sorted by (to, from, op)

  bool operator==(const GenotypeCell&) const = default;
};

/// A discrete architecture. Cells may differ from one another.
struct Genotype {
  std::string space;  // operator space id, e.g. "O2"
  std::size_t nodes = 0;
  std::vector<GenotypeCell> cells;

  bool operator==(const Genotype&) const = default;

  /// Throws ConfigError unless every edge is a forward DAG edge inside the
  /// cell and every computing node has at least one input.
  void validate() const;
  std::size_t edge_count() const;
  std::vector<CellKind> kinds() const;

  std::string to_json() const;
  static Genotype from_json(const std::string& text);
  /// Graphviz digraph with one cluster per cell; edge labels are op names.
  std::string to_dot() const;
};

Genotype load_genotype(const std::string& path);
void save_genotype(const Genotype& g, const std::string& path);

}  // namespace shrinknas
