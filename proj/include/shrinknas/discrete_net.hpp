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
#include <vector>

#include "shrinknas/cell_layout.hpp"
#include "shrinknas/genotype.hpp"
#include "shrinknas/operator_space.hpp"
#include "shrinknas/random.hpp"
#include "shrinknas/tensor.hpp"

namespace shrinknas {

/// Trainable network built from a genotype. Computing nodes sum their retained
/// operators with coefficient 1. Stem, alignment and classifier match the
/// super-network, and so do parameter ids.
class DiscreteNetwork {
 public:
  DiscreteNetwork(const Genotype& genotype, std::size_t channels, std::size_t classes, std::size_t in_channels,
                  std::uint64_t seed);

  Tensor forward(const Tensor& batch) const;

  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;
  const Genotype& genotype() const { return genotype_; }
  const NetworkLayout& layout() const { return layout_; }

 private:
  struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    OperatorInstance op;
  };
  struct Cell {
    CellLayout layout;
    std::optional<OperatorInstance> align;
    std::vector<Edge> edges;
  };

  Genotype genotype_;
  NetworkLayout layout_;
  Rng rng_;
  Parameter stem_weight_, stem_gain_, stem_bias_;
  std::vector<Cell> cells_;
  Parameter fc_weight_, fc_bias_;
};

DiscreteNetwork rebuild_discrete(const Genotype& genotype, std::size_t channels, std::size_t classes,
                                 std::size_t in_channels = 3, std::uint64_t seed = 0);

}  // namespace shrinknas
