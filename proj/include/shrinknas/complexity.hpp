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
#include <map>
#include <string>
#include <vector>

#include "shrinknas/genotype.hpp"

namespace shrinknas {

struct CellComplexity {
  std::size_t k = 0;
  std::size_t params = 0;
  std::uint64_t flops = 0;
  std::size_t edges = 0;
};

/// Params and FLOPs (2 x multiply-accumulates of convolutions and the linear
/// head, per sample). Norm, relu and additions are not counted as FLOPs.
struct ComplexityReport {
  std::size_t params = 0;
  std::uint64_t flops = 0;
  std::size_t stem_params = 0;
  std::uint64_t stem_flops = 0;
  std::size_t classifier_params = 0;
  std::uint64_t classifier_flops = 0;
  std::vector<CellComplexity> cells;
  std::size_t edge_count = 0;
  std::size_t input_h = 0, input_w = 0;

  std::string to_json() const;
  std::string to_table() const;
};

ComplexityReport complexity_report(const Genotype& genotype, std::size_t channels, std::size_t classes,
                                   std::size_t in_channels, std::size_t input_h, std::size_t input_w);

std::size_t count_params(const Genotype& genotype, std::size_t channels, std::size_t classes,
                         std::size_t in_channels = 3);
/// input_h and input_w must be at least 4.
std::uint64_t count_flops(const Genotype& genotype, std::size_t channels, std::size_t classes,
                          std::size_t in_channels, std::size_t input_h, std::size_t input_w);

struct StructureStats {
  std::map<std::size_t, std::size_t> fan_in_histogram;  // inputs per node -> node count
  std::map<std::string, std::size_t> op_frequency;
  bool cells_unique = true;
};

StructureStats structure_stats(const Genotype& genotype);
std::string structure_stats_json(const StructureStats& stats);

}  // namespace shrinknas
