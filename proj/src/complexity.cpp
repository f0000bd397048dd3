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

#include "shrinknas/complexity.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "shrinknas/cell_layout.hpp"
#include "shrinknas/error.hpp"
#include "shrinknas/supernet.hpp"

namespace shrinknas {

ComplexityReport complexity_report(const Genotype& genotype, std::size_t channels, std::size_t classes,
                                   std::size_t in_channels, std::size_t input_h, std::size_t input_w) {
  genotype.validate();
  if (input_h < 4 || input_w < 4) throw ConfigError("complexity: input resolution must be at least 4x4");
  const NetworkLayout layout =
      make_layout(genotype.kinds(), genotype.nodes, channels, in_channels, classes, input_h, input_w);

  ComplexityReport r;
  r.input_h = input_h;
  r.input_w = input_w;
  r.stem_params = stem_param_count(in_channels, channels);
  r.stem_flops = 2ULL * 9 * in_channels * channels * input_h * input_w;
  for (const GenotypeCell& gc : genotype.cells) {
    const CellLayout& cl = layout.cells[gc.k - 1];
    CellComplexity cc{gc.k, 0, 0, gc.edges.size()};
    if (cl.align_in1) {
      const std::size_t c = cl.in1_channels;
      cc.params += projection_param_count(c, c) + projection_norm_param_count(c);
      cc.flops += projection_flop_count(c, c, cl.in_h, cl.in_w);
    }
    for (const GenotypeEdge& e : gc.edges) {
      const std::size_t in = cl.edge_in_channels(e.from);
      const std::size_t stride = cl.edge_stride(e.from);
      cc.params += op_param_count(e.op, in, cl.width, stride) + op_norm_param_count(e.op, in, cl.width, stride);
      cc.flops += op_flop_count(e.op, in, cl.width, cl.out_h, cl.out_w, stride);
    }
    r.edge_count += cc.edges;
    r.cells.push_back(cc);
  }
  r.classifier_params = classifier_param_count(layout.classifier_in(), classes);
  r.classifier_flops = 2ULL * layout.classifier_in() * classes;

  r.params = r.stem_params + r.classifier_params;
  r.flops = r.stem_flops + r.classifier_flops;
  for (const CellComplexity& c : r.cells) {
    r.params += c.params;
    r.flops += c.flops;
  }
  return r;
}

std::size_t count_params(const Genotype& genotype, std::size_t channels, std::size_t classes,
                         std::size_t in_channels) {
  // Parameter counts do not depend on resolution.
  return complexity_report(genotype, channels, classes, in_channels, 32, 32).params;
}

std::uint64_t count_flops(const Genotype& genotype, std::size_t channels, std::size_t classes,
                          std::size_t in_channels, std::size_t input_h, std::size_t input_w) {
  return complexity_report(genotype, channels, classes, in_channels, input_h, input_w).flops;
}

std::string ComplexityReport::to_json() const {
  nlohmann::ordered_json j;
  j["params"] = params;
  j["flops"] = flops;
  j["input"] = {input_h, input_w};
  j["edges"] = edge_count;
  j["stem"] = {{"params", stem_params}, {"flops", stem_flops}};
  j["cells"] = nlohmann::ordered_json::array();
  for (const CellComplexity& c : cells) {
    j["cells"].push_back({{"k", c.k}, {"params", c.params}, {"flops", c.flops}, {"edges", c.edges}});
  }
  j["classifier"] = {{"params", classifier_params}, {"flops", classifier_flops}};
  return j.dump(2) + "\n";
}

std::string ComplexityReport::to_table() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %12s %14s %6s\n", "part", "params", "flops", "edges");
  os << line;
  std::snprintf(line, sizeof line, "%-12s %12zu %14llu %6s\n", "stem", stem_params,
                static_cast<unsigned long long>(stem_flops), "-");
  os << line;
  for (const CellComplexity& c : cells) {
    const std::string name = "cell" + std::to_string(c.k);
    std::snprintf(line, sizeof line, "%-12s %12zu %14llu %6zu\n", name.c_str(), c.params,
                  static_cast<unsigned long long>(c.flops), c.edges);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-12s %12zu %14llu %6s\n", "classifier", classifier_params,
                static_cast<unsigned long long>(classifier_flops), "-");
  os << line;
  std::snprintf(line, sizeof line, "%-12s %12zu %14llu %6zu\n", "total", params,
                static_cast<unsigned long long>(flops), edge_count);
  os << line;
  return os.str();
}

StructureStats structure_stats(const Genotype& genotype) {
  StructureStats s;
  std::set<std::vector<std::tuple<std::size_t, std::size_t, OperatorKind>>> seen;
  for (const GenotypeCell& c : genotype.cells) {
    std::vector<std::size_t> fan_in(genotype.nodes, 0);
    std::vector<std::tuple<std::size_t, std::size_t, OperatorKind>> key;
    for (const GenotypeEdge& e : c.edges) {
      if (e.to < fan_in.size()) ++fan_in[e.to];
      ++s.op_frequency[std::string(op_name(e.op))];
      key.emplace_back(e.from, e.to, e.op);
    }
    for (std::size_t j = 3; j < genotype.nodes; ++j) ++s.fan_in_histogram[fan_in[j]];
    std::ranges::sort(key);
    if (!seen.insert(std::move(key)).second) s.cells_unique = false;
  }
  return s;
}

std::string structure_stats_json(const StructureStats& stats) {
  nlohmann::ordered_json j;
  j["fan_in_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [fan_in, count] : stats.fan_in_histogram) j["fan_in_histogram"][std::to_string(fan_in)] = count;
  j["op_frequency"] = stats.op_frequency;
  j["cells_unique"] = stats.cells_unique;
  return j.dump(2) + "\n";
}

}  // namespace shrinknas
