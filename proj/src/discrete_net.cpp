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

#include "shrinknas/discrete_net.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"

namespace shrinknas {

DiscreteNetwork::DiscreteNetwork(const Genotype& genotype, std::size_t channels, std::size_t classes,
                                 std::size_t in_channels, std::uint64_t seed)
    : genotype_(genotype), rng_(seed) {
  genotype_.validate();
  const std::vector<CellKind> kinds = genotype_.kinds();
  layout_ = make_layout(kinds, genotype_.nodes, channels, in_channels, classes);

  stem_weight_ = {"stem.conv", Tensor::zeros({channels, in_channels, 3, 3}, true)};
  stem_gain_ = {"stem.gain", Tensor::full({channels}, 1.0, true)};
  stem_bias_ = {"stem.bias", Tensor::zeros({channels}, true)};
  init_fan_in_uniform(stem_weight_.tensor, in_channels * 9, rng_);

  for (const GenotypeCell& gc : genotype_.cells) {
    const CellLayout& cl = layout_.cells[gc.k - 1];
    const std::string prefix = "cell" + std::to_string(cl.index);
    Cell cell{cl, std::nullopt, {}};
    if (cl.align_in1) {
      cell.align = build_projection(cl.in1_channels, cl.in1_channels, cl.align_stride, rng_,
                                  prefix + ".align");
    }
    std::vector<GenotypeEdge> edges = gc.edges;
    std::ranges::sort(edges, [](const GenotypeEdge& a, const GenotypeEdge& b) {
      return std::tie(a.to, a.from, a.op) < std::tie(b.to, b.from, b.op);
    });
    for (const GenotypeEdge& e : edges) {
      cell.edges.push_back({e.from, e.to,
                            build_operator(e.op, cl.edge_in_channels(e.from), cl.width, cl.edge_stride(e.from), rng_,
                                           prefix + ".n" + std::to_string(e.from) + "_" + std::to_string(e.to) +
                                               "." + std::string(op_name(e.op)))});
    }
    cells_.push_back(std::move(cell));
  }
  const std::size_t features = layout_.classifier_in();
  fc_weight_ = {"classifier.weight", Tensor::zeros({classes, features}, true)};
  fc_bias_ = {"classifier.bias", Tensor::zeros({classes}, true)};
  init_fan_in_uniform(fc_weight_.tensor, features, rng_);
  init_fan_in_uniform(fc_bias_.tensor, features, rng_);
}

std::vector<Parameter*> DiscreteNetwork::parameters() {
  std::vector<Parameter*> out{&stem_weight_, &stem_gain_, &stem_bias_};
  auto add_op = [&out](OperatorInstance& op) {
    for (Parameter& p : op.parameters) out.push_back(&p);
    for (Parameter& p : op.norm_parameters) out.push_back(&p);
  };
  for (Cell& cell : cells_) {
    if (cell.align) add_op(*cell.align);
    for (Edge& e : cell.edges) add_op(e.op);
  }
  out.push_back(&fc_weight_);
  out.push_back(&fc_bias_);
  return out;
}

std::size_t DiscreteNetwork::parameter_count() const {
  std::size_t n = 0;
  for (Parameter* p : const_cast<DiscreteNetwork*>(this)->parameters()) n += p->tensor.numel();
  return n;
}

Tensor DiscreteNetwork::forward(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.dim(1) != layout_.in_channels) {
    throw ShapeError("discrete network: expected NCHW input with " + std::to_string(layout_.in_channels) +
                     " channels (dim 1), got " + shape_str(batch.shape()));
  }
  Tensor stem = ops::conv2d(batch, stem_weight_.tensor, {.stride = 1, .padding = 1});
  stem = ops::affine_channel_norm(stem, stem_gain_.tensor, stem_bias_.tensor);
  std::vector<Tensor> outputs{stem};
  for (const Cell& cell : cells_) {
    const std::size_t k = cell.layout.index;
    const Tensor& in1 = outputs[k >= 2 ? k - 2 : 0];
    std::vector<Tensor> nodes(genotype_.nodes);
    nodes[1] = cell.align ? apply(*cell.align, in1) : in1;
    nodes[2] = outputs[k - 1];
    for (const Edge& e : cell.edges) {
      Tensor y = apply(e.op, nodes[e.from]);
      nodes[e.to] = nodes[e.to].defined() ? ops::add(nodes[e.to], y) : y;
    }
    outputs.push_back(ops::concat(std::vector<Tensor>(nodes.begin() + 3, nodes.end())));
  }
  return ops::linear(ops::global_avg_pool(outputs.back()), fc_weight_.tensor, fc_bias_.tensor);
}

DiscreteNetwork rebuild_discrete(const Genotype& genotype, std::size_t channels, std::size_t classes,
                                 std::size_t in_channels, std::uint64_t seed) {
  return DiscreteNetwork(genotype, channels, classes, in_channels, seed);
}

}  // namespace shrinknas
