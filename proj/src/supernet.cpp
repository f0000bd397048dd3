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

#include "shrinknas/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"

namespace shrinknas {

// ---------------------------------------------------------------------------
// ArchSnapshot

std::size_t ArchSnapshot::alive_count() const {
  std::size_t n = 0;
  for (const auto& m : alive) n += static_cast<std::size_t>(std::ranges::count(m, std::uint8_t{1}));
  return n;
}

bool ArchSnapshot::alive_subset_of(const ArchSnapshot& other) const {
  if (alive.size() != other.alive.size()) return false;
  for (std::size_t s = 0; s < alive.size(); ++s) {
    if (alive[s].size() != other.alive[s].size()) return false;
    for (std::size_t e = 0; e < alive[s].size(); ++e) {
      if (alive[s][e] && !other.alive[s][e]) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// ArchParams

ArchParams::ArchParams(std::size_t cells, std::size_t nodes, std::size_t ops)
    : cells_(cells), nodes_(nodes), ops_(ops) {
  for (std::size_t k = 1; k <= cells; ++k) {
    for (std::size_t j = 3; j < nodes; ++j) {
      const std::size_t m = node_entries(j);
      alpha_.push_back({"alpha.cell" + std::to_string(k) + ".node" + std::to_string(j),
                        Tensor::zeros({m}, true)});
      alive_.emplace_back(m, std::uint8_t{1});
    }
  }
}

std::size_t ArchParams::slot(std::size_t k, std::size_t j) const {
  if (k < 1 || k > cells_ || j < 3 || j >= nodes_) {
    throw ConfigError("arch index out of range: cell " + std::to_string(k) + ", node " + std::to_string(j));
  }
  return (k - 1) * (nodes_ - 3) + (j - 3);
}

std::size_t ArchParams::entry_count() const {
  std::size_t n = 0;
  for (const Parameter& p : alpha_) n += p.tensor.numel();
  return n;
}

std::size_t ArchParams::alive_count() const {
  std::size_t n = 0;
  for (const auto& m : alive_) n += static_cast<std::size_t>(std::ranges::count(m, std::uint8_t{1}));
  return n;
}

Parameter& ArchParams::alpha(std::size_t k, std::size_t j) { return alpha_[slot(k, j)]; }
const Parameter& ArchParams::alpha(std::size_t k, std::size_t j) const { return alpha_[slot(k, j)]; }

std::span<const std::uint8_t> ArchParams::alive(std::size_t k, std::size_t j) const {
  return alive_[slot(k, j)];
}

std::span<std::uint8_t> ArchParams::alive_mut(std::size_t k, std::size_t j) { return alive_[slot(k, j)]; }

bool ArchParams::is_alive(std::size_t k, std::size_t i, std::size_t j, std::size_t o) const {
  return alive(k, j)[entry_index(i, o)] != 0;
}

std::vector<std::size_t> ArchParams::alive_indices(std::size_t k, std::size_t j) const {
  std::vector<std::size_t> idx;
  auto mask = alive(k, j);
  for (std::size_t e = 0; e < mask.size(); ++e)
    if (mask[e]) idx.push_back(e);
  return idx;
}

std::vector<double> ArchParams::contribution_weights(std::size_t k, std::size_t j) const {
  auto a = alpha(k, j).tensor.data();
  auto mask = alive(k, j);
  std::vector<double> w(a.size(), 0.0);
  double mx = -INFINITY;
  for (std::size_t e = 0; e < a.size(); ++e)
    if (mask[e]) mx = std::max(mx, a[e]);
  if (mx == -INFINITY) {
    throw DeadNodeError("dead node: cell " + std::to_string(k) + ", node " + std::to_string(j) +
                        " has no alive input");
  }
  double z = 0.0;
  for (std::size_t e = 0; e < a.size(); ++e) {
    if (!mask[e]) continue;
    w[e] = std::exp(a[e] - mx);
    z += w[e];
  }
  for (double& v : w) v /= z;
  return w;
}

std::vector<double> ArchParams::edgewise_weights(std::size_t k, std::size_t i, std::size_t j) const {
  if (i < 1 || i >= j) throw ConfigError("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") is not a DAG edge");
  auto a = alpha(k, j).tensor.data();
  auto mask = alive(k, j);
  std::vector<double> w(ops_, 0.0);
  double mx = -INFINITY;
  for (std::size_t o = 0; o < ops_; ++o)
    if (mask[entry_index(i, o)]) mx = std::max(mx, a[entry_index(i, o)]);
  if (mx == -INFINITY) return w;
  double z = 0.0;
  for (std::size_t o = 0; o < ops_; ++o) {
    if (!mask[entry_index(i, o)]) continue;
    w[o] = std::exp(a[entry_index(i, o)] - mx);
    z += w[o];
  }
  for (double& v : w) v /= z;
  return w;
}

std::vector<Parameter*> ArchParams::parameters() {
  std::vector<Parameter*> out;
  for (Parameter& p : alpha_) out.push_back(&p);
  return out;
}

ArchSnapshot ArchParams::snapshot(std::string label) const {
  ArchSnapshot s;
  s.label = std::move(label);
  s.cells = cells_;
  s.nodes = nodes_;
  s.ops = ops_;
  for (const Parameter& p : alpha_) {
    auto d = p.tensor.data();
    s.alpha.emplace_back(d.begin(), d.end());
  }
  s.alive = alive_;
  return s;
}

void ArchParams::restore(const ArchSnapshot& snap) {
  if (snap.cells != cells_ || snap.nodes != nodes_ || snap.ops != ops_ || snap.alpha.size() != alpha_.size() ||
      snap.alive.size() != alive_.size()) {
    throw ConfigError("architecture snapshot does not match network dimensions");
  }
  for (std::size_t s = 0; s < alpha_.size(); ++s) {
    auto d = alpha_[s].tensor.data();
    if (snap.alpha[s].size() != d.size() || snap.alive[s].size() != d.size()) {
      throw ConfigError("architecture snapshot block size mismatch");
    }
    std::ranges::copy(snap.alpha[s], d.begin());
    alive_[s] = snap.alive[s];
  }
}

// ---------------------------------------------------------------------------
// SuperNetwork

std::size_t stem_param_count(std::size_t in_channels, std::size_t channels) {
  return 9 * in_channels * channels + 2 * channels;
}

std::size_t classifier_param_count(std::size_t features, std::size_t classes) {
  return features * classes + classes;
}

SuperNetwork::SuperNetwork(const SupernetConfig& config)
    : config_(config),
      layout_(make_layout(default_cell_kinds(config.cells), config.nodes, config.channels, config.in_channels,
                          config.classes)),
      arch_(config.cells, config.nodes, config.space.size()),
      rng_(config.seed) {
  const std::size_t c = config.channels;
  stem_weight_ = {"stem.conv", Tensor::zeros({c, config.in_channels, 3, 3}, true)};
  stem_gain_ = {"stem.gain", Tensor::zeros({c}, true)};
  stem_bias_ = {"stem.bias", Tensor::zeros({c}, true)};

  for (const CellLayout& cl : layout_.cells) {
    Cell cell;
    cell.layout = cl;
    const std::string prefix = "cell" + std::to_string(cl.index);
    if (cl.align_in1) {
      cell.align = build_projection(cl.in1_channels, cl.in1_channels, cl.align_stride, rng_,
                                  prefix + ".align");
    }
    for (std::size_t j = 3; j < config.nodes; ++j) {
      std::vector<MixedEdge> row;
      for (std::size_t i = 1; i < j; ++i) {
        MixedEdge e{i, j, {}};
        for (OperatorKind kind : config.space.kinds()) {
          e.ops.push_back(build_operator(kind, cl.edge_in_channels(i), cl.width, cl.edge_stride(i), rng_,
                                         prefix + ".n" + std::to_string(i) + "_" + std::to_string(j) + "." +
                                             std::string(op_name(kind))));
        }
        row.push_back(std::move(e));
      }
      cell.edges.push_back(std::move(row));
    }
    cells_.push_back(std::move(cell));
  }
  const std::size_t features = layout_.classifier_in();
  fc_weight_ = {"classifier.weight", Tensor::zeros({config.classes, features}, true)};
  fc_bias_ = {"classifier.bias", Tensor::zeros({config.classes}, true)};
  reinit_theta();
}

void SuperNetwork::reinit_theta() {
  init_fan_in_uniform(stem_weight_.tensor, config_.in_channels * 9, rng_);
  std::ranges::fill(stem_gain_.tensor.data(), 1.0);
  std::ranges::fill(stem_bias_.tensor.data(), 0.0);
  for (Cell& cell : cells_) {
    if (cell.align) reinitialize(*cell.align, rng_);
    for (auto& row : cell.edges)
      for (MixedEdge& e : row)
        for (OperatorInstance& op : e.ops) reinitialize(op, rng_);
  }
  const std::size_t features = layout_.classifier_in();
  init_fan_in_uniform(fc_weight_.tensor, features, rng_);
  init_fan_in_uniform(fc_bias_.tensor, features, rng_);
}

std::vector<Parameter*> SuperNetwork::theta() {
  std::vector<Parameter*> out{&stem_weight_, &stem_gain_, &stem_bias_};
  auto add_op = [&out](OperatorInstance& op) {
    for (Parameter& p : op.parameters) out.push_back(&p);
    for (Parameter& p : op.norm_parameters) out.push_back(&p);
  };
  for (Cell& cell : cells_) {
    if (cell.align) add_op(*cell.align);
    for (auto& row : cell.edges)
      for (MixedEdge& e : row)
        for (OperatorInstance& op : e.ops) add_op(op);
  }
  out.push_back(&fc_weight_);
  out.push_back(&fc_bias_);
  return out;
}

std::size_t SuperNetwork::theta_size() const {
  std::size_t n = 0;
  for (Parameter* p : const_cast<SuperNetwork*>(this)->theta()) n += p->tensor.numel();
  return n;
}

const MixedEdge& SuperNetwork::edge(std::size_t k, std::size_t i, std::size_t j) const {
  if (k < 1 || k > cells_.size() || j < 3 || j >= config_.nodes || i < 1 || i >= j) {
    throw ConfigError("edge index out of range");
  }
  return cells_[k - 1].edges[j - 3][i - 1];
}

MixedEdge& SuperNetwork::edge(std::size_t k, std::size_t i, std::size_t j) {
  return const_cast<MixedEdge&>(std::as_const(*this).edge(k, i, j));
}

Tensor SuperNetwork::forward_cell(const Cell& cell, const Tensor& in1, const Tensor& in2) const {
  const std::size_t k = cell.layout.index;
  std::vector<Tensor> nodes{Tensor(), cell.align ? apply(*cell.align, in1) : in1, in2};
  const std::size_t n_ops = config_.space.size();
  for (std::size_t j = 3; j < config_.nodes; ++j) {
    const std::vector<std::size_t> alive = arch_.alive_indices(k, j);
    if (alive.empty()) {
      throw DeadNodeError("dead node: cell " + std::to_string(k) + ", node " + std::to_string(j) +
                          " has no alive input");
    }
    Tensor weights = ops::softmax(ops::gather(arch_.alpha(k, j).tensor, alive), 0);
    std::vector<Tensor> terms;
    terms.reserve(alive.size());
    for (std::size_t e : alive) {
      const std::size_t i = e / n_ops + 1;
      const std::size_t o = e % n_ops;
      terms.push_back(apply(cell.edges[j - 3][i - 1].ops[o], nodes[i]));
    }
    nodes.push_back(ops::weighted_sum(terms, weights));
  }
  return ops::concat(std::vector<Tensor>(nodes.begin() + 3, nodes.end()));
}

Tensor SuperNetwork::forward(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.dim(1) != config_.in_channels) {
    throw ShapeError("supernet: expected NCHW input with " + std::to_string(config_.in_channels) +
                     " channels (dim 1), got " + shape_str(batch.shape()));
  }
  Tensor stem = ops::conv2d(batch, stem_weight_.tensor, {.stride = 1, .padding = 1});
  stem = ops::affine_channel_norm(stem, stem_gain_.tensor, stem_bias_.tensor);
  std::vector<Tensor> outputs{stem};
  for (const Cell& cell : cells_) {
    const std::size_t k = cell.layout.index;
    const Tensor& in1 = outputs[k >= 2 ? k - 2 : 0];
    const Tensor& in2 = outputs[k - 1];
    outputs.push_back(forward_cell(cell, in1, in2));
  }
  Tensor pooled = ops::global_avg_pool(outputs.back());
  return ops::linear(pooled, fc_weight_.tensor, fc_bias_.tensor);
}

SuperNetwork init_supernet(const SupernetConfig& config) {
  if (config.cells < 3) throw ConfigError("supernet needs L >= 3 cells, got " + std::to_string(config.cells));
  if (config.nodes < 4) throw ConfigError("supernet needs N >= 4 nodes, got " + std::to_string(config.nodes));
  if (config.channels == 0 || config.classes == 0 || config.in_channels == 0) {
    throw ConfigError("supernet channels, classes and input channels must be positive");
  }
  return SuperNetwork(config);
}

}  // namespace shrinknas
