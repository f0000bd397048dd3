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

#include "shrinknas/operator_space.hpp"

#include <algorithm>
#include <cmath>

#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"

namespace shrinknas {

namespace {

struct DepthwiseSpec {
  std::size_t kernel;
  std::size_t dilation;
  std::size_t padding;
};

DepthwiseSpec depthwise_spec(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::SepConv3x3: return {3, 1, 1};
    // dilation 2, padding 4 keeps stride-1 output at the input size
    case OperatorKind::DilConv5x5: return {5, 2, 4};
    case OperatorKind::SkipConnect: break;
  }
  return {1, 1, 0};
}

bool skip_is_identity(std::size_t in_ch, std::size_t out_ch, std::size_t stride) {
  return stride == 1 && in_ch == out_ch;
}

void init_norm(OperatorInstance& op) {
  for (Parameter& p : op.norm_parameters) {
    const bool is_gain = p.id.ends_with(".gain");
    std::ranges::fill(p.tensor.data(), is_gain ? 1.0 : 0.0);
  }
}

}  // namespace

std::string_view op_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::SkipConnect: return "skip";
    case OperatorKind::SepConv3x3: return "sep3";
    case OperatorKind::DilConv5x5: return "dil5";
  }
  return "?";
}

OperatorKind op_from_name(std::string_view name) {
  if (name == "skip") return OperatorKind::SkipConnect;
  if (name == "sep3") return OperatorKind::SepConv3x3;
  if (name == "dil5") return OperatorKind::DilConv5x5;
  throw ConfigError("unknown operator '" + std::string(name) + "' (expected skip, sep3 or dil5)");
}

OperatorSpace::OperatorSpace(std::vector<OperatorKind> kinds) : kinds_(std::move(kinds)) {
  if (kinds_.empty()) throw ConfigError("operator space must not be empty");
  for (std::size_t i = 0; i < kinds_.size(); ++i)
    for (std::size_t j = i + 1; j < kinds_.size(); ++j)
      if (kinds_[i] == kinds_[j]) {
        throw ConfigError("duplicate operator '" + std::string(op_name(kinds_[i])) + "' in operator space");
      }
}

OperatorSpace OperatorSpace::preset(int level) {
  switch (level) {
    case 1: return OperatorSpace({OperatorKind::SkipConnect});
    case 2: return OperatorSpace({OperatorKind::SkipConnect, OperatorKind::SepConv3x3});
    case 3:
      return OperatorSpace({OperatorKind::SkipConnect, OperatorKind::SepConv3x3, OperatorKind::DilConv5x5});
    default: break;
  }
  throw ConfigError("operator space preset must be 1, 2 or 3, got " + std::to_string(level));
}

OperatorSpace OperatorSpace::from_id(std::string_view id) {
  if (id == "O1" || id == "o1") return preset(1);
  if (id == "O2" || id == "o2") return preset(2);
  if (id == "O3" || id == "o3") return preset(3);
  throw ConfigError("unknown operator space '" + std::string(id) + "' (expected O1, O2 or O3)");
}

std::string OperatorSpace::id() const {
  for (int level = 1; level <= 3; ++level) {
    if (*this == preset(level)) return "O" + std::to_string(level);
  }
  std::string s;
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    if (i) s += '+';
    s += op_name(kinds_[i]);
  }
  return s;
}

std::optional<std::size_t> OperatorSpace::index_of(OperatorKind kind) const {
  auto it = std::ranges::find(kinds_, kind);
  if (it == kinds_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kinds_.begin());
}

void init_fan_in_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data()) v = uniform(rng, -bound, bound);
}

OperatorInstance build_operator(OperatorKind kind, std::size_t in_channels, std::size_t out_channels,
                                std::size_t stride, Rng& rng, const std::string& id_prefix) {
  if (in_channels == 0 || out_channels == 0) throw ConfigError("build_operator: channels must be positive");
  if (stride != 1 && stride != 2) {
    throw ConfigError("build_operator: unsupported stride " + std::to_string(stride) + " (expected 1 or 2)");
  }
  OperatorInstance op;
  op.kind = kind;
  op.in_channels = in_channels;
  op.out_channels = out_channels;
  op.stride = stride;
  const std::string base = id_prefix.empty() ? std::string(op_name(kind)) : id_prefix;

  if (kind == OperatorKind::SkipConnect) {
    if (skip_is_identity(in_channels, out_channels, stride)) return op;
    op.parameters.push_back({base + ".proj", Tensor::zeros({out_channels, in_channels, 1, 1}, true)});
  } else {
    const DepthwiseSpec dw = depthwise_spec(kind);
    op.parameters.push_back({base + ".dw", Tensor::zeros({in_channels, 1, dw.kernel, dw.kernel}, true)});
    op.parameters.push_back({base + ".pw", Tensor::zeros({out_channels, in_channels, 1, 1}, true)});
  }
  op.norm_parameters.push_back({base + ".gain", Tensor::zeros({out_channels}, true)});
  op.norm_parameters.push_back({base + ".bias", Tensor::zeros({out_channels}, true)});
  reinitialize(op, rng);
  return op;
}

OperatorInstance build_projection(std::size_t in_channels, std::size_t out_channels, std::size_t stride, Rng& rng,
                                  const std::string& id) {
  if (in_channels == 0 || out_channels == 0) throw ConfigError("build_projection: channels must be positive");
  if (stride != 1 && stride != 2) {
    throw ConfigError("build_projection: unsupported stride " + std::to_string(stride) + " (expected 1 or 2)");
  }
  OperatorInstance op;
  op.kind = OperatorKind::SkipConnect;
  op.in_channels = in_channels;
  op.out_channels = out_channels;
  op.stride = stride;
  op.parameters.push_back({id + ".proj", Tensor::zeros({out_channels, in_channels, 1, 1}, true)});
  op.norm_parameters.push_back({id + ".gain", Tensor::zeros({out_channels}, true)});
  op.norm_parameters.push_back({id + ".bias", Tensor::zeros({out_channels}, true)});
  reinitialize(op, rng);
  return op;
}

std::size_t projection_param_count(std::size_t in_ch, std::size_t out_ch) { return in_ch * out_ch; }

std::size_t projection_norm_param_count(std::size_t out_ch) { return 2 * out_ch; }

std::uint64_t projection_flop_count(std::size_t in_ch, std::size_t out_ch, std::size_t out_h, std::size_t out_w) {
  return 2ULL * in_ch * out_ch * out_h * out_w;
}

void reinitialize(OperatorInstance& op, Rng& rng) {
  for (Parameter& p : op.parameters) {
    const Shape& s = p.tensor.shape();
    init_fan_in_uniform(p.tensor, s[1] * s[2] * s[3], rng);
  }
  init_norm(op);
}

Tensor apply(const OperatorInstance& op, const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != op.in_channels) {
    throw ShapeError("operator " + std::string(op_name(op.kind)) + ": expected " +
                     std::to_string(op.in_channels) + " input channels (dim 1), got " + shape_str(x.shape()));
  }
  if (op.is_identity()) return x;

  Tensor h = ops::relu(x);
  if (op.kind == OperatorKind::SkipConnect) {
    h = ops::conv2d(h, op.parameters[0].tensor, {.stride = op.stride});
  } else {
    const DepthwiseSpec dw = depthwise_spec(op.kind);
    h = ops::conv2d(h, op.parameters[0].tensor,
                    {.stride = op.stride, .padding = dw.padding, .dilation = dw.dilation, .groups = op.in_channels});
    h = ops::conv2d(h, op.parameters[1].tensor);
  }
  return ops::affine_channel_norm(h, op.norm_parameters[0].tensor, op.norm_parameters[1].tensor);
}

std::size_t op_param_count(OperatorKind kind, std::size_t in_ch, std::size_t out_ch, std::size_t stride) {
  if (kind == OperatorKind::SkipConnect) {
    return skip_is_identity(in_ch, out_ch, stride) ? 0 : in_ch * out_ch;
  }
  const std::size_t k = depthwise_spec(kind).kernel;
  return k * k * in_ch + in_ch * out_ch;
}

std::size_t op_norm_param_count(OperatorKind kind, std::size_t in_ch, std::size_t out_ch, std::size_t stride) {
  if (kind == OperatorKind::SkipConnect && skip_is_identity(in_ch, out_ch, stride)) return 0;
  return 2 * out_ch;
}

std::uint64_t op_flop_count(OperatorKind kind, std::size_t in_ch, std::size_t out_ch, std::size_t out_h,
                            std::size_t out_w, std::size_t stride) {
  const std::uint64_t macs_per_pixel = op_param_count(kind, in_ch, out_ch, stride);
  return 2 * macs_per_pixel * out_h * out_w;
}

}  // namespace shrinknas
