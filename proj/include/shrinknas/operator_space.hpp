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
#include <string>
#include <string_view>
#include <vector>

#include "shrinknas/random.hpp"
#include "shrinknas/tensor.hpp"

namespace shrinknas {

enum class OperatorKind : std::uint8_t { SkipConnect, SepConv3x3, DilConv5x5 };

/// Short stable names used in genotype files: "skip", "sep3", "dil5".
std::string_view op_name(OperatorKind kind);
OperatorKind op_from_name(std::string_view name);

/// Ordered, duplicate-free set of candidate operators for every mixed edge.
class OperatorSpace {
 public:
  explicit OperatorSpace(std::vector<OperatorKind> kinds);

  /// O1 = {skip}, O2 = O1 + {sep3}, O3 = O2 + {dil5}.
  static OperatorSpace preset(int level);
  /// Parses "O1".."O3".
  static OperatorSpace from_id(std::string_view id);

  /// "O1".."O3" for presets, otherwise the op names joined with '+'.
  std::string id() const;
  std::size_t size() const { return kinds_.size(); }
  OperatorKind operator[](std::size_t i) const { return kinds_[i]; }
  const std::vector<OperatorKind>& kinds() const { return kinds_; }
  std::optional<std::size_t> index_of(OperatorKind kind) const;

  bool operator==(const OperatorSpace&) const = default;

 private:
  std::vector<OperatorKind> kinds_;
};

/// A parameterized operator on one edge.
///
/// Convolutional kinds are relu -> depthwise KxK -> pointwise 1x1 ->
/// channel-affine norm. SkipConnect is the identity when stride is 1 and the
/// channel count is unchanged; otherwise it is relu -> strided 1x1 projection
/// -> norm. Convolution weights and norm gain/bias are kept in separate lists
/// so the two counts can be reported independently.
struct OperatorInstance {
  OperatorKind kind = OperatorKind::SkipConnect;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
  std::vector<Parameter> parameters;
  std::vector<Parameter> norm_parameters;

  bool is_identity() const { return parameters.empty(); }
};

OperatorInstance build_operator(OperatorKind kind, std::size_t in_channels, std::size_t out_channels,
                                std::size_t stride, Rng& rng, const std::string& id_prefix = "");

/// relu -> 1x1 conv (given stride) -> norm, even when stride is 1 and the
/// channel counts match. Used for cell-input alignment.
OperatorInstance build_projection(std::size_t in_channels, std::size_t out_channels, std::size_t stride, Rng& rng,
                                  const std::string& id);
/// Convolution and norm scalars of build_projection.
std::size_t projection_param_count(std::size_t in_ch, std::size_t out_ch);
std::size_t projection_norm_param_count(std::size_t out_ch);
std::uint64_t projection_flop_count(std::size_t in_ch, std::size_t out_ch, std::size_t out_h, std::size_t out_w);

/// Redraws all parameters from the initialization distribution.
void reinitialize(OperatorInstance& op, Rng& rng);

Tensor apply(const OperatorInstance& op, const Tensor& x);

/// Convolution weight scalars (norm excluded).
std::size_t op_param_count(OperatorKind kind, std::size_t in_ch, std::size_t out_ch, std::size_t stride = 1);
/// Norm gain + bias scalars: 2 * out_ch, or 0 for an identity skip.
std::size_t op_norm_param_count(OperatorKind kind, std::size_t in_ch, std::size_t out_ch, std::size_t stride = 1);
/// 2 x multiply-accumulates of the convolutions at the given output resolution.
std::uint64_t op_flop_count(OperatorKind kind, std::size_t in_ch, std::size_t out_ch, std::size_t out_h,
                            std::size_t out_w, std::size_t stride = 1);

/// Fan-in uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_fan_in_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

}  // namespace shrinknas
