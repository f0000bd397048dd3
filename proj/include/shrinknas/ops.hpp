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
#include <span>
#include <vector>

#include "shrinknas/tensor.hpp"

// Differentiable tensor operations. Each op records a backward rule on the
// thread's active Tape when any input requires grad.

namespace shrinknas::ops {

struct Conv2dArgs {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t dilation = 1;
  std::size_t groups = 1;
};

/// floor((in + 2*padding - dilation*(kernel-1) - 1) / stride) + 1
std::size_t conv_output_size(std::size_t in, std::size_t kernel, const Conv2dArgs& args);

/// input [N, Cin, H, W], weight [Cout, Cin/groups, KH, KW] -> [N, Cout, Ho, Wo]. No bias.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Conv2dArgs& args = {});

/// input [B, in], weight [out, in], bias [out] -> [B, out]
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Per-channel y = gain[c] * x + bias[c] on NCHW input.
Tensor affine_channel_norm(const Tensor& input, const Tensor& gain, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// Sum of all elements -> scalar.
Tensor sum(const Tensor& x);

/// Concatenation along axis 1 (channels for NCHW). All other dims must match.
Tensor concat(const std::vector<Tensor>& inputs);

/// [N, C, H, W] -> [N, C]
Tensor global_avg_pool(const Tensor& x);

Tensor softmax(const Tensor& logits, std::size_t axis);
Tensor log_softmax(const Tensor& logits, std::size_t axis);

/// Mean over the batch of -log softmax(logits)[label]. logits [B, C].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Flat gather: out[m] = x.flat[indices[m]], shape [indices.size()].
Tensor gather(const Tensor& x, std::span<const std::size_t> indices);

/// sum_m weights[m] * xs[m]; xs share one shape, weights is 1-D of size xs.size().
Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& weights);

/// Multiply-accumulates executed by conv2d and linear on this thread since the
/// last reset. Used to cross-check analytic FLOP counts.
std::uint64_t mac_count();
void reset_mac_count();

}  // namespace shrinknas::ops
