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
#include <span>
#include <string_view>
#include <vector>

namespace shrinknas {

enum class CellKind { Normal, Reduction };

std::string_view cell_kind_name(CellKind kind);  // "normal" / "reduction"
CellKind cell_kind_from_name(std::string_view name);

/// Reduction cells at 1-based indices floor(L/3)+1 and floor(2L/3)+1.
std::vector<CellKind> default_cell_kinds(std::size_t cells);

/// Channel and resolution plumbing of one cell.
///
/// Nodes 1 and 2 are the outputs of cells k-2 and k-1 (the stem stands in for
/// missing predecessors). Node 1 is first passed through a 1x1 projection
/// ("alignment") that keeps its channel count in two cases: with stride 2
/// when cell k-1 is a reduction cell, so node 1 arrives at twice node 2's
/// resolution; with stride 1 in cell 1, where both inputs are the stem output
/// and would otherwise make parameter-free candidates from nodes 1 and 2
/// indistinguishable. Edges leaving nodes
/// 1 and 2 of a reduction cell have stride 2. Every computing node has
/// `width` channels; the cell output concatenates nodes 3..N-1.
struct CellLayout {
  std::size_t index = 0;  // 1-based
  CellKind kind = CellKind::Normal;
  std::size_t nodes = 0;
  std::size_t width = 0;
  std::size_t in1_channels = 0;
  std::size_t in2_channels = 0;
  bool align_in1 = false;
  std::size_t align_stride = 1;
  std::size_t in1_h = 0, in1_w = 0;  // before alignment
  std::size_t in_h = 0, in_w = 0;    // node 2 (and aligned node 1)
  std::size_t out_h = 0, out_w = 0;

  std::size_t out_channels() const { return (nodes - 3) * width; }
  std::size_t edge_in_channels(std::size_t from) const;
  std::size_t edge_stride(std::size_t from) const;
};

struct NetworkLayout {
  std::size_t in_channels = 0;
  std::size_t channels = 0;  // stem output width = width of cell 1
  std::size_t nodes = 0;
  std::size_t classes = 0;
  std::size_t input_h = 0, input_w = 0;
  std::vector<CellLayout> cells;

  std::size_t classifier_in() const { return cells.back().out_channels(); }
};

/// Resolutions are computed for input_h x input_w; pass 0 when only channel
/// information is needed.
NetworkLayout make_layout(std::span<const CellKind> kinds, std::size_t nodes, std::size_t channels,
                          std::size_t in_channels, std::size_t classes, std::size_t input_h = 0,
                          std::size_t input_w = 0);

}  // namespace shrinknas
