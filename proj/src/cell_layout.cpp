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

#include "shrinknas/cell_layout.hpp"

#include <string>

#include "shrinknas/error.hpp"

namespace shrinknas {

namespace {
// Output size of any stride-2 edge op (3x3 pad 1, 5x5 dil 2 pad 4, 1x1 pad 0).
std::size_t halve(std::size_t n) { return n == 0 ? 0 : (n - 1) / 2 + 1; }
}  // namespace

std::string_view cell_kind_name(CellKind kind) {
  return kind == CellKind::Reduction ? "reduction" : "normal";
}

CellKind cell_kind_from_name(std::string_view name) {
  if (name == "normal") return CellKind::Normal;
  if (name == "reduction") return CellKind::Reduction;
  throw ConfigError("unknown cell kind '" + std::string(name) + "'");
}

std::vector<CellKind> default_cell_kinds(std::size_t cells) {
  std::vector<CellKind> kinds(cells, CellKind::Normal);
  for (std::size_t k : {cells / 3 + 1, 2 * cells / 3 + 1}) {
    if (k >= 1 && k <= cells) kinds[k - 1] = CellKind::Reduction;
  }
  return kinds;
}

std::size_t CellLayout::edge_in_channels(std::size_t from) const {
  if (from == 1) return in1_channels;
  if (from == 2) return in2_channels;
  return width;
}

std::size_t CellLayout::edge_stride(std::size_t from) const {
  return (from <= 2 && kind == CellKind::Reduction) ? 2 : 1;
}

NetworkLayout make_layout(std::span<const CellKind> kinds, std::size_t nodes, std::size_t channels,
                          std::size_t in_channels, std::size_t classes, std::size_t input_h,
                          std::size_t input_w) {
  if (kinds.empty()) throw ConfigError("network needs at least one cell");
  if (nodes < 4) throw ConfigError("cells need at least 4 nodes, got " + std::to_string(nodes));
  if (channels == 0 || in_channels == 0 || classes == 0) {
    throw ConfigError("channels, input channels and classes must be positive");
  }
  NetworkLayout net;
  net.in_channels = in_channels;
  net.channels = channels;
  net.nodes = nodes;
  net.classes = classes;
  net.input_h = input_h;
  net.input_w = input_w;

  // Index 0 is the stem; index k is the output of cell k.
  std::vector<std::size_t> out_ch{channels};
  std::vector<std::size_t> out_h{input_h}, out_w{input_w};
  std::vector<CellKind> out_kind{CellKind::Normal};
  std::size_t width = channels;

  for (std::size_t k = 1; k <= kinds.size(); ++k) {
    CellLayout c;
    c.index = k;
    c.kind = kinds[k - 1];
    c.nodes = nodes;
    if (c.kind == CellKind::Reduction) width *= 2;
    c.width = width;
    const std::size_t p1 = k >= 2 ? k - 2 : 0;
    const std::size_t p2 = k - 1;
    c.in1_channels = out_ch[p1];
    c.in2_channels = out_ch[p2];
    const bool resample = p1 != p2 && out_kind[p2] == CellKind::Reduction;
    c.align_in1 = resample || p1 == p2;
    c.align_stride = resample ? 2 : 1;
    c.in1_h = out_h[p1];
    c.in1_w = out_w[p1];
    c.in_h = out_h[p2];
    c.in_w = out_w[p2];
    c.out_h = c.kind == CellKind::Reduction ? halve(c.in_h) : c.in_h;
    c.out_w = c.kind == CellKind::Reduction ? halve(c.in_w) : c.in_w;
    if (input_h != 0 && (c.out_h == 0 || c.out_w == 0)) {
      throw ConfigError("input resolution too small for cell " + std::to_string(k));
    }
    out_ch.push_back(c.out_channels());
    out_h.push_back(c.out_h);
    out_w.push_back(c.out_w);
    out_kind.push_back(c.kind);
    net.cells.push_back(c);
  }
  return net;
}

}  // namespace shrinknas
