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

#include "shrinknas/genotype.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "shrinknas/error.hpp"

namespace shrinknas {

using ojson = nlohmann::ordered_json;

void Genotype::validate() const {
  if (nodes < 4) throw ConfigError("genotype: N must be >= 4, got " + std::to_string(nodes));
  if (cells.empty()) throw ConfigError("genotype: no cells");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const GenotypeCell& cell = cells[c];
    if (cell.k != c + 1) throw ConfigError("genotype: cells must be numbered 1..L in order");
    std::vector<std::size_t> fan_in(nodes, 0);
    std::set<std::tuple<std::size_t, std::size_t, OperatorKind>> seen;
    for (const GenotypeEdge& e : cell.edges) {
      if (e.to < 3 || e.to >= nodes || e.from < 1 || e.from >= e.to) {
        throw ConfigError("genotype: cell " + std::to_string(cell.k) + " has invalid edge " + std::to_string(e.from) +
                          " -> " + std::to_string(e.to));
      }
      if (!seen.insert({e.from, e.to, e.op}).second) {
        throw ConfigError("genotype: cell " + std::to_string(cell.k) + " repeats an edge");
      }
      ++fan_in[e.to];
    }
    for (std::size_t j = 3; j < nodes; ++j) {
      if (fan_in[j] == 0) {
        throw ConfigError("genotype: dead node " + std::to_string(j) + " in cell " + std::to_string(cell.k));
      }
    }
  }
}

std::size_t Genotype::edge_count() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.edges.size();
  return n;
}

std::vector<CellKind> Genotype::kinds() const {
  std::vector<CellKind> out;
  for (const auto& c : cells) out.push_back(c.kind);
  return out;
}

std::string Genotype::to_json() const {
  ojson j;
  j["space"] = space;
  j["N"] = nodes;
  j["cells"] = ojson::array();
  for (const GenotypeCell& c : cells) {
    ojson jc;
    jc["k"] = c.k;
    jc["kind"] = std::string(cell_kind_name(c.kind));
    jc["edges"] = ojson::array();
    for (const GenotypeEdge& e : c.edges) {
      ojson je;
      je["from"] = e.from;
      je["to"] = e.to;
      je["op"] = std::string(op_name(e.op));
      jc["edges"].push_back(std::move(je));
    }
    j["cells"].push_back(std::move(jc));
  }
  return j.dump(2) + "\n";
}

Genotype Genotype::from_json(const std::string& text) {
  Genotype g;
  try {
    const ojson j = ojson::parse(text);
    g.space = j.at("space").get<std::string>();
    g.nodes = j.at("N").get<std::size_t>();
    for (const auto& jc : j.at("cells")) {
      GenotypeCell c;
      c.k = jc.at("k").get<std::size_t>();
      c.kind = cell_kind_from_name(jc.at("kind").get<std::string>());
      for (const auto& je : jc.at("edges")) {
        c.edges.push_back({je.at("from").get<std::size_t>(), je.at("to").get<std::size_t>(),
                           op_from_name(je.at("op").get<std::string>())});
      }
      g.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("genotype JSON: ") + e.what());
  }
  g.validate();
  return g;
}

std::string Genotype::to_dot() const {
  std::ostringstream os;
  os << "digraph genotype {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const GenotypeCell& c : cells) {
    const std::string p = "c" + std::to_string(c.k) + "_";
    os << "  subgraph cluster_cell" << c.k << " {\n";
    os << "    label=\"cell " << c.k << " (" << cell_kind_name(c.kind) << ")\";\n";
    for (std::size_t n = 1; n < nodes; ++n) os << "    " << p << n << " [label=\"" << n << "\"];\n";
    os << "    " << p << "out [label=\"concat\", shape=ellipse];\n";
    for (const GenotypeEdge& e : c.edges) {
      os << "    " << p << e.from << " -> " << p << e.to << " [label=\"" << op_name(e.op) << "\"];\n";
    }
    for (std::size_t n = 3; n < nodes; ++n) os << "    " << p << n << " -> " << p << "out [style=dashed];\n";
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

Genotype load_genotype(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open genotype file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Genotype::from_json(ss.str());
}

void save_genotype(const Genotype& g, const std::string& path) {
  g.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write genotype file " + path);
  out << g.to_json();
}

}  // namespace shrinknas
