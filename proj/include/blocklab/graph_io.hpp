// Copyright 2026 The blocklab Authors.
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

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blocklab/errors.hpp"
#include "blocklab/sbm.hpp"

namespace blocklab {

/// Writes the edge list as one "u v" pair per line (u < v, sorted), LF
/// line endings.
inline void write_edge_list(std::ostream& os, const LabeledGraph& g) {
  for (NodeId u = 0; u < g.n; ++u)
    for (NodeId v : g.adjacency[u])
      if (u < v) os << u << ' ' << v << '\n';
}

/// Sidecar metadata: model constants, seed, the revealed set, and the
/// labels. sigma is optional so hidden-label benchmarks can be shared.
inline nlohmann::json graph_sidecar(const LabeledGraph& g,
                                    const SbmParams& params,
                                    std::uint64_t seed,
                                    bool include_sigma = true) {
  nlohmann::json j;
  j["n"] = params.n;
  j["k"] = params.k;
  j["a"] = params.a;
  j["b"] = params.b;
  j["p"] = params.p;
  j["seed"] = seed;
  if (include_sigma && !g.sigma.empty()) j["sigma"] = g.sigma;
  j["revealed"] = g.revealed;
  return j;
}

inline void write_graph(const std::string& edge_path,
                        const std::string& sidecar_path, const LabeledGraph& g,
                        const SbmParams& params, std::uint64_t seed,
                        bool include_sigma = true) {
  std::ofstream ef(edge_path);
  if (!ef) throw IoError("write_graph: cannot open " + edge_path);
  write_edge_list(ef, g);
  std::ofstream sf(sidecar_path);
  if (!sf) throw IoError("write_graph: cannot open " + sidecar_path);
  sf << graph_sidecar(g, params, seed, include_sigma).dump(2) << '\n';
}

struct ImportedGraph {
  LabeledGraph graph;
  SbmParams params;
  std::uint64_t seed = 0;
};

inline ImportedGraph read_graph(std::istream& edges_in,
                                const nlohmann::json& sidecar) {
  ImportedGraph out;
  try {
    out.params.n = sidecar.at("n").get<std::uint32_t>();
    out.params.k = sidecar.at("k").get<std::uint32_t>();
    out.params.a = sidecar.at("a").get<double>();
    out.params.b = sidecar.at("b").get<double>();
    out.params.p = sidecar.at("p").get<double>();
    out.seed = sidecar.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("read_graph: bad sidecar: ") + e.what());
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  while (std::getline(edges_in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    NodeId u, v;
    if (!(ls >> u >> v)) throw IoError("read_graph: malformed edge line");
    edges.emplace_back(u, v);
  }
  std::vector<Label> sigma;
  if (sidecar.contains("sigma")) sigma = sidecar["sigma"].get<std::vector<Label>>();
  std::vector<NodeId> revealed;
  if (sidecar.contains("revealed"))
    revealed = sidecar["revealed"].get<std::vector<NodeId>>();
  out.graph = graph_from_edges(out.params.n, out.params.k, edges,
                               std::move(sigma), std::move(revealed));
  out.graph.validate();
  return out;
}

inline ImportedGraph read_graph_files(const std::string& edge_path,
                                      const std::string& sidecar_path) {
  std::ifstream ef(edge_path);
  if (!ef) throw IoError("read_graph_files: cannot open " + edge_path);
  std::ifstream sf(sidecar_path);
  if (!sf) throw IoError("read_graph_files: cannot open " + sidecar_path);
  nlohmann::json sidecar;
  try {
    sf >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("read_graph_files: bad sidecar JSON: ") +
                  e.what());
  }
  return read_graph(ef, sidecar);
}

}  // namespace blocklab
