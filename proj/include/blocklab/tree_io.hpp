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
#include <string>
#include <vector>

#include <json.hpp>

#include "blocklab/errors.hpp"
#include "blocklab/tree.hpp"

namespace blocklab {

/// Labeled-tree fixture format: parents (-1 for the root), tau, revealed
/// node ids, optional tau_noisy, and the broadcast config.
inline nlohmann::json tree_to_json(const LabeledTree& lt) {
  nlohmann::json j;
  j["parents"] = lt.tree().parents();
  j["tau"] = lt.tau;
  std::vector<NodeId> revealed;
  for (NodeId v = 0; v < lt.size(); ++v)
    if (lt.revealed[v]) revealed.push_back(v);
  j["revealed"] = revealed;
  if (!lt.tau_noisy.empty()) j["tau_noisy"] = lt.tau_noisy;
  j["config"] = {{"k", lt.cfg.k},
                 {"eta", lt.cfg.eta},
                 {"p", lt.cfg.p},
                 {"delta", lt.cfg.delta}};
  return j;
}

/// Parses a labeled-tree fixture. Arbitrary node orders are accepted: the
/// tree is renumbered into canonical BFS layout and per-node data remapped
/// to match.
inline LabeledTree tree_from_json(const nlohmann::json& j) {
  std::vector<std::int32_t> parents;
  std::vector<Label> tau;
  BroadcastConfig cfg;
  try {
    parents = j.at("parents").get<std::vector<std::int32_t>>();
    tau = j.at("tau").get<std::vector<Label>>();
    const auto& c = j.at("config");
    cfg.k = c.at("k").get<std::uint32_t>();
    cfg.eta = c.at("eta").get<double>();
    cfg.p = c.at("p").get<double>();
    cfg.delta = c.value("delta", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("tree_from_json: ") + e.what());
  }
  cfg.validate();
  if (tau.size() != parents.size())
    throw IoError("tree_from_json: tau size mismatch");

  std::vector<NodeId> perm;
  Tree t = Tree::from_parents(parents, &perm);
  const std::size_t n = parents.size();

  LabeledTree lt;
  lt.cfg = cfg;
  lt.tau.resize(n);
  lt.revealed.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (tau[i] < 1 || tau[i] > cfg.k)
      throw IoError("tree_from_json: tau outside {1..k}");
    lt.tau[perm[i]] = tau[i];
  }
  if (j.contains("revealed")) {
    for (NodeId v : j["revealed"].get<std::vector<NodeId>>()) {
      if (v >= n) throw IoError("tree_from_json: revealed node out of range");
      lt.revealed[perm[v]] = 1;
    }
  }
  if (j.contains("tau_noisy")) {
    auto noisy = j["tau_noisy"].get<std::vector<Label>>();
    if (noisy.size() != n) throw IoError("tree_from_json: tau_noisy size mismatch");
    lt.tau_noisy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (noisy[i] < 1 || noisy[i] > cfg.k)
        throw IoError("tree_from_json: tau_noisy outside {1..k}");
      lt.tau_noisy[perm[i]] = noisy[i];
    }
  }
  lt.tree_ptr = std::make_shared<const Tree>(std::move(t));
  return lt;
}

inline void write_tree(const std::string& path, const LabeledTree& lt) {
  std::ofstream f(path);
  if (!f) throw IoError("write_tree: cannot open " + path);
  f << tree_to_json(lt).dump(2) << '\n';
}

inline LabeledTree read_tree(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_tree: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("read_tree: bad JSON: ") + e.what());
  }
  return tree_from_json(j);
}

}  // namespace blocklab
