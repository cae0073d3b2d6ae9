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

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "blocklab/errors.hpp"
#include "blocklab/rng.hpp"
#include "blocklab/types.hpp"

namespace blocklab {

inline constexpr std::uint64_t kDefaultNodeCap = 20'000'000ULL;

// ---------------------------------------------------------------------------
// Tree
// ---------------------------------------------------------------------------

/// Rooted tree in BFS layout: node 0 is the root, parent(i) < i, depths are
/// non-decreasing in id, and the children of each node occupy a contiguous
/// id range. The layout makes level ranges contiguous and lets leaf-to-root
/// passes run as a simple reverse index scan.
class Tree {
 public:
  static Tree single_root() {
    Tree t;
    t.parent_ = {-1};
    t.depth_ = {0};
    t.child_begin_ = {1};
    t.child_count_ = {0};
    t.height_ = 0;
    return t;
  }

  std::size_t size() const { return parent_.size(); }
  std::uint32_t height() const { return height_; }

  std::int64_t parent(NodeId v) const { return parent_[v]; }
  std::uint32_t depth(NodeId v) const { return depth_[v]; }
  std::uint32_t child_count(NodeId v) const { return child_count_[v]; }
  NodeId child_begin(NodeId v) const { return child_begin_[v]; }
  NodeId child_end(NodeId v) const { return child_begin_[v] + child_count_[v]; }

  /// Total degree: children plus the parent edge (root has no parent).
  std::uint32_t degree(NodeId v) const {
    return child_count_[v] + (v == 0 ? 0 : 1);
  }

  /// Contiguous id range [first, last) of the nodes at depth ell; empty
  /// range when the level does not exist.
  std::pair<NodeId, NodeId> level_range(std::uint32_t ell) const {
    auto lo = std::lower_bound(depth_.begin(), depth_.end(), ell);
    auto hi = std::upper_bound(depth_.begin(), depth_.end(), ell);
    return {static_cast<NodeId>(lo - depth_.begin()),
            static_cast<NodeId>(hi - depth_.begin())};
  }

  std::uint64_t level_size(std::uint32_t ell) const {
    auto [lo, hi] = level_range(ell);
    return hi - lo;
  }

  const std::vector<std::int32_t>& parents() const { return parent_; }

  /// Rebuilds a tree from a parent array (-1 marks the root). Nodes are
  /// renumbered into BFS layout; `perm` (old id -> new id) is filled so
  /// callers can remap per-node data.
  static Tree from_parents(const std::vector<std::int32_t>& parents,
                           std::vector<NodeId>* perm = nullptr) {
    const std::size_t n = parents.size();
    if (n == 0) throw ParamError("Tree::from_parents: empty parent array");
    std::size_t roots = 0;
    std::vector<std::uint32_t> out_count(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (parents[i] < 0) {
        ++roots;
      } else {
        if (static_cast<std::size_t>(parents[i]) >= n)
          throw ParamError("Tree::from_parents: parent out of range");
        ++out_count[parents[i]];
      }
    }
    if (roots != 1) throw ParamError("Tree::from_parents: exactly one root required");

    std::vector<std::vector<NodeId>> kids(n);
    std::int64_t root = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (parents[i] < 0)
        root = static_cast<std::int64_t>(i);
      else
        kids[parents[i]].push_back(static_cast<NodeId>(i));
    }

    Tree t;
    t.parent_.reserve(n);
    t.depth_.reserve(n);
    std::vector<NodeId> order;  // BFS order of old ids
    order.reserve(n);
    order.push_back(static_cast<NodeId>(root));
    std::vector<NodeId> new_id(n, 0);
    new_id[root] = 0;
    t.parent_.push_back(-1);
    t.depth_.push_back(0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      NodeId old = order[i];
      t.child_begin_.push_back(static_cast<NodeId>(order.size()));
      t.child_count_.push_back(static_cast<std::uint32_t>(kids[old].size()));
      for (NodeId c : kids[old]) {
        new_id[c] = static_cast<NodeId>(order.size());
        order.push_back(c);
        t.parent_.push_back(static_cast<std::int32_t>(i));
        t.depth_.push_back(t.depth_[i] + 1);
      }
    }
    if (order.size() != n)
      throw ParamError("Tree::from_parents: parent array contains a cycle");
    t.height_ = t.depth_.back();
    if (perm) *perm = std::move(new_id);
    return t;
  }

 private:
  friend class TreeBuilder;

  std::vector<std::int32_t> parent_;
  std::vector<std::uint32_t> depth_;
  std::vector<NodeId> child_begin_;
  std::vector<std::uint32_t> child_count_;
  std::uint32_t height_ = 0;
};

/// Incremental constructor that enforces the BFS layout: nodes are visited
/// in id order and each node's offspring count is fixed exactly once.
class TreeBuilder {
 public:
  TreeBuilder() {
    tree_.parent_ = {-1};
    tree_.depth_ = {0};
  }

  std::size_t size() const { return tree_.parent_.size(); }

  /// Current depth of node `v` (must already exist).
  std::uint32_t depth(NodeId v) const { return tree_.depth_[v]; }

  /// Declares that node `next_` has `count` children; appends them.
  /// Must be called exactly once per node, in id order.
  void add_children(std::uint32_t count) {
    NodeId me = next_++;
    tree_.child_begin_.push_back(static_cast<NodeId>(tree_.parent_.size()));
    tree_.child_count_.push_back(count);
    for (std::uint32_t c = 0; c < count; ++c) {
      tree_.parent_.push_back(static_cast<std::int32_t>(me));
      tree_.depth_.push_back(tree_.depth_[me] + 1);
    }
  }

  NodeId cursor() const { return next_; }
  bool done() const { return next_ == tree_.parent_.size(); }

  Tree finish() {
    while (!done()) add_children(0);
    tree_.height_ = tree_.depth_.back();
    return std::move(tree_);
  }

 private:
  Tree tree_;
  NodeId next_ = 0;
};

using TreePtr = std::shared_ptr<const Tree>;

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Galton-Watson tree: every node at depth < max_depth draws Poisson(d)
/// children; generation stops at max_depth. Throws CapacityError (carrying
/// the partial size) if the node cap is exceeded, so the caller can retry
/// with a smaller depth or a larger cap.
inline Tree generate_gw_tree(double d, std::uint32_t max_depth,
                             std::uint64_t seed,
                             std::uint64_t node_cap = kDefaultNodeCap) {
  if (!(d > 0.0)) throw ParamError("generate_gw_tree: d > 0 required");
  if (node_cap < 1) throw ParamError("generate_gw_tree: node_cap > 0 required");
  Rng rng(seed);
  TreeBuilder b;
  while (!b.done()) {
    std::uint32_t c =
        b.depth(b.cursor()) < max_depth ? rng.poisson(d) : 0;
    if (b.size() + c > node_cap)
      throw CapacityError("generate_gw_tree: node cap exceeded", b.size());
    b.add_children(c);
  }
  return b.finish();
}

/// Complete arity-ary tree of the given depth: every internal node has
/// exactly `arity` children, so the depth-r level has arity^r nodes.
inline Tree generate_regular_tree(std::uint32_t arity, std::uint32_t depth,
                                  std::uint64_t node_cap = kDefaultNodeCap) {
  if (arity < 1) throw ParamError("generate_regular_tree: arity >= 1 required");
  // Closed-form size check before building anything.
  __uint128_t total = 1, level = 1;
  for (std::uint32_t i = 0; i < depth; ++i) {
    level *= arity;
    total += level;
    if (total > node_cap)
      throw CapacityError("generate_regular_tree: node cap exceeded",
                          static_cast<std::uint64_t>(total - level));
  }
  TreeBuilder b;
  while (!b.done())
    b.add_children(b.depth(b.cursor()) < depth ? arity : 0);
  return b.finish();
}

// ---------------------------------------------------------------------------
// Broadcast process
// ---------------------------------------------------------------------------

/// Broadcast channel configuration: alphabet size k, flip parameter eta
/// (each non-root node copies its parent's label with probability
/// 1-(k-1)*eta and otherwise takes a uniform different label), reveal
/// probability p, and an optional noise parameter delta for the noisy
/// labels tau_noisy (kept with probability mu = 1 - k*delta, otherwise
/// re-drawn uniformly over all k labels).
struct BroadcastConfig {
  std::uint32_t k = 2;
  double eta = 0.0;
  double p = 0.0;
  double delta = 0.0;
  std::optional<Label> forced_root;  // condition the root label
  bool interior_reveal_only = false; // restrict R to non-leaf nodes

  double lambda() const { return 1.0 - static_cast<double>(k) * eta; }
  double mu() const { return 1.0 - static_cast<double>(k) * delta; }

  void validate() const {
    if (k < 2) throw ParamError("BroadcastConfig: k >= 2 required");
    if (!(eta >= 0.0 && eta < 1.0 / k))
      throw ParamError("BroadcastConfig: 0 <= eta < 1/k required");
    if (!(p >= 0.0 && p <= 1.0))
      throw ParamError("BroadcastConfig: p in [0,1] required");
    if (!(delta >= 0.0 && delta < 1.0 / k))
      throw ParamError("BroadcastConfig: 0 <= delta < 1/k required");
    if (forced_root && (*forced_root < 1 || *forced_root > k))
      throw ParamError("BroadcastConfig: forced_root in {1..k} required");
  }
};

/// Tree with broadcast labels, revealed set, and optional noisy labels.
/// `copied` records, per node, whether the edge from its parent applied the
/// copy branch of the channel (root entry is always 1); the set of nodes
/// whose whole root path copied realizes bond percolation with retention
/// lambda = 1 - k*eta.
struct LabeledTree {
  TreePtr tree_ptr;
  BroadcastConfig cfg;
  std::vector<Label> tau;
  std::vector<std::uint8_t> revealed;
  std::vector<Label> tau_noisy;  // empty unless cfg.delta > 0
  std::vector<std::uint8_t> copied;

  const Tree& tree() const { return *tree_ptr; }
  std::size_t size() const { return tau.size(); }
};

/// Runs the k-label broadcast process down the tree, then draws the
/// revealed set, then (if delta > 0) the noisy labels. The label sampler
/// uses the equivalent copy/re-randomize form of the channel: with
/// probability lambda = 1-k*eta the parent label is copied, otherwise the
/// label is re-drawn uniformly over all k. Deterministic given the seed.
inline LabeledTree broadcast(TreePtr tree, const BroadcastConfig& cfg,
                             std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const Tree& t = *tree;
  const std::size_t n = t.size();
  const double lambda = cfg.lambda();

  LabeledTree lt;
  lt.tree_ptr = std::move(tree);
  lt.cfg = cfg;
  lt.tau.resize(n);
  lt.copied.resize(n);
  lt.tau[0] = cfg.forced_root ? *cfg.forced_root : rng.uniform_label(cfg.k);
  lt.copied[0] = 1;
  for (NodeId v = 1; v < n; ++v) {
    bool copy = rng.bernoulli(lambda);
    lt.copied[v] = copy ? 1 : 0;
    lt.tau[v] = copy ? lt.tau[t.parent(v)] : rng.uniform_label(cfg.k);
  }

  lt.revealed.assign(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (cfg.interior_reveal_only && t.child_count(v) == 0) continue;
    if (rng.bernoulli(cfg.p)) lt.revealed[v] = 1;
  }

  if (cfg.delta > 0.0) {
    const double mu = cfg.mu();
    lt.tau_noisy.resize(n);
    for (NodeId v = 0; v < n; ++v)
      lt.tau_noisy[v] = rng.bernoulli(mu) ? lt.tau[v] : rng.uniform_label(cfg.k);
  }
  return lt;
}

inline LabeledTree broadcast(Tree tree, const BroadcastConfig& cfg,
                             std::uint64_t seed) {
  return broadcast(std::make_shared<const Tree>(std::move(tree)), cfg, seed);
}

// ---------------------------------------------------------------------------
// Percolation
// ---------------------------------------------------------------------------

/// Result of bond percolation: per-node retention of the parent edge, the
/// root component membership, and per-level census counts of the component
/// and of its revealed part.
struct PercolationOutcome {
  std::vector<std::uint8_t> retained;      // parent-edge retained (root: 1)
  std::vector<std::uint8_t> in_component;  // member of C(root)
  std::vector<std::uint64_t> level_total;
  std::vector<std::uint64_t> level_revealed;

  bool survives_to(std::uint32_t ell) const {
    return ell < level_total.size() && level_total[ell] > 0;
  }
};

/// Retains each edge independently with probability lambda (lambda is the
/// retention probability) and reports the root component with its level
/// census.
inline PercolationOutcome percolate(const LabeledTree& lt, double lambda,
                                    std::uint64_t seed) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParamError("percolate: lambda in [0,1] required");
  const Tree& t = lt.tree();
  Rng rng(seed);
  PercolationOutcome out;
  const std::size_t n = t.size();
  out.retained.resize(n);
  out.in_component.resize(n);
  out.level_total.assign(t.height() + 1, 0);
  out.level_revealed.assign(t.height() + 1, 0);
  out.retained[0] = 1;
  out.in_component[0] = 1;
  for (NodeId v = 1; v < n; ++v) {
    out.retained[v] = rng.bernoulli(lambda) ? 1 : 0;
    out.in_component[v] = out.retained[v] && out.in_component[t.parent(v)];
  }
  for (NodeId v = 0; v < n; ++v) {
    if (!out.in_component[v]) continue;
    ++out.level_total[t.depth(v)];
    if (lt.revealed[v]) ++out.level_revealed[t.depth(v)];
  }
  return out;
}

/// Level census of the percolation component, without materializing the
/// tree: only the retained offspring of component nodes are expanded
/// (subtrees hanging off deleted edges cannot contribute to C(root)), so
/// supercritical d*lambda processes can be followed to depths where the
/// full tree would be astronomically large. Distribution-exact for
/// Poisson(d) offspring. Reveals are drawn per component node with
/// probability p.
struct PercolationLevels {
  std::vector<std::uint64_t> level_total;
  std::vector<std::uint64_t> level_revealed;
};

inline PercolationLevels percolated_level_census(
    double d, double lambda, double p, std::uint32_t max_depth,
    std::uint64_t seed, std::uint64_t node_cap = kDefaultNodeCap) {
  if (!(d > 0.0)) throw ParamError("percolated_level_census: d > 0 required");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParamError("percolated_level_census: lambda in [0,1] required");
  if (!(p >= 0.0 && p <= 1.0))
    throw ParamError("percolated_level_census: p in [0,1] required");
  Rng rng(seed);
  PercolationLevels out;
  out.level_total.assign(max_depth + 1, 0);
  out.level_revealed.assign(max_depth + 1, 0);
  std::uint64_t cur = 1;
  out.level_total[0] = 1;
  out.level_revealed[0] = rng.bernoulli(p) ? 1 : 0;
  std::uint64_t produced = 1;
  for (std::uint32_t ell = 0; ell < max_depth && cur > 0; ++ell) {
    std::uint64_t next = 0;
    for (std::uint64_t i = 0; i < cur; ++i) {
      std::uint32_t kids = rng.poisson(d);
      for (std::uint32_t c = 0; c < kids; ++c)
        if (rng.bernoulli(lambda)) ++next;
    }
    produced += next;
    if (produced > node_cap)
      throw CapacityError("percolated_level_census: node cap exceeded",
                          produced);
    std::uint64_t rev = 0;
    for (std::uint64_t i = 0; i < next; ++i)
      if (rng.bernoulli(p)) ++rev;
    out.level_total[ell + 1] = next;
    out.level_revealed[ell + 1] = rev;
    cur = next;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Degree pruning
// ---------------------------------------------------------------------------

/// Result of high-degree pruning. When the root itself exceeds the bound
/// nothing useful survives: the result is flagged and reduced to a bare
/// root so downstream recovery can fall back to a uniform guess.
struct PruneResult {
  Tree tree;
  bool root_violated = false;
  std::vector<NodeId> orig_ids;  // new id -> id in the input tree
};

/// Deletes every node whose total degree (parent edge plus children)
/// exceeds D, together with its whole subtree. Node ids are remapped
/// densely; `orig_ids` maps them back. Idempotent: degrees only shrink
/// when subtrees are removed.
inline PruneResult prune_high_degree(const Tree& t, std::uint32_t D) {
  if (D < 1) throw ParamError("prune_high_degree: D >= 1 required");
  PruneResult res;
  if (t.degree(0) > D) {
    res.tree = Tree::single_root();
    res.root_violated = true;
    res.orig_ids = {0};
    return res;
  }
  const std::size_t n = t.size();
  std::vector<std::uint8_t> keep(n, 0);
  keep[0] = 1;
  for (NodeId v = 1; v < n; ++v)
    keep[v] = keep[t.parent(v)] && t.degree(v) <= D;

  // Filtering a BFS layout preserves it: each node's kept children stay
  // consecutive because a node's child range contains no other node's ids.
  std::vector<NodeId> new_id(n, 0);
  std::vector<std::int32_t> parents;
  for (NodeId v = 0; v < n; ++v) {
    if (!keep[v]) continue;
    new_id[v] = static_cast<NodeId>(res.orig_ids.size());
    res.orig_ids.push_back(v);
    parents.push_back(v == 0 ? -1
                             : static_cast<std::int32_t>(new_id[t.parent(v)]));
  }
  std::vector<NodeId> perm;
  res.tree = Tree::from_parents(parents, &perm);
  std::vector<NodeId> remapped(res.orig_ids.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    remapped[perm[i]] = res.orig_ids[i];
  res.orig_ids = std::move(remapped);
  return res;
}

// ---------------------------------------------------------------------------
// Double-mutation event
// ---------------------------------------------------------------------------

/// True iff two depth-(ell+1) nodes lying in distinct root subtrees share a
/// label different from the root's. Returns false when the level is empty.
inline bool mutation_pair_event(const LabeledTree& lt, std::uint32_t ell) {
  const Tree& t = lt.tree();
  auto [lo, hi] = t.level_range(ell + 1);
  if (lo == hi) return false;
  const Label root_label = lt.tau[0];
  // Root-subtree id of each node: itself for root children, inherited below.
  std::vector<NodeId> subtree(hi, 0);
  for (NodeId v = 1; v < hi; ++v) {
    auto par = static_cast<NodeId>(t.parent(v));
    subtree[v] = par == 0 ? v : subtree[par];
  }
  std::vector<NodeId> first_seen(lt.cfg.k + 1, 0);  // 0 = unseen
  for (NodeId v = lo; v < hi; ++v) {
    Label l = lt.tau[v];
    if (l == root_label) continue;
    if (first_seen[l] == 0)
      first_seen[l] = subtree[v];
    else if (first_seen[l] != subtree[v])
      return true;
  }
  return false;
}

}  // namespace blocklab
