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
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blocklab/errors.hpp"
#include "blocklab/rng.hpp"
#include "blocklab/types.hpp"

namespace blocklab {

// ---------------------------------------------------------------------------
// Model parameters
// ---------------------------------------------------------------------------

/// Block-model constants. Edge probability is a/n inside a cluster and b/n
/// across clusters; each node's true label is revealed independently with
/// probability p.
struct SbmParams {
  std::uint32_t n = 0;
  std::uint32_t k = 2;
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;

  void validate() const {
    if (n < 1) throw ParamError("SbmParams: n >= 1 required");
    if (k < 2) throw ParamError("SbmParams: k >= 2 required");
    if (!(b >= 0.0)) throw ParamError("SbmParams: b >= 0 required");
    // a == b is tolerated here so degenerate benchmarks (e.g. complete
    // graphs) can be generated; the derived tree parameters insist on a > b.
    if (!(a >= b)) throw ParamError("SbmParams: a >= b required");
    if (!(a <= static_cast<double>(n)))
      throw ParamError("SbmParams: a <= n required (edge probability a/n)");
    if (!(p >= 0.0 && p <= 1.0))
      throw ParamError("SbmParams: p in [0,1] required");
  }
};

/// Tree-side constants derived from (a, b, k): mean offspring d, flip
/// parameter eta, and copy probability lambda = 1 - k*eta.
struct TreeParams {
  double d = 0.0;
  double eta = 0.0;
  double lambda = 0.0;

  double d_lambda() const { return d * lambda; }
  double d_lambda_sq() const { return d * lambda * lambda; }
};

inline TreeParams derived_params(double a, double b, std::uint32_t k) {
  if (k < 2) throw ParamError("derived_params: k >= 2 required");
  if (!(b >= 0.0)) throw ParamError("derived_params: b >= 0 required");
  if (!(a > b)) throw ParamError("derived_params: a > b required");
  double s = a + (k - 1) * b;
  if (!(s > 0.0)) throw ParamError("derived_params: a + (k-1)b > 0 required");
  TreeParams t;
  t.d = s / k;
  t.eta = b / s;
  t.lambda = (a - b) / s;
  return t;
}

/// Threshold indicators. ks_above is d*lambda^2 > 1 (equivalently
/// (a-b)^2 > k(a+(k-1)b)); tree_above is d*lambda > 1 (equivalently
/// (a-b)/k > 1). Ties report false: the statements are strict.
struct ThresholdReport {
  bool ks_above = false;
  bool tree_above = false;
  double d_lambda = 0.0;
  double d_lambda_sq = 0.0;
};

inline ThresholdReport threshold_report(double a, double b, std::uint32_t k) {
  TreeParams t = derived_params(a, b, k);
  ThresholdReport r;
  r.d_lambda = t.d_lambda();
  r.d_lambda_sq = t.d_lambda_sq();
  r.ks_above = r.d_lambda_sq > 1.0;
  r.tree_above = r.d_lambda > 1.0;
  return r;
}

/// Radius below which a sparse-graph neighborhood is tree-like a.a.s.:
/// log(n) / (10 log(2(a+(k-1)b))). Returns the real value; callers floor it.
/// The ratio is base-independent; natural logarithms are used. The constant
/// 1/10 is very conservative at desk scale, so algorithms also consult the
/// empirical Neighborhood::is_tree flag.
inline double coupling_radius(double n, double a, double b, std::uint32_t k) {
  if (!(n >= 2.0)) throw ParamError("coupling_radius: n >= 2 required");
  double arg = 2.0 * (a + static_cast<double>(k - 1) * b);
  if (!(arg > 1.0))
    throw ParamError("coupling_radius: 2(a+(k-1)b) > 1 required");
  return std::log(n) / (10.0 * std::log(arg));
}

inline std::uint32_t coupling_radius_floor(double n, double a, double b,
                                           std::uint32_t k) {
  return static_cast<std::uint32_t>(std::floor(coupling_radius(n, a, b, k)));
}

// ---------------------------------------------------------------------------
// Labeled graph
// ---------------------------------------------------------------------------

/// Sparse undirected graph with hidden labels sigma and revealed set R.
/// Adjacency lists are sorted ascending; sigma may be empty for imported
/// hidden-label benchmarks.
struct LabeledGraph {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::vector<std::vector<NodeId>> adjacency;
  std::vector<Label> sigma;
  std::vector<std::uint8_t> revealed_mask;
  std::vector<NodeId> revealed;  // sorted
  std::uint64_t num_edges = 0;

  std::uint32_t degree(NodeId v) const {
    return static_cast<std::uint32_t>(adjacency[v].size());
  }

  void validate() const {
    if (adjacency.size() != n) throw ParamError("LabeledGraph: bad adjacency size");
    if (!sigma.empty() && sigma.size() != n)
      throw ParamError("LabeledGraph: sigma size must be 0 or n");
    for (Label l : sigma)
      if (l < 1 || l > k) throw ParamError("LabeledGraph: sigma out of {1..k}");
    std::uint64_t half_edges = 0;
    for (NodeId u = 0; u < n; ++u) {
      const auto& adj = adjacency[u];
      if (!std::is_sorted(adj.begin(), adj.end()))
        throw ParamError("LabeledGraph: adjacency not sorted");
      if (std::adjacent_find(adj.begin(), adj.end()) != adj.end())
        throw ParamError("LabeledGraph: duplicate edge");
      for (NodeId v : adj) {
        if (v >= n) throw ParamError("LabeledGraph: neighbor out of range");
        if (v == u) throw ParamError("LabeledGraph: self-loop");
        const auto& back = adjacency[v];
        if (!std::binary_search(back.begin(), back.end(), u))
          throw ParamError("LabeledGraph: adjacency not symmetric");
      }
      half_edges += adj.size();
    }
    if (half_edges != 2 * num_edges)
      throw ParamError("LabeledGraph: edge count mismatch");
    for (NodeId v : revealed)
      if (v >= n) throw ParamError("LabeledGraph: revealed node out of range");
  }
};

/// Builds a LabeledGraph from an explicit edge list (shared by tests and
/// import). Edges are deduplicated; self-loops rejected.
inline LabeledGraph graph_from_edges(
    std::uint32_t n, std::uint32_t k,
    const std::vector<std::pair<NodeId, NodeId>>& edges,
    std::vector<Label> sigma = {}, std::vector<NodeId> revealed = {}) {
  LabeledGraph g;
  g.n = n;
  g.k = k;
  g.adjacency.assign(n, {});
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw ParamError("graph_from_edges: node out of range");
    if (u == v) throw ParamError("graph_from_edges: self-loop");
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  g.num_edges = 0;
  for (auto& adj : g.adjacency) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    g.num_edges += adj.size();
  }
  g.num_edges /= 2;
  g.sigma = std::move(sigma);
  std::sort(revealed.begin(), revealed.end());
  revealed.erase(std::unique(revealed.begin(), revealed.end()), revealed.end());
  g.revealed_mask.assign(n, 0);
  for (NodeId v : revealed) {
    if (v >= n) throw ParamError("graph_from_edges: revealed node out of range");
    g.revealed_mask[v] = 1;
  }
  g.revealed = std::move(revealed);
  return g;
}

namespace detail {

/// Visits each of `total` slots independently with probability `prob`,
/// using geometric skips so runtime is proportional to the number of hits.
template <typename Fn>
void skip_sample(std::uint64_t total, double prob, Rng& rng, Fn&& hit) {
  if (total == 0 || prob <= 0.0) return;
  if (prob >= 1.0) {
    for (std::uint64_t i = 0; i < total; ++i) hit(i);
    return;
  }
  const double log1m = std::log1p(-prob);
  double pos = -1.0;  // index of the previous hit
  while (true) {
    double skip = std::floor(std::log(rng.next_unit_open()) / log1m);
    pos += 1.0 + skip;
    if (pos >= static_cast<double>(total)) return;
    hit(static_cast<std::uint64_t>(pos));
  }
}

/// Decodes a linear index over the s*(s-1)/2 unordered pairs of {0..s-1}
/// enumerated as (0,1),(0,2),...,(0,s-1),(1,2),... into (row, col).
inline std::pair<std::uint64_t, std::uint64_t> decode_pair(std::uint64_t idx,
                                                           std::uint64_t s) {
  // offset(r) = r*(s-1) - r*(r-1)/2 is the index of the first pair in row r.
  auto offset = [s](std::uint64_t r) {
    return r * (s - 1) - r * (r - 1) / 2;
  };
  double sd = static_cast<double>(s);
  double disc = (sd - 0.5) * (sd - 0.5) - 2.0 * static_cast<double>(idx);
  std::uint64_t r = 0;
  if (disc > 0.0) {
    double est = sd - 0.5 - std::sqrt(disc);
    r = est > 0.0 ? static_cast<std::uint64_t>(est) : 0;
    if (r >= s - 1) r = s - 2;
  }
  while (r + 1 < s - 1 && offset(r + 1) <= idx) ++r;
  while (r > 0 && offset(r) > idx) --r;
  std::uint64_t col = r + 1 + (idx - offset(r));
  return {r, col};
}

}  // namespace detail

/// Samples (G, sigma, R). Labels are i.i.d. uniform over {1..k}; each
/// intra-cluster pair gets an edge with probability a/n, each inter-cluster
/// pair with probability b/n; each node enters R with probability p.
/// Pair sampling uses geometric skipping over the pair index space of each
/// cluster pair, so generation is near-linear in the number of edges.
/// Fully deterministic given the seed.
inline LabeledGraph generate_sbm(const SbmParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);

  LabeledGraph g;
  g.n = params.n;
  g.k = params.k;
  g.sigma.resize(params.n);
  for (NodeId v = 0; v < params.n; ++v) g.sigma[v] = rng.uniform_label(params.k);

  std::vector<std::vector<NodeId>> clusters(params.k);
  for (NodeId v = 0; v < params.n; ++v) clusters[g.sigma[v] - 1].push_back(v);

  const double n_real = static_cast<double>(params.n);
  const double p_in = params.a / n_real;
  const double p_out = params.b / n_real;

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::uint32_t i = 0; i < params.k; ++i) {
    const auto& ci = clusters[i];
    std::uint64_t s = ci.size();
    if (s >= 2) {
      detail::skip_sample(s * (s - 1) / 2, p_in, rng, [&](std::uint64_t idx) {
        auto [r, c] = detail::decode_pair(idx, s);
        edges.emplace_back(ci[r], ci[c]);
      });
    }
    for (std::uint32_t j = i + 1; j < params.k; ++j) {
      const auto& cj = clusters[j];
      if (ci.empty() || cj.empty()) continue;
      std::uint64_t total = static_cast<std::uint64_t>(ci.size()) * cj.size();
      detail::skip_sample(total, p_out, rng, [&](std::uint64_t idx) {
        edges.emplace_back(ci[idx / cj.size()], cj[idx % cj.size()]);
      });
    }
  }

  g.adjacency.assign(params.n, {});
  for (auto [u, v] : edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  g.num_edges = edges.size();

  g.revealed_mask.assign(params.n, 0);
  for (NodeId v = 0; v < params.n; ++v) {
    if (rng.bernoulli(params.p)) {
      g.revealed_mask[v] = 1;
      g.revealed.push_back(v);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Neighborhoods
// ---------------------------------------------------------------------------

/// Radius-r ball around a center: members in BFS order with depths, the
/// depth-r boundary, whether the induced subgraph is acyclic, and the
/// revealed members. bfs_parent holds, for each member position, the member
/// position of its BFS parent (-1 for the center); when is_tree holds this
/// is the unique tree structure of the ball.
struct Neighborhood {
  NodeId center = 0;
  std::uint32_t radius = 0;
  std::vector<NodeId> members;
  std::vector<std::uint32_t> depth;
  std::vector<std::int32_t> bfs_parent;
  std::vector<NodeId> boundary;
  bool is_tree = true;
  std::vector<NodeId> revealed_members;
};

inline Neighborhood neighborhood(const LabeledGraph& g, NodeId v,
                                 std::uint32_t r) {
  if (v >= g.n) throw LookupError("neighborhood: unknown node");
  Neighborhood nb;
  nb.center = v;
  nb.radius = r;

  std::unordered_map<NodeId, std::uint32_t> pos;  // node -> member index
  pos.reserve(64);
  nb.members.push_back(v);
  nb.depth.push_back(0);
  nb.bfs_parent.push_back(-1);
  pos.emplace(v, 0);

  for (std::uint32_t i = 0; i < nb.members.size(); ++i) {
    if (nb.depth[i] == r) continue;
    NodeId u = nb.members[i];
    for (NodeId w : g.adjacency[u]) {
      if (pos.count(w)) continue;
      pos.emplace(w, static_cast<std::uint32_t>(nb.members.size()));
      nb.members.push_back(w);
      nb.depth.push_back(nb.depth[i] + 1);
      nb.bfs_parent.push_back(static_cast<std::int32_t>(i));
    }
  }

  std::uint64_t internal_half_edges = 0;
  for (std::uint32_t i = 0; i < nb.members.size(); ++i) {
    for (NodeId w : g.adjacency[nb.members[i]])
      if (pos.count(w)) ++internal_half_edges;
    if (nb.depth[i] == r) nb.boundary.push_back(nb.members[i]);
    if (!g.revealed_mask.empty() && g.revealed_mask[nb.members[i]])
      nb.revealed_members.push_back(nb.members[i]);
  }
  nb.is_tree = internal_half_edges / 2 == nb.members.size() - 1;
  return nb;
}

}  // namespace blocklab
