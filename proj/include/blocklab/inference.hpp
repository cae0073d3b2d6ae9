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
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "blocklab/errors.hpp"
#include "blocklab/rng.hpp"
#include "blocklab/sbm.hpp"
#include "blocklab/stats.hpp"
#include "blocklab/tree.hpp"
#include "blocklab/types.hpp"

namespace blocklab {

// ---------------------------------------------------------------------------
// Posterior vector
// ---------------------------------------------------------------------------

/// Probability vector over {1..k}: entries >= 0, sum 1 (within 1e-9).
struct PosteriorVector {
  std::vector<double> probs;

  double prob(Label l) const { return probs[l - 1]; }

  /// Most probable label; ties resolve to the smallest label.
  Label argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[best]) best = i;
    return static_cast<Label>(best + 1);
  }
};

// ---------------------------------------------------------------------------
// Evidence
// ---------------------------------------------------------------------------

enum class EvidenceRole : std::uint8_t {
  kRevealedInterior,  // exact label of a revealed node
  kClampedBoundary,   // exact label clamped at the observation horizon
  kNoisy,             // label passed through the mu = 1 - k*delta channel
};

/// Observed labels fed to the posterior calculators. Noisy entries use the
/// `noisy_delta` channel parameter and are only legal when it is set.
struct Evidence {
  struct Entry {
    NodeId node;
    Label label;
    EvidenceRole role;
  };
  std::vector<Entry> entries;
  double noisy_delta = 0.0;

  void add(NodeId node, Label label, EvidenceRole role) {
    entries.push_back({node, label, role});
  }
  bool empty() const { return entries.empty(); }

  void validate(std::size_t tree_size, std::uint32_t k) const {
    if (!(noisy_delta >= 0.0 && noisy_delta < 1.0 / k))
      throw ParamError("Evidence: 0 <= noisy_delta < 1/k required");
    for (const auto& e : entries) {
      if (e.node >= tree_size)
        throw ParamError("Evidence: node outside the tree");
      if (e.label < 1 || e.label > k)
        throw ParamError("Evidence: label outside {1..k}");
    }
  }
};

namespace detail {

/// Sum over label coordinates, performed in ascending value order so the
/// result is invariant under permutations of the alphabet.
inline double label_sum(const double* v, std::uint32_t k) {
  if (k == 2) return v[0] + v[1];
  if (k <= 32) {
    double tmp[32];
    std::copy(v, v + k, tmp);
    std::sort(tmp, tmp + k);
    double s = 0.0;
    for (std::uint32_t i = 0; i < k; ++i) s += tmp[i];
    return s;
  }
  std::vector<double> tmp(v, v + k);
  std::sort(tmp.begin(), tmp.end());
  double s = 0.0;
  for (double x : tmp) s += x;
  return s;
}

/// Multiplies the likelihood factor of one evidence entry into `f` (a
/// k-vector). Exact roles zero out all other labels; the noisy role applies
/// mu*1(l=obs) + (1-mu)/k = mu*1(l=obs) + delta.
inline void apply_evidence_factor(double* f, std::uint32_t k,
                                  const Evidence::Entry& e, double delta) {
  if (e.role == EvidenceRole::kNoisy) {
    double mu = 1.0 - static_cast<double>(k) * delta;
    for (std::uint32_t j = 0; j < k; ++j)
      f[j] *= (j + 1 == e.label ? mu + delta : delta);
  } else {
    for (std::uint32_t j = 0; j < k; ++j)
      if (j + 1 != e.label) f[j] = 0.0;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Belief propagation (exact on trees)
// ---------------------------------------------------------------------------

/// Reusable scratch buffer for bp_posterior; callers in hot loops keep one
/// per thread to avoid reallocation.
struct BpWorkspace {
  std::vector<double> buf;
};

/// Exact root posterior P(tau_root = . | evidence) under the symmetric
/// broadcast channel with uniform root prior, by a single leaf-to-root
/// sum-product pass with per-node renormalization. A node whose belief
/// mass underflows (< 1e-300) is recomputed in the log domain; evidence
/// constellations with exactly zero likelihood yield the uniform vector.
/// Matches brute_force_posterior to 1e-9 on any tree.
inline PosteriorVector bp_posterior(const Tree& t, double eta, std::uint32_t k,
                                    const Evidence& ev, BpWorkspace& ws) {
  if (k < 2) throw ParamError("bp_posterior: k >= 2 required");
  if (!(eta >= 0.0 && eta < 1.0 / k))
    throw ParamError("bp_posterior: 0 <= eta < 1/k required");
  ev.validate(t.size(), k);

  const std::size_t n = t.size();
  const double lambda = 1.0 - static_cast<double>(k) * eta;
  ws.buf.assign(n * k, 1.0);
  double* buf = ws.buf.data();

  for (const auto& e : ev.entries)
    detail::apply_evidence_factor(buf + static_cast<std::size_t>(e.node) * k, k,
                                  e, ev.noisy_delta);

  std::vector<double> bel(k);
  std::vector<double> logs;
  for (std::size_t vi = n; vi-- > 0;) {
    const auto v = static_cast<NodeId>(vi);
    const double* own = buf + vi * k;
    for (std::uint32_t j = 0; j < k; ++j) bel[j] = own[j];
    for (NodeId c = t.child_begin(v); c < t.child_end(v); ++c) {
      const double* msg = buf + static_cast<std::size_t>(c) * k;
      for (std::uint32_t j = 0; j < k; ++j) bel[j] *= msg[j];
    }
    double mass = detail::label_sum(bel.data(), k);
    if (mass < 1e-300) {
      // Log-domain recomputation from the still-intact child messages.
      logs.assign(k, 0.0);
      for (std::uint32_t j = 0; j < k; ++j) logs[j] = std::log(own[j]);
      for (NodeId c = t.child_begin(v); c < t.child_end(v); ++c) {
        const double* msg = buf + static_cast<std::size_t>(c) * k;
        for (std::uint32_t j = 0; j < k; ++j) logs[j] += std::log(msg[j]);
      }
      double top = *std::max_element(logs.begin(), logs.end());
      if (std::isinf(top)) {
        // Zero-likelihood evidence: fall back to the uniform vector.
        std::fill(bel.begin(), bel.end(), 1.0 / k);
        mass = 1.0;
      } else {
        for (std::uint32_t j = 0; j < k; ++j) bel[j] = std::exp(logs[j] - top);
        mass = detail::label_sum(bel.data(), k);
      }
    }
    double* out = buf + vi * k;
    if (v == 0) {
      PosteriorVector post;
      post.probs.resize(k);
      for (std::uint32_t j = 0; j < k; ++j) post.probs[j] = bel[j] / mass;
      return post;
    }
    // Child-to-parent message, normalized: lambda * belief/mass + eta.
    for (std::uint32_t j = 0; j < k; ++j)
      out[j] = lambda * (bel[j] / mass) + eta;
  }
  throw Error("bp_posterior: unreachable");
}

inline PosteriorVector bp_posterior(const Tree& t, double eta, std::uint32_t k,
                                    const Evidence& ev) {
  BpWorkspace ws;
  return bp_posterior(t, eta, k, ev, ws);
}

inline PosteriorVector bp_posterior(const LabeledTree& lt, double eta,
                                    std::uint32_t k, const Evidence& ev) {
  return bp_posterior(lt.tree(), eta, k, ev);
}

// ---------------------------------------------------------------------------
// Brute-force posterior (enumeration oracle)
// ---------------------------------------------------------------------------

inline constexpr double kEnumerationBound = 1e7;

/// Exact root posterior by summing channel likelihoods over all label
/// assignments of the unclamped nodes. Serves as the independent oracle for
/// bp_posterior; throws CapacityError when k^(free nodes) exceeds the
/// enumeration bound.
inline PosteriorVector brute_force_posterior(const Tree& t, double eta,
                                             std::uint32_t k,
                                             const Evidence& ev) {
  if (k < 2) throw ParamError("brute_force_posterior: k >= 2 required");
  if (!(eta >= 0.0 && eta < 1.0 / k))
    throw ParamError("brute_force_posterior: 0 <= eta < 1/k required");
  ev.validate(t.size(), k);

  const std::size_t n = t.size();
  std::vector<Label> clamp(n, 0);  // 0 = free
  bool contradictory = false;
  std::vector<std::vector<Label>> noisy_obs(n);
  for (const auto& e : ev.entries) {
    if (e.role == EvidenceRole::kNoisy) {
      noisy_obs[e.node].push_back(e.label);
    } else {
      if (clamp[e.node] != 0 && clamp[e.node] != e.label) contradictory = true;
      clamp[e.node] = e.label;
    }
  }
  std::size_t free_nodes = 0;
  for (Label c : clamp) free_nodes += c == 0;
  if (static_cast<double>(free_nodes) * std::log(static_cast<double>(k)) >
      std::log(kEnumerationBound))
    throw CapacityError("brute_force_posterior: instance too large",
                        free_nodes);

  std::vector<double> totals(k, 0.0);
  if (!contradictory) {
    const double same = 1.0 - (k - 1) * eta;
    const double mu = 1.0 - static_cast<double>(k) * ev.noisy_delta;
    std::vector<Label> value(n, 0);

    // Depth-first over nodes in id order; parents precede children, so the
    // parent label is always set when a node's channel factor is needed.
    auto weight_at = [&](NodeId v, Label l) {
      double w = 1.0;
      if (v != 0)
        w *= (value[t.parent(v)] == l) ? same : eta;
      for (Label obs : noisy_obs[v])
        w *= (obs == l ? mu + ev.noisy_delta : ev.noisy_delta);
      return w;
    };
    auto recurse = [&](auto&& self, NodeId v, double w) -> void {
      if (v == n) {
        totals[value[0] - 1] += w;
        return;
      }
      if (clamp[v] != 0) {
        value[v] = clamp[v];
        double wc = w * weight_at(v, clamp[v]);
        if (wc != 0.0) self(self, v + 1, wc);
        return;
      }
      for (Label l = 1; l <= k; ++l) {
        value[v] = l;
        double wl = w * weight_at(v, l);
        if (wl != 0.0) self(self, v + 1, wl);
      }
    };
    recurse(recurse, 0, 1.0);
  }

  double total = 0.0;
  for (double x : totals) total += x;
  PosteriorVector post;
  post.probs.assign(k, 1.0 / k);
  if (total > 0.0)
    for (std::uint32_t j = 0; j < k; ++j) post.probs[j] = totals[j] / total;
  return post;
}

// ---------------------------------------------------------------------------
// Census / plurality reconstruction
// ---------------------------------------------------------------------------

/// Centered label-count vector at one level: s_i = (#nodes with label i)
/// - level_size/k. Coordinates sum to zero.
struct CensusVector {
  std::vector<double> s;
  std::uint32_t level = 0;
};

struct CensusResult {
  Label label = 1;
  CensusVector census;
  bool level_empty = false;
};

/// Noisy labels built from the revealed set: the true label where revealed,
/// a uniform draw otherwise. Equals the mu = p noise channel in
/// distribution.
inline std::vector<Label> noisy_from_reveals(const LabeledTree& lt,
                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Label> out(lt.size());
  for (NodeId v = 0; v < lt.size(); ++v)
    out[v] = lt.revealed[v] ? lt.tau[v] : rng.uniform_label(lt.cfg.k);
  return out;
}

/// Plurality reconstruction from the level-ell census. With use_noisy the
/// noisy labels tau_noisy are counted (they must be present); otherwise the
/// true labels are counted (the fully observed boundary case). An empty
/// level yields a uniform random guess and the zero vector. Ties resolve
/// to the smallest label.
inline CensusResult census_recover(const LabeledTree& lt, std::uint32_t ell,
                                   bool use_noisy, std::uint64_t seed) {
  const Tree& t = lt.tree();
  const std::uint32_t k = lt.cfg.k;
  if (use_noisy && lt.tau_noisy.size() != lt.size())
    throw ParamError("census_recover: tau_noisy not populated");
  const std::vector<Label>& labels = use_noisy ? lt.tau_noisy : lt.tau;

  CensusResult res;
  res.census.level = ell;
  res.census.s.assign(k, 0.0);
  auto [lo, hi] = t.level_range(ell);
  if (lo == hi) {
    res.level_empty = true;
    res.label = Rng(seed).uniform_label(k);
    return res;
  }
  std::vector<std::uint64_t> counts(k, 0);
  for (NodeId v = lo; v < hi; ++v) ++counts[labels[v] - 1];
  const double shift = static_cast<double>(hi - lo) / k;
  std::size_t best = 0;
  for (std::uint32_t j = 0; j < k; ++j) {
    res.census.s[j] = static_cast<double>(counts[j]) - shift;
    if (counts[j] > counts[best]) best = j;
  }
  res.label = static_cast<Label>(best + 1);
  return res;
}

/// Same recovery given noisy labels supplied externally (graph-side path).
inline CensusResult census_recover_with_labels(const Tree& t, std::uint32_t k,
                                               const std::vector<Label>& labels,
                                               std::uint32_t ell,
                                               std::uint64_t seed) {
  LabeledTree tmp;
  tmp.tree_ptr = std::make_shared<const Tree>(t);
  tmp.cfg.k = k;
  tmp.tau = labels;
  tmp.revealed.assign(t.size(), 0);
  return census_recover(tmp, ell, false, seed);
}

// ---------------------------------------------------------------------------
// Common-ancestor recovery
// ---------------------------------------------------------------------------

/// Root-label recovery by revealed first-common-ancestor pairs: prune nodes
/// of degree > D, collect the labels carried by two revealed depth-r nodes
/// lying in distinct root subtrees, and return a uniform choice among them.
/// An empty candidate set (or a pruned-away root) falls back to a uniform
/// guess over all k labels, preserving the 1/k baseline. Never throws for
/// valid inputs; deterministic given the seed.
inline Label common_ancestor_recover(const LabeledTree& lt, std::uint32_t r,
                                     std::uint32_t D, std::uint64_t seed) {
  if (r < 1) throw ParamError("common_ancestor_recover: r >= 1 required");
  const std::uint32_t k = lt.cfg.k;
  Rng rng(seed);
  PruneResult pruned = prune_high_degree(lt.tree(), D);
  if (pruned.root_violated) return rng.uniform_label(k);

  const Tree& pt = pruned.tree;
  auto [lo, hi] = pt.level_range(r);
  std::vector<NodeId> subtree(hi, 0);
  for (NodeId v = 1; v < hi; ++v) {
    auto par = static_cast<NodeId>(pt.parent(v));
    subtree[v] = par == 0 ? v : subtree[par];
  }
  std::vector<NodeId> first_seen(k + 1, 0);
  std::vector<std::uint8_t> in_set(k + 1, 0);
  for (NodeId v = lo; v < hi; ++v) {
    NodeId orig = pruned.orig_ids[v];
    if (!lt.revealed[orig]) continue;
    Label l = lt.tau[orig];
    if (first_seen[l] == 0)
      first_seen[l] = subtree[v];
    else if (first_seen[l] != subtree[v])
      in_set[l] = 1;
  }
  std::vector<Label> candidates;
  for (Label l = 1; l <= k; ++l)
    if (in_set[l]) candidates.push_back(l);
  if (candidates.empty()) return rng.uniform_label(k);
  return candidates[rng.below(static_cast<std::uint32_t>(candidates.size()))];
}

/// Evidence clamping the true labels of the depth-`ell` level.
inline Evidence boundary_evidence(const LabeledTree& lt, std::uint32_t ell) {
  Evidence ev;
  auto [lo, hi] = lt.tree().level_range(ell);
  for (NodeId v = lo; v < hi; ++v)
    ev.add(v, lt.tau[v], EvidenceRole::kClampedBoundary);
  return ev;
}

/// Evidence clamping the labels of the revealed set; the root's own reveal
/// can be excluded when the root is the quantity being predicted.
inline Evidence revealed_evidence(const LabeledTree& lt,
                                  bool exclude_root = false) {
  Evidence ev;
  for (NodeId v = exclude_root ? 1 : 0; v < lt.size(); ++v)
    if (lt.revealed[v]) ev.add(v, lt.tau[v], EvidenceRole::kRevealedInterior);
  return ev;
}

// ---------------------------------------------------------------------------
// Plurality label map
// ---------------------------------------------------------------------------

enum class ClusterRule : std::uint8_t {
  kPlurality,      // g(i) = plurality of revealed true labels
  kRandomMap,      // no revealed member: g(i) drawn uniformly, flagged
  kRandomPerNode,  // cluster below the size floor: members get i.i.d. labels
};

/// Map g: [k] -> [k] from cluster ids to labels, with the per-cluster rule
/// that was applied. Not necessarily a bijection.
struct LabelMap {
  std::vector<Label> g;
  std::vector<ClusterRule> rule;
};

/// Builds the map from a clustering and the revealed true labels: clusters
/// holding fewer than min_cluster_fraction * n nodes are assigned
/// per-member random labels; other clusters map to the plurality of their
/// revealed members (ties to the smallest label), or to a flagged uniform
/// draw when none of their members is revealed.
inline LabelMap plurality_map(const std::vector<Label>& assignment,
                              std::uint32_t k,
                              const std::vector<NodeId>& revealed_nodes,
                              const std::vector<Label>& revealed_labels,
                              double min_cluster_fraction, std::uint64_t seed) {
  if (revealed_nodes.size() != revealed_labels.size())
    throw ParamError("plurality_map: revealed nodes/labels size mismatch");
  const std::size_t n = assignment.size();
  for (Label c : assignment)
    if (c < 1 || c > k) throw ParamError("plurality_map: assignment outside {1..k}");
  for (Label l : revealed_labels)
    if (l < 1 || l > k) throw ParamError("plurality_map: revealed label outside {1..k}");

  std::vector<std::uint64_t> cluster_size(k, 0);
  for (Label c : assignment) ++cluster_size[c - 1];
  std::vector<std::vector<std::uint64_t>> hist(k,
                                               std::vector<std::uint64_t>(k, 0));
  for (std::size_t i = 0; i < revealed_nodes.size(); ++i) {
    NodeId v = revealed_nodes[i];
    if (v >= n) throw ParamError("plurality_map: revealed node out of range");
    ++hist[assignment[v] - 1][revealed_labels[i] - 1];
  }

  Rng rng(seed);
  const double floor_size = min_cluster_fraction * static_cast<double>(n);
  LabelMap map;
  map.g.assign(k, 1);
  map.rule.assign(k, ClusterRule::kPlurality);
  for (std::uint32_t i = 0; i < k; ++i) {
    if (static_cast<double>(cluster_size[i]) < floor_size) {
      map.rule[i] = ClusterRule::kRandomPerNode;
      continue;
    }
    std::uint64_t total = 0, best_count = 0;
    std::uint32_t best = 0;
    for (std::uint32_t j = 0; j < k; ++j) {
      total += hist[i][j];
      if (hist[i][j] > best_count) {
        best_count = hist[i][j];
        best = j;
      }
    }
    if (total == 0) {
      map.rule[i] = ClusterRule::kRandomMap;
      map.g[i] = rng.uniform_label(k);
    } else {
      map.g[i] = static_cast<Label>(best + 1);
    }
  }
  return map;
}

/// Applies the map to a clustering; random-per-node clusters draw fresh
/// labels from the seed.
inline std::vector<Label> apply_label_map(const LabelMap& map,
                                          const std::vector<Label>& assignment,
                                          std::uint64_t seed) {
  Rng rng(seed);
  const auto k = static_cast<std::uint32_t>(map.g.size());
  std::vector<Label> out(assignment.size());
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    Label c = assignment[v];
    out[v] = map.rule[c - 1] == ClusterRule::kRandomPerNode
                 ? rng.uniform_label(k)
                 : map.g[c - 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analytic bounds (two-label channel)
// ---------------------------------------------------------------------------

/// Evaluates 2 * sum_{v in W} (1-2*eta)^(2*depth(v)), the conditional-mean
/// bound for the two-label channel with the observation set W separating
/// itself from the root.
inline double ekps_bound(const Tree& t, std::span<const NodeId> w,
                         double eta) {
  if (!(eta >= 0.0 && eta <= 0.5))
    throw ParamError("ekps_bound: eta in [0, 1/2] required");
  if (w.empty()) throw ParamError("ekps_bound: W must be nonempty");
  const double theta = 1.0 - 2.0 * eta;
  double sum = 0.0;
  for (NodeId v : w) {
    if (v >= t.size()) throw LookupError("ekps_bound: unknown node");
    sum += std::pow(theta * theta, static_cast<double>(t.depth(v)));
  }
  return 2.0 * sum;
}

/// Asymptotic posterior-deviation bound for two clusters below threshold:
/// (1/2) * sqrt(p / (1 - (a-b)^2 / (2(a+b)))). Undefined at or above the
/// threshold (a-b)^2 >= 2(a+b).
inline double two_cluster_bound(double a, double b, double p) {
  if (!(b >= 0.0 && a > b)) throw ParamError("two_cluster_bound: a > b >= 0 required");
  if (!(p > 0.0 && p <= 1.0)) throw ParamError("two_cluster_bound: p in (0,1] required");
  const double ratio = (a - b) * (a - b) / (2.0 * (a + b));
  if (ratio >= 1.0)
    throw BoundDomainError("two_cluster_bound: requires (a-b)^2 < 2(a+b)");
  return 0.5 * std::sqrt(p / (1.0 - ratio));
}

/// Finite-radius variant (pre square root): p / (1 - d(1-2*eta)^2)
/// + (d(1-2*eta)^2)^r with d = (a+b)/2 and eta = b/(a+b).
inline double two_cluster_bound_finite_r(double a, double b, double p,
                                         std::uint32_t r) {
  if (!(b >= 0.0 && a > b))
    throw ParamError("two_cluster_bound_finite_r: a > b >= 0 required");
  if (!(p > 0.0 && p <= 1.0))
    throw ParamError("two_cluster_bound_finite_r: p in (0,1] required");
  const double ratio = (a - b) * (a - b) / (2.0 * (a + b));
  if (ratio >= 1.0)
    throw BoundDomainError(
        "two_cluster_bound_finite_r: requires (a-b)^2 < 2(a+b)");
  return p / (1.0 - ratio) + std::pow(ratio, static_cast<double>(r));
}

// ---------------------------------------------------------------------------
// Graph neighborhoods as trees
// ---------------------------------------------------------------------------

/// A tree-checked neighborhood lifted to a LabeledTree: labels come from
/// sigma, the revealed mask from R with the center excluded (the center is
/// the node being classified). graph_ids maps tree ids back to graph nodes.
struct NeighborhoodTree {
  LabeledTree ltree;
  std::vector<NodeId> graph_ids;
};

inline NeighborhoodTree tree_from_neighborhood(const LabeledGraph& g,
                                               const Neighborhood& nb) {
  if (!nb.is_tree)
    throw StructureError(
        "tree_from_neighborhood: neighborhood contains a cycle");
  if (g.sigma.empty())
    throw ParamError("tree_from_neighborhood: graph has no labels");
  std::vector<NodeId> perm;
  Tree t = Tree::from_parents(nb.bfs_parent, &perm);
  const std::size_t m = nb.members.size();
  NeighborhoodTree out;
  out.graph_ids.resize(m);
  out.ltree.tau.resize(m);
  out.ltree.revealed.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    NodeId tid = perm[i];
    NodeId gid = nb.members[i];
    out.graph_ids[tid] = gid;
    out.ltree.tau[tid] = g.sigma[gid];
    out.ltree.revealed[tid] = gid != nb.center && g.revealed_mask[gid] ? 1 : 0;
  }
  out.ltree.tree_ptr = std::make_shared<const Tree>(std::move(t));
  out.ltree.cfg.k = g.k;
  return out;
}

}  // namespace blocklab
