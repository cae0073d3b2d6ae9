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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blocklab/inference.hpp"
#include "blocklab/rng.hpp"
#include "blocklab/stats.hpp"
#include "blocklab/tree.hpp"

#include "oracles.hpp"

using namespace blocklab;

namespace {

/// Random tree on n nodes: each node's parent drawn among earlier nodes.
Tree random_tree(std::uint32_t n, Rng& rng) {
  std::vector<std::int32_t> parents(n);
  parents[0] = -1;
  for (std::uint32_t v = 1; v < n; ++v)
    parents[v] = static_cast<std::int32_t>(rng.below(v));
  return Tree::from_parents(parents);
}

}  // namespace

TEST_CASE("bp posterior basics") {
  SUBCASE("no evidence is uniform") {
    Tree t = generate_regular_tree(2, 3);
    Evidence ev;
    PosteriorVector post = bp_posterior(t, 0.1, 4, ev);
    for (double p : post.probs) CHECK(p == doctest::Approx(0.25));
  }
  SUBCASE("single revealed child: one-step channel update") {
    Tree t = generate_regular_tree(1, 1);
    Evidence ev;
    ev.add(1, 1, EvidenceRole::kRevealedInterior);
    PosteriorVector post = bp_posterior(t, 0.1, 2, ev);
    CHECK(post.probs[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(post.probs[1] == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("revealed grandchild composes the channel") {
    Tree t = generate_regular_tree(1, 2);
    Evidence ev;
    ev.add(2, 1, EvidenceRole::kClampedBoundary);
    PosteriorVector post = bp_posterior(t, 0.1, 2, ev);
    CHECK(post.probs[0] == doctest::Approx(0.82).epsilon(1e-12));
  }
  SUBCASE("revealed root pins the posterior") {
    Tree t = generate_regular_tree(2, 2);
    Evidence ev;
    ev.add(0, 2, EvidenceRole::kRevealedInterior);
    PosteriorVector post = bp_posterior(t, 0.05, 3, ev);
    CHECK(post.probs[1] == doctest::Approx(1.0));
  }
  SUBCASE("invalid inputs are rejected") {
    Tree t = generate_regular_tree(1, 1);
    Evidence ev;
    ev.add(1, 5, EvidenceRole::kRevealedInterior);
    CHECK_THROWS_AS(bp_posterior(t, 0.1, 2, ev), ParamError);
    Evidence far;
    far.add(9, 1, EvidenceRole::kRevealedInterior);
    CHECK_THROWS_AS(bp_posterior(t, 0.1, 2, far), ParamError);
    Evidence none;
    CHECK_THROWS_AS(bp_posterior(t, 0.6, 2, none), ParamError);
  }
}

TEST_CASE("bp equals brute force on random instances") {
  Rng rng(2024);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    std::uint32_t n = 1 + rng.below(12);
    std::uint32_t k = 2 + rng.below(3);
    double eta = rng.next_unit() * 0.9 / k;
    double delta = rng.next_unit() * 0.9 / k;
    Tree t = random_tree(n, rng);
    Evidence ev;
    ev.noisy_delta = delta;
    std::vector<bool> clamped(n, false);
    for (NodeId v = 0; v < n; ++v) {
      if (rng.next_unit() < 0.45) {
        Label obs = rng.uniform_label(k);
        bool noisy = delta > 0.0 && rng.bernoulli(0.5);
        ev.add(v, obs,
               noisy ? EvidenceRole::kNoisy : EvidenceRole::kClampedBoundary);
        clamped[v] = clamped[v] || !noisy;
      }
    }
    // keep k^free within the enumeration oracle's bound
    std::uint32_t free_nodes = 0;
    for (bool c : clamped) free_nodes += !c;
    for (NodeId v = 0; free_nodes > 11 && v < n; ++v) {
      if (clamped[v]) continue;
      ev.add(v, rng.uniform_label(k), EvidenceRole::kClampedBoundary);
      clamped[v] = true;
      --free_nodes;
    }
    PosteriorVector a = bp_posterior(t, eta, k, ev);
    PosteriorVector b = brute_force_posterior(t, eta, k, ev);
    for (std::uint32_t j = 0; j < k; ++j)
      CHECK(std::fabs(a.probs[j] - b.probs[j]) <= 1e-9);
    ++checked;
  }
  CHECK(checked == 400);
}

TEST_CASE("posterior normalization and non-negativity") {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    std::uint32_t n = 2 + rng.below(30);
    std::uint32_t k = 2 + rng.below(4);
    double eta = 0.001 + rng.next_unit() * 0.8 / k;
    Tree t = random_tree(n, rng);
    Evidence ev;
    for (NodeId v = 1; v < n; ++v)
      if (rng.bernoulli(0.3))
        ev.add(v, rng.uniform_label(k), EvidenceRole::kRevealedInterior);
    PosteriorVector post = bp_posterior(t, eta, k, ev);
    double sum = 0.0;
    for (double p : post.probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("alphabet permutation permutes the posterior exactly") {
  Rng rng(123);
  const std::uint32_t k = 3;
  const std::vector<Label> perm = {3, 1, 2};  // label l -> perm[l-1]
  for (int i = 0; i < 100; ++i) {
    std::uint32_t n = 2 + rng.below(12);
    double eta = rng.next_unit() * 0.9 / k;
    Tree t = random_tree(n, rng);
    Evidence ev, ev_perm;
    double delta = rng.next_unit() * 0.5 / k;
    ev.noisy_delta = ev_perm.noisy_delta = delta;
    for (NodeId v = 1; v < n; ++v)
      if (rng.bernoulli(0.5)) {
        Label obs = rng.uniform_label(k);
        auto role = rng.bernoulli(0.5) ? EvidenceRole::kNoisy
                                       : EvidenceRole::kClampedBoundary;
        ev.add(v, obs, role);
        ev_perm.add(v, perm[obs - 1], role);
      }
    PosteriorVector a = bp_posterior(t, eta, k, ev);
    PosteriorVector b = bp_posterior(t, eta, k, ev_perm);
    for (Label l = 1; l <= k; ++l)
      CHECK(a.probs[l - 1] == b.probs[perm[l - 1] - 1]);  // bitwise equal
  }
}

TEST_CASE("brute force refuses oversized instances") {
  Rng rng(7);
  Tree t = random_tree(13, rng);  // 4^13 > 1e7
  Evidence ev;
  CHECK_THROWS_AS(brute_force_posterior(t, 0.05, 4, ev), CapacityError);
}

TEST_CASE("census recovery") {
  SUBCASE("centered counts and plurality label") {
    // root with three children at level 1: labels 1,1,2 plus root's label
    // counted at level 0; use a level-1 census over counts (5,2,3) by a
    // hand-built star of 10 leaves.
    std::vector<std::int32_t> parents(11, 0);
    parents[0] = -1;
    LabeledTree lt;
    lt.tree_ptr = std::make_shared<const Tree>(Tree::from_parents(parents));
    lt.cfg.k = 3;
    lt.tau = {1, 1, 1, 1, 1, 1, 2, 2, 3, 3, 3};
    lt.revealed.assign(11, 0);
    CensusResult res = census_recover(lt, 1, false, 0);
    CHECK(res.label == 1);
    CHECK(res.census.s[0] == doctest::Approx(5.0 - 10.0 / 3.0));
    CHECK(res.census.s[1] == doctest::Approx(2.0 - 10.0 / 3.0));
    CHECK(res.census.s[2] == doctest::Approx(3.0 - 10.0 / 3.0));
    double sum = res.census.s[0] + res.census.s[1] + res.census.s[2];
    CHECK(std::fabs(sum) <= 1e-9);
  }
  SUBCASE("unanimous level returns its label") {
    BroadcastConfig cfg;
    cfg.k = 4;
    cfg.eta = 0.0;
    cfg.p = 0.0;
    LabeledTree lt = broadcast(generate_regular_tree(2, 4), cfg, 3);
    CensusResult res = census_recover(lt, 4, false, 0);
    CHECK(res.label == lt.tau[0]);
  }
  SUBCASE("empty level degenerates to a uniform guess and zero vector") {
    BroadcastConfig cfg;
    cfg.k = 6;
    cfg.eta = 0.05;
    cfg.p = 0.0;
    LabeledTree lt = broadcast(generate_regular_tree(2, 2), cfg, 4);
    std::vector<std::uint64_t> counts(6, 0);
    for (int i = 0; i < 60000; ++i) {
      CensusResult res = census_recover(lt, 9, false, derive_seed(5, i));
      CHECK(res.level_empty);
      for (double s : res.census.s) CHECK(s == 0.0);
      ++counts[res.label - 1];
    }
    double stat = oracles::uniform_chi_square(counts);
    CHECK(oracles::chi_square_pvalue(stat, 5.0) > 1e-3);
  }
  SUBCASE("noisy census requires the noisy labels") {
    BroadcastConfig cfg;
    cfg.k = 2;
    cfg.eta = 0.1;
    cfg.p = 0.0;
    LabeledTree lt = broadcast(generate_regular_tree(2, 2), cfg, 5);
    CHECK_THROWS_AS(census_recover(lt, 2, true, 0), ParamError);
  }
  SUBCASE("census is unbiased under a uniform root") {
    BroadcastConfig cfg;
    cfg.k = 3;
    cfg.eta = 0.08;
    cfg.p = 0.0;
    const int trials = 20000;
    std::vector<std::vector<double>> coords(3, std::vector<double>(trials));
    for (int i = 0; i < trials; ++i) {
      LabeledTree lt =
          broadcast(generate_gw_tree(2.5, 4, derive_seed(600, i)), cfg,
                    derive_seed(601, i));
      CensusResult res = census_recover(lt, 4, false, derive_seed(602, i));
      for (int j = 0; j < 3; ++j) coords[j][i] = res.census.s[j];
    }
    for (int j = 0; j < 3; ++j) {
      Summary s = summarize(coords[j]);
      CHECK(std::fabs(s.mean) < 3.0 * s.stderror + 1e-9);
    }
  }
}

TEST_CASE("common-ancestor recovery") {
  SUBCASE("a single cross-subtree pair forces the label") {
    // root; children 1,2; leaves 3 under 1, 4 under 2 (depth 2)
    std::vector<std::int32_t> parents = {-1, 0, 0, 1, 2};
    LabeledTree lt;
    lt.tree_ptr = std::make_shared<const Tree>(Tree::from_parents(parents));
    lt.cfg.k = 5;
    lt.cfg.eta = 0.1;
    lt.tau = {1, 2, 4, 3, 3};
    lt.revealed = {0, 0, 0, 1, 1};
    for (int i = 0; i < 20; ++i)
      CHECK(common_ancestor_recover(lt, 2, 10, derive_seed(10, i)) == 3);
  }
  SUBCASE("pairs under one child do not qualify") {
    // both revealed depth-2 nodes sit under child 1
    std::vector<std::int32_t> parents = {-1, 0, 0, 1, 1};
    LabeledTree lt;
    lt.tree_ptr = std::make_shared<const Tree>(Tree::from_parents(parents));
    lt.cfg.k = 4;
    lt.tau = {1, 2, 2, 3, 3};
    lt.revealed = {0, 0, 0, 1, 1};
    std::vector<std::uint64_t> counts(4, 0);
    for (int i = 0; i < 100000; ++i)
      ++counts[common_ancestor_recover(lt, 2, 10, derive_seed(11, i)) - 1];
    double stat = oracles::uniform_chi_square(counts);
    CHECK(oracles::chi_square_pvalue(stat, 3.0) > 1e-3);
  }
  SUBCASE("never throws and falls back over pruned-away roots") {
    Tree star = generate_regular_tree(5, 1);
    LabeledTree lt;
    lt.tree_ptr = std::make_shared<const Tree>(star);
    lt.cfg.k = 3;
    lt.tau.assign(star.size(), 1);
    lt.revealed.assign(star.size(), 1);
    for (int i = 0; i < 50; ++i) {
      Label l = common_ancestor_recover(lt, 1, 2, derive_seed(12, i));
      CHECK(l >= 1);
      CHECK(l <= 3);
    }
  }
  SUBCASE("pruning removes candidates behind high-degree nodes") {
    // root -> hub (4 children incl. leaf at depth 2) and a thin branch
    std::vector<std::int32_t> parents = {-1, 0, 0, 1, 1, 1, 1, 2};
    // deg(1) = 1 + 4 = 5; nodes 3..6 under hub; node 7 under 2
    LabeledTree lt;
    lt.tree_ptr = std::make_shared<const Tree>(Tree::from_parents(parents));
    lt.cfg.k = 4;
    lt.tau = {1, 2, 2, 3, 3, 3, 3, 3};
    lt.revealed = {0, 0, 0, 1, 1, 1, 1, 1};
    // With D=10: label 3 appears at depth 2 in both subtrees -> returns 3.
    CHECK(common_ancestor_recover(lt, 2, 10, 1) == 3);
    // With D=4 the hub is pruned; only node 7 remains at depth 2 -> fallback.
    std::vector<std::uint64_t> seen(4, 0);
    for (int i = 0; i < 2000; ++i)
      ++seen[common_ancestor_recover(lt, 2, 4, derive_seed(13, i)) - 1];
    CHECK(seen[0] > 0);  // fallback produces labels other than 3 as well
  }
}

TEST_CASE("plurality label map") {
  SUBCASE("plurality and documented tie-break") {
    // two clusters; revealed histogram cluster1 {1:7, 2:3}, cluster2 tie {1:5, 2:5}
    std::vector<Label> assign(40, 1);
    for (int i = 20; i < 40; ++i) assign[i] = 2;
    std::vector<NodeId> nodes;
    std::vector<Label> labels;
    for (int i = 0; i < 7; ++i) { nodes.push_back(i); labels.push_back(1); }
    for (int i = 7; i < 10; ++i) { nodes.push_back(i); labels.push_back(2); }
    for (int i = 20; i < 25; ++i) { nodes.push_back(i); labels.push_back(1); }
    for (int i = 25; i < 30; ++i) { nodes.push_back(i); labels.push_back(2); }
    LabelMap map = plurality_map(assign, 2, nodes, labels, 0.01, 1);
    CHECK(map.g[0] == 1);
    CHECK(map.rule[0] == ClusterRule::kPlurality);
    CHECK(map.g[1] == 1);  // tie -> smallest label
  }
  SUBCASE("small clusters get per-node random labels") {
    std::vector<Label> assign(100, 1);
    assign[99] = 2;  // cluster 2 holds 1% of nodes
    LabelMap map = plurality_map(assign, 2, {0}, {1}, 0.05, 2);
    CHECK(map.rule[1] == ClusterRule::kRandomPerNode);
    std::vector<Label> out = apply_label_map(map, assign, 3);
    CHECK(out[0] == 1);
  }
  SUBCASE("large cluster without reveals is flagged random") {
    std::vector<Label> assign(100, 1);
    for (int i = 50; i < 100; ++i) assign[i] = 2;
    LabelMap map = plurality_map(assign, 2, {0, 1}, {2, 2}, 0.05, 4);
    CHECK(map.rule[0] == ClusterRule::kPlurality);
    CHECK(map.rule[1] == ClusterRule::kRandomMap);
  }
  SUBCASE("planted overlap survives the mapping") {
    const std::uint32_t n = 10000, k = 2;
    const double eps = 0.2, p = 0.1;
    int good = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(900, t));
      std::vector<Label> sigma(n), assign(n);
      for (NodeId v = 0; v < n; ++v) {
        sigma[v] = rng.uniform_label(k);
        bool agree = rng.bernoulli(1.0 / k + eps);
        assign[v] = agree ? sigma[v] : (sigma[v] == 1 ? 2 : 1);
      }
      std::vector<NodeId> nodes;
      std::vector<Label> labels;
      for (NodeId v = 0; v < n; ++v)
        if (rng.bernoulli(p)) {
          nodes.push_back(v);
          labels.push_back(sigma[v]);
        }
      LabelMap map = plurality_map(assign, k, nodes, labels, 0.01,
                                   rng.next_u64());
      std::vector<Label> out = apply_label_map(map, assign, rng.next_u64());
      std::uint64_t agree = 0;
      for (NodeId v = 0; v < n; ++v) agree += out[v] == sigma[v];
      double frac = static_cast<double>(agree) / n;
      good += frac >= 1.0 / k + eps / 2.0;
    }
    CHECK(good >= 190);  // >= 95% of trials
  }
}

TEST_CASE("conditional-mean bound") {
  SUBCASE("root-only observation set") {
    Tree t = Tree::single_root();
    std::vector<NodeId> w = {0};
    CHECK(ekps_bound(t, w, 0.3) == doctest::Approx(2.0));
  }
  SUBCASE("regular boundary") {
    Tree t = generate_regular_tree(3, 2);
    std::vector<NodeId> w;
    auto [lo, hi] = t.level_range(2);
    for (NodeId v = lo; v < hi; ++v) w.push_back(v);
    CHECK(ekps_bound(t, w, 0.25) == doctest::Approx(1.125));
  }
  SUBCASE("empirical mean against the bound") {
    const double d = 2.5, eta = 0.25, p = 0.2;
    const std::uint32_t depth = 6;
    BroadcastConfig cfg;
    cfg.k = 2;
    cfg.eta = eta;
    cfg.p = p;
    const int trials = 10000;
    std::vector<double> cond(trials), bound(trials);
    BpWorkspace ws;
    for (int i = 0; i < trials; ++i) {
      LabeledTree lt =
          broadcast(generate_gw_tree(d, depth, derive_seed(1000, i)), cfg,
                    derive_seed(1001, i));
      std::vector<NodeId> w;
      Evidence ev;
      for (NodeId v = 1; v < lt.size(); ++v)
        if (lt.revealed[v]) {
          w.push_back(v);
          ev.add(v, lt.tau[v], EvidenceRole::kRevealedInterior);
        }
      if (w.empty()) {
        cond[i] = 0.0;
        bound[i] = 0.0;
        continue;
      }
      double p1 = bp_posterior(lt.tree(), eta, 2, ev, ws).probs[0];
      cond[i] = std::fabs(2.0 * p1 - 1.0);
      bound[i] = ekps_bound(lt.tree(), w, eta);
    }
    Summary c = summarize(cond);
    Summary b = summarize(bound);
    CHECK(c.mean * c.mean <= b.mean + 3.0 * b.stderror);
  }
}

TEST_CASE("information monotonicity under nested evidence") {
  const double d = 2.0, eta = 0.12, p = 0.1;
  const std::uint32_t depth = 6;
  BroadcastConfig cfg;
  cfg.k = 2;
  cfg.eta = eta;
  cfg.p = p;
  const int trials = 10000;
  std::vector<double> dev_w1(trials), dev_both(trials);
  BpWorkspace ws;
  for (int i = 0; i < trials; ++i) {
    LabeledTree lt =
        broadcast(generate_gw_tree(d, depth, derive_seed(1100, i)), cfg,
                  derive_seed(1101, i));
    Evidence w1 = revealed_evidence(lt, /*exclude_root=*/true);
    Evidence both = w1;
    for (const auto& e : boundary_evidence(lt, depth).entries)
      both.entries.push_back(e);
    double p1 = bp_posterior(lt.tree(), eta, 2, w1, ws).probs[0];
    double p2 = bp_posterior(lt.tree(), eta, 2, both, ws).probs[0];
    dev_w1[i] = std::fabs(p1 - 0.5);
    dev_both[i] = std::fabs(p2 - 0.5);
  }
  Summary s1 = summarize(dev_w1);
  Summary s2 = summarize(dev_both);
  double joint = std::sqrt(s1.stderror * s1.stderror +
                           s2.stderror * s2.stderror);
  CHECK(s2.mean >= s1.mean - 3.0 * joint);
}

TEST_CASE("two-cluster bounds") {
  SUBCASE("closed form") {
    CHECK(two_cluster_bound(3.0, 1.0, 0.04) ==
          doctest::Approx(0.1414213562).epsilon(1e-6));
  }
  SUBCASE("vanishing reveal probability sends the bound to zero") {
    CHECK(two_cluster_bound(3.0, 1.0, 1e-12) < 1e-5);
  }
  SUBCASE("finite-radius variant") {
    CHECK(two_cluster_bound_finite_r(3.0, 1.0, 0.04, 10) ==
          doctest::Approx(0.0809765625).epsilon(1e-12));
  }
  SUBCASE("above threshold the bound is undefined") {
    CHECK_THROWS_AS(two_cluster_bound(10.0, 2.0, 0.04), BoundDomainError);
    CHECK_THROWS_AS(two_cluster_bound_finite_r(10.0, 2.0, 0.04, 5),
                    BoundDomainError);
  }
}

TEST_CASE("neighborhood-to-tree adapter") {
  SUBCASE("cycles are rejected") {
    LabeledGraph g =
        graph_from_edges(3, 2, {{0, 1}, {1, 2}, {0, 2}}, {1, 2, 1});
    Neighborhood nb = neighborhood(g, 0, 1);
    CHECK_THROWS_AS(tree_from_neighborhood(g, nb), StructureError);
  }
  SUBCASE("labels map through and the center reveal is dropped") {
    LabeledGraph g = graph_from_edges(4, 2, {{0, 1}, {0, 2}, {2, 3}},
                                      {1, 2, 1, 2}, {0, 1, 3});
    Neighborhood nb = neighborhood(g, 0, 2);
    NeighborhoodTree nt = tree_from_neighborhood(g, nb);
    CHECK(nt.ltree.size() == 4);
    CHECK(nt.ltree.tau[0] == 1);          // center keeps its true label
    CHECK(nt.ltree.revealed[0] == 0);     // but its reveal is dropped
    std::uint32_t revealed = 0;
    for (auto r : nt.ltree.revealed) revealed += r;
    CHECK(revealed == 2);
  }
}
