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
//
// Acceptance suite: one pass/fail line per criterion. Every tolerance is
// pinned in code; the master seed is fixed so results are reproducible.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "blocklab/config.hpp"
#include "blocklab/experiments.hpp"
#include "blocklab/inference.hpp"

#include "oracles.hpp"

using namespace blocklab;

namespace {

constexpr std::uint64_t kAcceptanceSeed = kDefaultSeed;

ParsedConfig cfg_from(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("master_seed")) j["master_seed"] = kAcceptanceSeed;
  return parse_experiment_config(j);
}

const SummaryRecord& find_record(const std::vector<SummaryRecord>& records,
                                 const std::string& estimator,
                                 std::size_t occurrence = 0) {
  std::size_t seen = 0;
  for (const auto& r : records)
    if (r.estimator == estimator && seen++ == occurrence) return r;
  throw Error("record not found: " + estimator);
}

Tree random_tree(std::uint32_t n, Rng& rng) {
  std::vector<std::int32_t> parents(n);
  parents[0] = -1;
  for (std::uint32_t v = 1; v < n; ++v)
    parents[v] = static_cast<std::int32_t>(rng.below(v));
  return Tree::from_parents(parents);
}

// --- criterion 1: BP equals the enumeration oracle ------------------------

bool criterion1(std::ostream& os) {
  Rng rng(derive_seed(kAcceptanceSeed, 1));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::uint32_t n = 1 + rng.below(12);
    std::uint32_t k = 2 + rng.below(3);
    double eta = rng.next_unit() * 0.9 / k;
    double delta = rng.next_unit() * 0.9 / k;
    Tree t = random_tree(n, rng);
    Evidence ev;
    ev.noisy_delta = delta;
    std::vector<bool> clamped(n, false);
    for (NodeId v = 0; v < n; ++v)
      if (rng.next_unit() < 0.45) {
        bool noisy = delta > 0.0 && rng.bernoulli(0.5);
        ev.add(v, rng.uniform_label(k),
               noisy ? EvidenceRole::kNoisy : EvidenceRole::kClampedBoundary);
        clamped[v] = clamped[v] || !noisy;
      }
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
      worst = std::max(worst, std::fabs(a.probs[j] - b.probs[j]));
  }
  os << "max-norm(bp - brute force) = " << worst << " over 1000 trees"
     << " (tolerance 1e-9)";
  return worst <= 1e-9;
}

// --- criterion 2: census moment law ----------------------------------------

bool criterion2(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"tree_recovery","trials":100000,
          "forced_root":1,"report_census_mean":true,"evidence":"boundary",
          "grid":{"method":["census"],"d":[3],"lambda":[0.6],"k":[3],
                  "depth":[6],"mu":[1.0,0.5]}})");
  auto records = run_tree_recovery(pc.cfg);
  const double scale = std::pow(1.8, 6);  // (d*lambda)^ell
  bool ok = true;
  std::ostringstream detail;
  const double mus[2] = {1.0, 0.5};
  for (int cell = 0; cell < 2; ++cell) {
    for (int j = 0; j < 3; ++j) {
      double expect = mus[cell] * scale * (j == 0 ? 2.0 / 3.0 : -1.0 / 3.0);
      const SummaryRecord& r = find_record(
          records, "census_mean_" + std::to_string(j + 1), cell);
      double rel = std::fabs(r.estimate - expect) / std::fabs(expect);
      ok = ok && rel <= 0.05;
      if (j == 0)
        detail << " mu=" << mus[cell] << ": est=" << r.estimate
               << " expect=" << expect << " rel=" << rel << ";";
    }
  }
  os << "census mean coordinates within 5% of mu*(d*lambda)^l*(e_i - 1/k):"
     << detail.str();
  return ok;
}

// --- criterion 3: finite-radius two-cluster bound ---------------------------

bool criterion3(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"lemmas","check":"eq7","trials":10000,
          "grid":{"a":[3],"b":[1],"p":[0.04],"depth":[10]}})");
  auto records = run_lemma_checks(pc.cfg);
  const SummaryRecord& sq = find_record(records, "sq_mean_abs_cond_exp");
  const SummaryRecord& bound = find_record(records, "eq7_bound");
  const double pinned = 0.0809765625;  // 0.04/0.5 + 0.5^10
  bool bound_ok = std::fabs(bound.estimate - pinned) <= 1e-12;
  bool holds = sq.estimate <= pinned + 3.0 * sq.stderror;
  os << "squared mean |E[tau_root|tau_W]| = " << sq.estimate << " <= "
     << pinned << " + 3se (se=" << sq.stderror << ")";
  return bound_ok && holds;
}

// --- criterion 4: sub-threshold census is null ------------------------------

bool criterion4(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"tree_recovery","trials":10000,"evidence":"boundary",
          "grid":{"method":["census"],"a":[3],"b":[1],"k":[2],"p":[0],
                  "depth":[12]}})");
  auto records = run_tree_recovery(pc.cfg);
  const SummaryRecord& acc = find_record(records, "accuracy");
  bool ok = std::fabs(acc.estimate - 0.5) <= 3.0 * acc.stderror;
  os << "boundary census accuracy = " << acc.estimate << " +- "
     << acc.stderror << " (3se interval contains 0.5)";
  return ok;
}

// --- criterion 5: super-threshold recovery ----------------------------------

bool criterion5(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"tree_recovery","trials":10000,"evidence":"boundary",
          "grid":{"method":["census","bp"],"a":[10],"b":[2],"k":[2],
                  "p":[0],"depth":[6]}})");
  auto records = run_tree_recovery(pc.cfg);
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t cell = 0; cell < 2; ++cell) {
    const SummaryRecord& acc = find_record(records, "accuracy", cell);
    bool excl = acc.estimate - 3.0 * acc.stderror > 0.5;
    bool floor = acc.estimate >= 0.55;
    ok = ok && excl && floor;
    detail << " " << acc.cell.method << "=" << acc.estimate << "+-"
           << acc.stderror << ";";
  }
  os << "census and bp accuracies exclude 0.5 and clear 0.55:" << detail.str();
  return ok;
}

// --- criterion 6: many-clusters regime below the KS bound -------------------

bool criterion6(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"tree_recovery","trials":10000,"evidence":"revealed",
          "grid":{"method":["common_ancestor"],"a":[98],"b":[2],"k":[64],
                  "p":[0.3],"depth":[3],"D":[12]}})");
  auto records = run_tree_recovery(pc.cfg);
  const SummaryRecord& acc = find_record(records, "accuracy");
  const double target = 1.0 / 64.0 + 0.01;
  os << "common-ancestor accuracy = " << acc.estimate << " +- "
     << acc.stderror << " (target >= " << target << ")";
  return acc.estimate >= target;
}

// --- criterion 7: percolation census and double-mutation ceilings -----------

bool criterion7(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"lemmas","check":"percolation_census","trials":10000,
          "grid":{"d":[3],"lambda":[0.5],"p":[0.3],"B":[2]}})");
  auto perc = run_lemma_checks(pc.cfg);
  const SummaryRecord& freq = find_record(perc, "census_success_freq");
  bool census_ok = freq.estimate - 3.0 * freq.stderror > 0.0;

  ParsedConfig mc = cfg_from(
      R"({"experiment":"lemmas","check":"mutation_pair","trials":10000,
          "grid":{"arity":[3],"ell":[3],"k":[10000],"eta":[0.00005]}})");
  auto mut = run_lemma_checks(mc.cfg);
  const SummaryRecord& mfreq = find_record(mut, "mutation_event_freq");
  const SummaryRecord& mbound = find_record(mut, "mutation_bound");
  bool mutation_ok = mfreq.estimate <= mbound.estimate + 3.0 * mfreq.stderror;

  os << "census success at ell=" << *freq.cell.ell << " is " << freq.estimate
     << " (CI excludes 0); mutation freq " << mfreq.estimate << " <= bound "
     << mbound.estimate << " + 3se";
  return census_ok && mutation_ok;
}

// --- criterion 8: posterior-distance grid ----------------------------------

bool criterion8(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"conjecture","trials":1000,
          "grid":{"arity":[3],"depth":[10],
                  "eta":[0.1,0.21132486540518708,0.3,0.4],
                  "p":[0.01,0.05,0.1,0.2]}})");
  auto records = run_conjecture_sim(pc.cfg);
  std::string csv = csv_string(records);
  bool produced = records.size() == 64 && csv.find("dist_LR_R") !=
                                              std::string::npos;
  bool in_range = true, nested = true;
  for (std::size_t cell = 0; cell < 16; ++cell) {
    const SummaryRecord& dist = find_record(records, "dist_LR_R", cell);
    in_range = in_range && dist.estimate >= 0.0 && dist.estimate <= 1.0;
    const SummaryRecord& dr = find_record(records, "absdev_R", cell);
    const SummaryRecord& dlr = find_record(records, "absdev_LR", cell);
    double joint = std::sqrt(dr.stderror * dr.stderror +
                             dlr.stderror * dlr.stderror);
    nested = nested && dlr.estimate >= dr.estimate - 3.0 * joint;
  }
  // Smoke cell: eta = 0 with everything revealed pins both posteriors.
  ParsedConfig smoke = cfg_from(
      R"({"experiment":"conjecture","trials":200,
          "grid":{"arity":[3],"depth":[10],"eta":[0.0],"p":[1.0]}})");
  auto smoke_records = run_conjecture_sim(smoke.cfg);
  const SummaryRecord& sdist = find_record(smoke_records, "dist_LR_R");
  bool smoke_zero = sdist.estimate == 0.0 && sdist.stderror == 0.0;
  os << "grid rows=" << records.size() << ", distances in [0,1]="
     << (in_range ? "yes" : "no") << ", nested ordering="
     << (nested ? "yes" : "no") << ", eta=0 smoke distance=" << sdist.estimate;
  return produced && in_range && nested && smoke_zero;
}

// --- criterion 9: percolation survival --------------------------------------

bool criterion9(std::ostream& os) {
  ParsedConfig pc = cfg_from(
      R"({"experiment":"lemmas","check":"percolation_census","trials":10000,
          "grid":{"d":[3],"lambda":[0.5],"p":[1.0],"B":[1],"ell":[20]}})");
  auto records = run_lemma_checks(pc.cfg);
  const SummaryRecord& freq = find_record(records, "census_success_freq");
  const double survival = 1.0 - oracles::branching_extinction_prob(1.5);
  bool ok = std::fabs(freq.estimate - survival) <= 3.0 * freq.stderror;
  os << "survival to depth 20 = " << freq.estimate << " vs fixed point "
     << survival << " (3se=" << 3.0 * freq.stderror << ")";
  return ok;
}

// --- criterion 10: byte-identical output across thread counts ---------------

bool criterion10(std::ostream& os) {
  const std::vector<std::string> configs = {
      R"({"experiment":"conjecture","trials":40,
          "grid":{"arity":[3],"depth":[6],"eta":[0.1,0.3],"p":[0.05,0.2]}})",
      R"({"experiment":"tree_recovery","trials":300,"evidence":"boundary",
          "grid":{"method":["census","bp"],"a":[10],"b":[2],"k":[2],
                  "p":[0],"depth":[5]}})",
      R"({"experiment":"tree_recovery","trials":300,"evidence":"revealed",
          "grid":{"method":["common_ancestor"],"a":[98],"b":[2],"k":[64],
                  "p":[0.3],"depth":[3],"D":[12]}})",
      R"({"experiment":"sbm_recovery","trials":4,"centers_per_graph":100,
          "grid":{"method":["bp","census"],"n":[5000],"a":[10],"b":[2],
                  "k":[2],"p":[0.2],"radius":[2]}})",
      R"({"experiment":"lemmas","check":"eq7","trials":500,
          "grid":{"a":[3],"b":[1],"p":[0.04],"depth":[8]}})",
      R"({"experiment":"lemmas","check":"percolation_census","trials":500,
          "grid":{"d":[3],"lambda":[0.5],"p":[0.3],"B":[2]}})",
      R"({"experiment":"lemmas","check":"mutation_pair","trials":500,
          "grid":{"arity":[3],"ell":[2],"k":[100],"eta":[0.001]}})",
      R"({"experiment":"local_sanity","trials":3,
          "grid":{"n":[5000],"a":[10],"b":[2],"k":[2],"radius":[2]}})"};
  bool ok = true;
  int checked = 0;
  for (const auto& text : configs) {
    ParsedConfig pc = cfg_from(text);
    pc.cfg.threads = 1;
    std::string csv1 = csv_string(run_experiment(pc.cfg));
    pc.cfg.threads = 4;
    std::string csv4 = csv_string(run_experiment(pc.cfg));
    pc.cfg.threads = 8;
    std::string csv8 = csv_string(run_experiment(pc.cfg));
    std::string rerun = csv_string(run_experiment(pc.cfg));
    bool same = csv1 == csv4 && csv1 == csv8 && csv1 == rerun;
    ok = ok && same;
    ++checked;
    if (!same) os << " mismatch in config " << checked << ";";
  }
  os << checked << " experiment configs byte-identical under 1/4/8 threads "
     << "and rerun";
  return ok;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::ostream&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "bp exactness against the enumeration oracle", criterion1},
      {2, "census moment law", criterion2},
      {3, "finite-radius two-cluster bound", criterion3},
      {4, "sub-threshold census null", criterion4},
      {5, "super-threshold recovery", criterion5},
      {6, "many-clusters regime below the KS bound", criterion6},
      {7, "percolation census and double-mutation ceilings", criterion7},
      {8, "posterior-distance grid", criterion8},
      {9, "percolation survival fixed point", criterion9},
      {10, "byte-identical output across thread counts", criterion10},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      selected.push_back(std::atoi(argv[++i]));
  }

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end())
      continue;
    std::ostringstream detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
    }
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
              << c.name << " - " << detail.str() << std::endl;
    failures += !pass;
  }
  return failures;
}
