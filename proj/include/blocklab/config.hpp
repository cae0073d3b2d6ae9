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
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "blocklab/errors.hpp"
#include "blocklab/experiments.hpp"

namespace blocklab {

/// Parsed experiment config plus its canonical JSON form (defaults filled,
/// keys sorted). Reloading the canonical form yields the same canonical
/// form.
struct ParsedConfig {
  ExperimentConfig cfg;
  nlohmann::json canonical;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParamError("config: unknown key '" + where + it.key() + "'");
}

/// Reads an axis as a nonempty array (a scalar is promoted to a
/// one-element axis).
template <typename T>
std::vector<T> read_axis(const json& grid, const std::string& key) {
  const json& v = grid.at(key);
  std::vector<T> out;
  try {
    if (v.is_array())
      out = v.get<std::vector<T>>();
    else
      out.push_back(v.get<T>());
  } catch (const json::exception&) {
    throw ParamError("config: grid." + key + " has the wrong type");
  }
  if (out.empty())
    throw ParamError("config: grid." + key + " must be a nonempty array");
  return out;
}

/// Axis of cell-mutators: one entry per grid value; absent axes become a
/// single no-op entry so the cross product is unaffected.
using Setter = std::function<void(CellParams&)>;

template <typename T, typename Member>
std::vector<Setter> axis(const json& grid, const std::string& key,
                         Member member,
                         std::optional<std::vector<T>> fallback = {}) {
  std::vector<T> values;
  if (grid.contains(key))
    values = read_axis<T>(grid, key);
  else if (fallback)
    values = *fallback;
  else
    return {Setter([](CellParams&) {})};
  std::vector<Setter> out;
  for (const T& v : values)
    out.emplace_back([member, v](CellParams& c) { c.*member = v; });
  return out;
}

inline std::vector<Setter> method_axis(const json& grid,
                                       const std::set<std::string>& allowed) {
  if (!grid.contains("method"))
    throw ParamError("config: grid.method is required");
  auto values = read_axis<std::string>(grid, "method");
  std::vector<Setter> out;
  for (const auto& m : values) {
    if (!allowed.count(m))
      throw ParamError("config: grid.method value '" + m + "' is not allowed");
    out.emplace_back([m](CellParams& c) { c.method = m; });
  }
  return out;
}

/// Cross product of the axes, last axis fastest.
inline std::vector<CellParams> cross_product(
    const std::vector<std::vector<Setter>>& axes) {
  std::vector<CellParams> cells;
  if (axes.empty()) return cells;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    CellParams cell;
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i][idx[i]](cell);
    cells.push_back(std::move(cell));
    std::size_t i = axes.size();
    bool advanced = false;
    while (i-- > 0) {
      if (++idx[i] < axes[i].size()) {
        advanced = true;
        break;
      }
      idx[i] = 0;
    }
    if (!advanced) return cells;
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& what) {
  if (!j.contains(key)) throw ParamError("config: missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParamError("config: key '" + key + "' must be " + what);
  }
}

template <typename T>
T value_or(const json& j, const std::string& key, T fallback,
           const std::string& what) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParamError("config: key '" + key + "' must be " + what);
  }
}

}  // namespace detail

/// Validates and resolves an experiment config from JSON. Unknown keys are
/// rejected; every grid cell is checked against the preconditions of the
/// operations it will drive, and derived quantities (d, eta, lambda, delta)
/// are resolved into the cells.
inline ParsedConfig parse_experiment_config(const nlohmann::json& j) {
  using detail::axis;
  using detail::read_axis;
  using nlohmann::json;

  ParsedConfig out;
  ExperimentConfig& cfg = out.cfg;
  cfg.experiment = detail::require<std::string>(j, "experiment", "a string");

  static const std::set<std::string> kExperiments = {
      "conjecture", "tree_recovery", "sbm_recovery", "lemmas", "local_sanity"};
  if (!kExperiments.count(cfg.experiment))
    throw ParamError("config: experiment '" + cfg.experiment +
                     "' is not one of conjecture|tree_recovery|sbm_recovery|"
                     "lemmas|local_sanity");

  std::set<std::string> allowed = {"experiment", "trials",  "master_seed",
                                   "threads",    "out",     "node_cap",
                                   "grid"};
  if (cfg.experiment == "conjecture") allowed.insert("reveal_leaves");
  if (cfg.experiment == "tree_recovery") {
    allowed.insert("evidence");
    allowed.insert("forced_root");
    allowed.insert("report_census_mean");
  }
  if (cfg.experiment == "sbm_recovery") allowed.insert("centers_per_graph");
  if (cfg.experiment == "lemmas") allowed.insert("check");
  if (cfg.experiment == "local_sanity") allowed.insert("rule");
  detail::reject_unknown_keys(j, allowed, "");

  cfg.trials = detail::value_or<std::uint64_t>(j, "trials", 1000, "an integer");
  if (cfg.trials < 1) throw ParamError("config: trials >= 1 required");
  cfg.master_seed =
      detail::value_or<std::uint64_t>(j, "master_seed", kDefaultSeed,
                                      "an integer");
  cfg.threads = detail::value_or<unsigned>(j, "threads", 0, "an integer");
  cfg.out_dir = detail::value_or<std::string>(j, "out", ".", "a string");
  cfg.node_cap = detail::value_or<std::uint64_t>(j, "node_cap",
                                                 kDefaultNodeCap, "an integer");
  if (cfg.node_cap < 1) throw ParamError("config: node_cap >= 1 required");

  if (!j.contains("grid") || !j.at("grid").is_object())
    throw ParamError("config: grid object is required (grid nonempty)");
  const json& grid = j.at("grid");

  std::vector<std::vector<detail::Setter>> axes;
  std::set<std::string> grid_allowed;

  if (cfg.experiment == "conjecture") {
    cfg.reveal_leaves =
        detail::value_or<bool>(j, "reveal_leaves", false, "a boolean");
    grid_allowed = {"eta", "p", "arity", "depth"};
    detail::reject_unknown_keys(grid, grid_allowed, "grid.");
    if (!grid.contains("eta")) throw ParamError("config: grid.eta is required");
    if (!grid.contains("p")) throw ParamError("config: grid.p is required");
    axes.push_back(axis<std::uint32_t>(grid, "arity", &CellParams::arity,
                                       {{std::uint32_t{3}}}));
    axes.push_back(axis<std::uint32_t>(grid, "depth", &CellParams::depth,
                                       {{std::uint32_t{10}}}));
    axes.push_back(axis<double>(grid, "eta", &CellParams::eta));
    axes.push_back(axis<double>(grid, "p", &CellParams::p));
    cfg.cells = detail::cross_product(axes);
    for (auto& cell : cfg.cells) {
      cell.k = 2;
      if (*cell.arity < 1)
        throw ParamError("config: grid.arity >= 1 required");
      if (*cell.depth < 1)
        throw ParamError("config: grid.depth >= 1 required");
      BroadcastConfig bc;
      bc.k = 2;
      bc.eta = *cell.eta;
      bc.p = *cell.p;
      bc.validate();  // names the violated constraint
      cell.lambda = bc.lambda();
    }
  } else if (cfg.experiment == "tree_recovery") {
    cfg.evidence = detail::value_or<std::string>(j, "evidence", "boundary",
                                                 "a string");
    if (cfg.evidence != "boundary" && cfg.evidence != "revealed")
      throw ParamError("config: evidence must be boundary|revealed");
    cfg.report_census_mean =
        detail::value_or<bool>(j, "report_census_mean", false, "a boolean");
    if (j.contains("forced_root"))
      cfg.forced_root = detail::require<Label>(j, "forced_root", "an integer");
    grid_allowed = {"method", "a", "b", "d",  "k", "p",
                    "eta",    "lambda", "mu", "depth", "D"};
    detail::reject_unknown_keys(grid, grid_allowed, "grid.");
    axes.push_back(detail::method_axis(
        grid, {"census", "bp", "common_ancestor"}));
    axes.push_back(axis<double>(grid, "a", &CellParams::a));
    axes.push_back(axis<double>(grid, "b", &CellParams::b));
    axes.push_back(axis<double>(grid, "d", &CellParams::d));
    axes.push_back(
        axis<std::uint32_t>(grid, "k", &CellParams::k));
    axes.push_back(axis<double>(grid, "p", &CellParams::p, {{0.0}}));
    axes.push_back(axis<double>(grid, "eta", &CellParams::eta));
    axes.push_back(axis<double>(grid, "lambda", &CellParams::lambda));
    axes.push_back(axis<double>(grid, "mu", &CellParams::mu, {{1.0}}));
    axes.push_back(axis<std::uint32_t>(grid, "depth", &CellParams::depth));
    axes.push_back(axis<std::uint32_t>(grid, "D", &CellParams::D));
    if (!grid.contains("k")) throw ParamError("config: grid.k is required");
    if (!grid.contains("depth"))
      throw ParamError("config: grid.depth is required");
    cfg.cells = detail::cross_product(axes);
    for (auto& cell : cfg.cells) {
      const std::uint32_t k = *cell.k;
      if (*cell.depth < 1) throw ParamError("config: grid.depth >= 1 required");
      if (cell.a || cell.b) {
        if (!(cell.a && cell.b))
          throw ParamError("config: grid.a and grid.b must be given together");
        if (cell.d || cell.eta || cell.lambda)
          throw ParamError(
              "config: give either grid.a/grid.b or grid.d with "
              "grid.eta/grid.lambda, not both");
        TreeParams tp = derived_params(*cell.a, *cell.b, k);
        cell.d = tp.d;
        cell.eta = tp.eta;
        cell.lambda = tp.lambda;
      } else {
        if (!cell.d)
          throw ParamError("config: grid.d (or grid.a/grid.b) is required");
        if (!(*cell.d > 0.0)) throw ParamError("config: grid.d > 0 required");
        if (cell.eta && cell.lambda)
          throw ParamError("config: give grid.eta or grid.lambda, not both");
        if (cell.lambda) {
          if (!(*cell.lambda > 0.0 && *cell.lambda <= 1.0))
            throw ParamError("config: grid.lambda in (0,1] required");
          cell.eta = (1.0 - *cell.lambda) / k;
        }
        if (!cell.eta)
          throw ParamError("config: grid.eta or grid.lambda is required");
        cell.lambda = 1.0 - static_cast<double>(k) * *cell.eta;
      }
      if (!(*cell.mu > 0.0 && *cell.mu <= 1.0))
        throw ParamError("config: grid.mu in (0,1] required");
      if (*cell.mu < 1.0) cell.delta = (1.0 - *cell.mu) / k;
      if (cell.method == "common_ancestor" && !cell.D)
        throw ParamError("config: grid.D is required for common_ancestor");
      if (cfg.report_census_mean && cell.method != "census")
        throw ParamError(
            "config: report_census_mean requires method census");
      BroadcastConfig bc;
      bc.k = k;
      bc.eta = *cell.eta;
      bc.p = *cell.p;
      bc.delta = cell.delta.value_or(0.0);
      bc.forced_root = cfg.forced_root;
      bc.validate();
    }
    if (cfg.report_census_mean && !cfg.forced_root)
      throw ParamError("config: report_census_mean requires forced_root");
  } else if (cfg.experiment == "sbm_recovery") {
    cfg.centers_per_graph = detail::value_or<std::uint32_t>(
        j, "centers_per_graph", 200, "an integer");
    if (cfg.centers_per_graph < 1)
      throw ParamError("config: centers_per_graph >= 1 required");
    grid_allowed = {"method", "n", "a", "b", "k", "p", "radius", "D"};
    detail::reject_unknown_keys(grid, grid_allowed, "grid.");
    for (const char* req : {"n", "a", "b", "k", "p", "radius"})
      if (!grid.contains(req))
        throw ParamError(std::string("config: grid.") + req + " is required");
    axes.push_back(detail::method_axis(
        grid, {"census", "bp", "common_ancestor"}));
    axes.push_back(axis<std::uint64_t>(grid, "n", &CellParams::n));
    axes.push_back(axis<double>(grid, "a", &CellParams::a));
    axes.push_back(axis<double>(grid, "b", &CellParams::b));
    axes.push_back(axis<std::uint32_t>(grid, "k", &CellParams::k));
    axes.push_back(axis<double>(grid, "p", &CellParams::p));
    axes.push_back(axis<std::uint32_t>(grid, "radius", &CellParams::depth));
    axes.push_back(axis<std::uint32_t>(grid, "D", &CellParams::D));
    cfg.cells = detail::cross_product(axes);
    for (auto& cell : cfg.cells) {
      if (*cell.depth < 1) throw ParamError("config: grid.radius >= 1 required");
      SbmParams params;
      params.n = static_cast<std::uint32_t>(*cell.n);
      params.k = *cell.k;
      params.a = *cell.a;
      params.b = *cell.b;
      params.p = *cell.p;
      params.validate();
      TreeParams tp = derived_params(params.a, params.b, params.k);
      cell.eta = tp.eta;
      cell.d = tp.d;
      cell.lambda = tp.lambda;
      if (cell.method == "common_ancestor" && !cell.D)
        throw ParamError("config: grid.D is required for common_ancestor");
    }
  } else if (cfg.experiment == "lemmas") {
    cfg.check = detail::require<std::string>(j, "check", "a string");
    if (cfg.check == "percolation_census") {
      grid_allowed = {"d", "lambda", "p", "B", "ell"};
      detail::reject_unknown_keys(grid, grid_allowed, "grid.");
      for (const char* req : {"d", "lambda", "p", "B"})
        if (!grid.contains(req))
          throw ParamError(std::string("config: grid.") + req + " is required");
      axes.push_back(axis<double>(grid, "d", &CellParams::d));
      axes.push_back(axis<double>(grid, "lambda", &CellParams::lambda));
      axes.push_back(axis<double>(grid, "p", &CellParams::p));
      axes.push_back(axis<std::uint32_t>(grid, "B", &CellParams::B));
      axes.push_back(axis<std::uint32_t>(grid, "ell", &CellParams::ell));
      cfg.cells = detail::cross_product(axes);
      for (auto& cell : cfg.cells) {
        cell.method = cfg.check;
        if (!(*cell.d > 0.0)) throw ParamError("config: grid.d > 0 required");
        if (!(*cell.lambda >= 0.0 && *cell.lambda <= 1.0))
          throw ParamError("config: grid.lambda in [0,1] required");
        if (!(*cell.p >= 0.0 && *cell.p <= 1.0))
          throw ParamError("config: grid.p in [0,1] required");
        if (*cell.B < 1) throw ParamError("config: grid.B >= 1 required");
      }
    } else if (cfg.check == "mutation_pair") {
      grid_allowed = {"arity", "ell", "k", "eta"};
      detail::reject_unknown_keys(grid, grid_allowed, "grid.");
      for (const char* req : {"arity", "ell", "k", "eta"})
        if (!grid.contains(req))
          throw ParamError(std::string("config: grid.") + req + " is required");
      axes.push_back(axis<std::uint32_t>(grid, "arity", &CellParams::arity));
      axes.push_back(axis<std::uint32_t>(grid, "ell", &CellParams::ell));
      axes.push_back(axis<std::uint32_t>(grid, "k", &CellParams::k));
      axes.push_back(axis<double>(grid, "eta", &CellParams::eta));
      cfg.cells = detail::cross_product(axes);
      for (auto& cell : cfg.cells) {
        cell.method = cfg.check;
        if (*cell.arity < 1) throw ParamError("config: grid.arity >= 1 required");
        cell.D = *cell.arity;  // the branching bound in the event ceiling
        BroadcastConfig bc;
        bc.k = *cell.k;
        bc.eta = *cell.eta;
        bc.validate();
      }
    } else if (cfg.check == "eq7") {
      grid_allowed = {"a", "b", "p", "depth"};
      detail::reject_unknown_keys(grid, grid_allowed, "grid.");
      for (const char* req : {"a", "b", "p", "depth"})
        if (!grid.contains(req))
          throw ParamError(std::string("config: grid.") + req + " is required");
      axes.push_back(axis<double>(grid, "a", &CellParams::a));
      axes.push_back(axis<double>(grid, "b", &CellParams::b));
      axes.push_back(axis<double>(grid, "p", &CellParams::p));
      axes.push_back(axis<std::uint32_t>(grid, "depth", &CellParams::depth));
      cfg.cells = detail::cross_product(axes);
      for (auto& cell : cfg.cells) {
        cell.method = cfg.check;
        cell.k = 2;
        TreeParams tp = derived_params(*cell.a, *cell.b, 2);
        cell.d = tp.d;
        cell.eta = tp.eta;
        cell.lambda = tp.lambda;
        two_cluster_bound_finite_r(*cell.a, *cell.b, *cell.p, *cell.depth);
      }
    } else {
      throw ParamError(
          "config: check must be percolation_census|mutation_pair|eq7");
    }
  } else {  // local_sanity
    cfg.rule = detail::value_or<std::string>(j, "rule", "degree_census",
                                             "a string");
    if (cfg.rule != "constant" && cfg.rule != "degree_census")
      throw ParamError("config: rule must be constant|degree_census");
    grid_allowed = {"n", "a", "b", "k", "p", "radius"};
    detail::reject_unknown_keys(grid, grid_allowed, "grid.");
    for (const char* req : {"n", "a", "b", "k", "radius"})
      if (!grid.contains(req))
        throw ParamError(std::string("config: grid.") + req + " is required");
    axes.push_back(axis<std::uint64_t>(grid, "n", &CellParams::n));
    axes.push_back(axis<double>(grid, "a", &CellParams::a));
    axes.push_back(axis<double>(grid, "b", &CellParams::b));
    axes.push_back(axis<std::uint32_t>(grid, "k", &CellParams::k));
    axes.push_back(axis<double>(grid, "p", &CellParams::p, {{0.0}}));
    axes.push_back(axis<std::uint32_t>(grid, "radius", &CellParams::depth));
    cfg.cells = detail::cross_product(axes);
    for (auto& cell : cfg.cells) {
      cell.method = cfg.rule;
      if (*cell.p != 0.0)
        throw ParamError("config: local_sanity requires p = 0 cells");
      if (*cell.k > 8)
        throw ParamError(
            "config: local_sanity requires k <= 8 (exhaustive permutations)");
      SbmParams params;
      params.n = static_cast<std::uint32_t>(*cell.n);
      params.k = *cell.k;
      params.a = *cell.a;
      params.b = *cell.b;
      params.p = 0.0;
      params.validate();
    }
  }

  if (cfg.cells.empty()) throw ParamError("config: grid nonempty required");

  // Canonical form: defaults filled, grid echoed as given.
  nlohmann::json canon;
  canon["experiment"] = cfg.experiment;
  canon["trials"] = cfg.trials;
  canon["master_seed"] = cfg.master_seed;
  canon["threads"] = cfg.threads;
  canon["out"] = cfg.out_dir;
  canon["node_cap"] = cfg.node_cap;
  if (cfg.experiment == "conjecture") canon["reveal_leaves"] = cfg.reveal_leaves;
  if (cfg.experiment == "tree_recovery") {
    canon["evidence"] = cfg.evidence;
    canon["report_census_mean"] = cfg.report_census_mean;
    if (cfg.forced_root) canon["forced_root"] = *cfg.forced_root;
  }
  if (cfg.experiment == "sbm_recovery")
    canon["centers_per_graph"] = cfg.centers_per_graph;
  if (cfg.experiment == "lemmas") canon["check"] = cfg.check;
  if (cfg.experiment == "local_sanity") canon["rule"] = cfg.rule;
  nlohmann::json cgrid = nlohmann::json::object();
  for (auto it = grid.begin(); it != grid.end(); ++it)
    cgrid[it.key()] = it.value().is_array() ? it.value()
                                            : nlohmann::json::array({it.value()});
  canon["grid"] = cgrid;
  out.canonical = canon;
  return out;
}

/// Loads and validates a config file (the CLI's config entry point).
inline ParsedConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParamError("config: cannot open file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

}  // namespace blocklab
