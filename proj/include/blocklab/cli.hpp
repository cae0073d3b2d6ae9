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

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blocklab/config.hpp"
#include "blocklab/errors.hpp"
#include "blocklab/experiments.hpp"
#include "blocklab/graph_io.hpp"
#include "blocklab/inference.hpp"
#include "blocklab/tree_io.hpp"

namespace blocklab {

namespace cli_detail {

inline std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot open " + tmp);
    f << content;
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// Run manifest: resolved config, seed, timestamps and output list.
/// Written atomically once the run has succeeded.
inline void write_manifest(const std::string& path,
                           const std::string& subcommand,
                           const nlohmann::json& config,
                           std::uint64_t master_seed,
                           const std::string& started,
                           const std::string& finished,
                           const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["master_seed"] = master_seed;
  m["started_utc"] = started;
  m["finished_utc"] = finished;
  m["outputs"] = outputs;
  write_file_atomic(path, m.dump(2) + "\n");
}

inline std::string ensure_out_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

struct ExperimentFlags {
  std::string config_path;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
};

inline void add_experiment_flags(CLI::App* cmd, ExperimentFlags& fl) {
  cmd->add_option("--config", fl.config_path, "experiment config JSON")
      ->required();
  cmd->add_option("--trials", fl.trials, "override trials per cell");
  cmd->add_option("--seed", fl.seed, "override master seed");
  cmd->add_option("--threads", fl.threads, "worker threads (0 = auto)");
  cmd->add_option("--out", fl.out_dir, "output directory");
}

/// Loads the config, applies flag overrides, checks the experiment kind.
inline ParsedConfig resolve_experiment(const ExperimentFlags& fl,
                                       const std::vector<std::string>& kinds) {
  ParsedConfig pc = load_config(fl.config_path);
  bool ok = false;
  for (const auto& kind : kinds) ok = ok || pc.cfg.experiment == kind;
  if (!ok)
    throw ParamError("config: experiment '" + pc.cfg.experiment +
                     "' does not match this subcommand");
  if (fl.trials) {
    pc.cfg.trials = *fl.trials;
    pc.canonical["trials"] = *fl.trials;
  }
  if (fl.seed) {
    pc.cfg.master_seed = *fl.seed;
    pc.canonical["master_seed"] = *fl.seed;
  }
  if (fl.threads) {
    pc.cfg.threads = *fl.threads;
    pc.canonical["threads"] = *fl.threads;
  }
  if (fl.out_dir) {
    pc.cfg.out_dir = *fl.out_dir;
    pc.canonical["out"] = *fl.out_dir;
  }
  if (pc.cfg.trials < 1) throw ParamError("config: trials >= 1 required");
  return pc;
}

inline int run_experiment_command(const std::string& name,
                                  const ExperimentFlags& fl,
                                  const std::vector<std::string>& kinds,
                                  std::ostream& out) {
  ParsedConfig pc = resolve_experiment(fl, kinds);
  const std::string started = utc_now();
  std::vector<SummaryRecord> records = run_experiment(pc.cfg);
  std::string base = pc.cfg.experiment;
  if (!pc.cfg.check.empty()) base += "_" + pc.cfg.check;
  const std::string dir = ensure_out_dir(pc.cfg.out_dir);
  const std::string csv_path = dir + "/" + base + ".csv";
  write_file_atomic(csv_path, csv_string(records));
  const std::string manifest_path = dir + "/" + base + "_manifest.json";
  write_manifest(manifest_path, name, pc.canonical, pc.cfg.master_seed,
                 started, utc_now(), {csv_path});
  out << "wrote " << csv_path << " (" << records.size() << " rows)\n";
  out << "wrote " << manifest_path << "\n";
  return 0;
}

/// Calibration lockfile: per-cell accuracy estimates with 95% intervals and
/// the margin over the 1/k baseline, for use as pinned acceptance
/// constants.
inline int run_calibrate(const ExperimentFlags& fl, std::ostream& out) {
  ParsedConfig pc = resolve_experiment(
      fl, {"tree_recovery", "sbm_recovery", "conjecture"});
  const std::string started = utc_now();
  std::vector<SummaryRecord> records = run_experiment(pc.cfg);
  nlohmann::json lock;
  lock["experiment"] = pc.cfg.experiment;
  lock["master_seed"] = pc.cfg.master_seed;
  lock["trials"] = pc.cfg.trials;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json c;
    c["estimator"] = r.estimator;
    c["estimate"] = r.estimate;
    c["stderr"] = r.stderror;
    c["trials"] = r.trials;
    c["ci95"] = {r.estimate - 1.96 * r.stderror,
                 r.estimate + 1.96 * r.stderror};
    if (r.cell.k && r.estimator == "accuracy")
      c["epsilon_over_baseline"] = r.estimate - 1.0 / *r.cell.k;
    if (r.cell.method.size()) c["method"] = r.cell.method;
    if (r.cell.a) c["a"] = *r.cell.a;
    if (r.cell.b) c["b"] = *r.cell.b;
    if (r.cell.k) c["k"] = *r.cell.k;
    if (r.cell.p) c["p"] = *r.cell.p;
    if (r.cell.depth) c["depth_or_radius"] = *r.cell.depth;
    if (r.cell.D) c["D"] = *r.cell.D;
    cells.push_back(c);
  }
  lock["cells"] = cells;
  const std::string dir = ensure_out_dir(pc.cfg.out_dir);
  const std::string lock_path = dir + "/calibration.json";
  write_file_atomic(lock_path, lock.dump(2) + "\n");
  write_manifest(dir + "/calibration_manifest.json", "calibrate", pc.canonical,
                 pc.cfg.master_seed, started, utc_now(), {lock_path});
  out << "wrote " << lock_path << "\n";
  return 0;
}

}  // namespace cli_detail

/// CLI front end; returns the process exit code. Subcommands: gen, tree,
/// thresholds, recover, conjecture, lemmas, sanity, calibrate.
/// Exit codes: 0 success, 2 config/parameter error, 3 capacity error,
/// 1 internal error.
inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"labeled block-model and broadcast-tree laboratory"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a labeled block model");
  SbmParams gen_params;
  std::uint64_t gen_seed = kDefaultSeed;
  std::string gen_out = ".";
  std::string gen_name = "graph";
  bool gen_hide_sigma = false;
  gen->add_option("--n", gen_params.n, "node count")->required();
  gen->add_option("--k", gen_params.k, "cluster count")->required();
  gen->add_option("--a", gen_params.a, "intra-cluster rate")->required();
  gen->add_option("--b", gen_params.b, "inter-cluster rate")->required();
  gen->add_option("--p", gen_params.p, "reveal probability")->required();
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--name", gen_name, "output base name");
  gen->add_flag("--hide-sigma", gen_hide_sigma,
                "omit sigma from the sidecar (hidden-label benchmark)");

  // --- tree ---
  auto* treec = app.add_subcommand(
      "tree", "generate a broadcast tree (Galton-Watson or regular)");
  double tree_gw_d = 0.0;
  std::uint32_t tree_arity = 0;
  std::uint32_t tree_depth = 0;
  BroadcastConfig tree_cfg;
  std::uint64_t tree_seed = kDefaultSeed;
  std::uint64_t tree_cap = kDefaultNodeCap;
  std::string tree_out = ".";
  std::string tree_name = "tree";
  std::uint32_t tree_forced_root = 0;
  auto* gw_opt = treec->add_option("--gw-d", tree_gw_d,
                                   "Galton-Watson mean offspring");
  auto* arity_opt =
      treec->add_option("--arity", tree_arity, "regular-tree arity");
  gw_opt->excludes(arity_opt);
  treec->add_option("--depth", tree_depth, "tree depth")->required();
  treec->add_option("--k", tree_cfg.k, "alphabet size")->required();
  treec->add_option("--eta", tree_cfg.eta, "flip parameter")->required();
  treec->add_option("--p", tree_cfg.p, "reveal probability");
  treec->add_option("--delta", tree_cfg.delta, "noisy-label parameter");
  treec->add_option("--forced-root", tree_forced_root,
                    "condition the root label");
  treec->add_flag("--interior-only", tree_cfg.interior_reveal_only,
                  "reveal interior (non-leaf) nodes only");
  treec->add_option("--seed", tree_seed, "seed");
  treec->add_option("--node-cap", tree_cap, "node cap");
  treec->add_option("--out", tree_out, "output directory");
  treec->add_option("--name", tree_name, "output base name");

  // --- thresholds ---
  auto* thr = app.add_subcommand("thresholds",
                                 "derived tree parameters and thresholds");
  double thr_a = 0.0, thr_b = 0.0;
  std::uint32_t thr_k = 2;
  std::uint64_t thr_n = 0;
  thr->add_option("--a", thr_a, "intra-cluster rate")->required();
  thr->add_option("--b", thr_b, "inter-cluster rate")->required();
  thr->add_option("--k", thr_k, "cluster count")->required();
  thr->add_option("--n", thr_n, "node count (adds the coupling radius)");

  // --- experiment subcommands ---
  cli_detail::ExperimentFlags rec_fl, conj_fl, lem_fl, san_fl, cal_fl;
  auto* rec = app.add_subcommand("recover",
                                 "tree or block-model recovery experiment");
  cli_detail::add_experiment_flags(rec, rec_fl);
  auto* conj = app.add_subcommand("conjecture",
                                  "posterior-distance simulation");
  cli_detail::add_experiment_flags(conj, conj_fl);
  auto* lem = app.add_subcommand("lemmas", "Monte-Carlo lemma checks");
  cli_detail::add_experiment_flags(lem, lem_fl);
  auto* san = app.add_subcommand("sanity", "label-blind local baseline");
  cli_detail::add_experiment_flags(san, san_fl);
  auto* cal = app.add_subcommand(
      "calibrate", "pilot run writing a calibration lockfile");
  cli_detail::add_experiment_flags(cal, cal_fl);

  std::vector<const char*> argv;
  const std::string prog = "blocklab";
  argv.push_back(prog.c_str());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e, out, err);
      return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
      const std::string started = cli_detail::utc_now();
      LabeledGraph g = generate_sbm(gen_params, gen_seed);
      const std::string dir = cli_detail::ensure_out_dir(gen_out);
      const std::string edge_path = dir + "/" + gen_name + ".edges";
      const std::string sidecar_path = dir + "/" + gen_name + ".json";
      write_graph(edge_path, sidecar_path, g, gen_params, gen_seed,
                  !gen_hide_sigma);
      nlohmann::json cfgj = graph_sidecar(g, gen_params, gen_seed, false);
      cfgj.erase("revealed");
      cli_detail::write_manifest(dir + "/" + gen_name + "_manifest.json",
                                 "gen", cfgj, gen_seed, started,
                                 cli_detail::utc_now(),
                                 {edge_path, sidecar_path});
      out << "wrote " << edge_path << " (" << g.num_edges << " edges)\n";
      return 0;
    }

    if (treec->parsed()) {
      const std::string started = cli_detail::utc_now();
      if (tree_forced_root != 0) tree_cfg.forced_root = tree_forced_root;
      Tree t = (*gw_opt) ? generate_gw_tree(tree_gw_d, tree_depth, tree_seed,
                                            tree_cap)
                         : generate_regular_tree(tree_arity, tree_depth,
                                                 tree_cap);
      LabeledTree lt = broadcast(std::move(t), tree_cfg,
                                 derive_seed(tree_seed, 1));
      const std::string dir = cli_detail::ensure_out_dir(tree_out);
      const std::string tree_path = dir + "/" + tree_name + ".json";
      write_tree(tree_path, lt);
      nlohmann::json cfgj = {{"depth", tree_depth},
                             {"k", tree_cfg.k},
                             {"eta", tree_cfg.eta},
                             {"p", tree_cfg.p},
                             {"delta", tree_cfg.delta}};
      if (*gw_opt)
        cfgj["gw_d"] = tree_gw_d;
      else
        cfgj["arity"] = tree_arity;
      cli_detail::write_manifest(dir + "/" + tree_name + "_manifest.json",
                                 "tree", cfgj, tree_seed, started,
                                 cli_detail::utc_now(), {tree_path});
      out << "wrote " << tree_path << " (" << lt.size() << " nodes)\n";
      return 0;
    }

    if (thr->parsed()) {
      TreeParams tp = derived_params(thr_a, thr_b, thr_k);
      ThresholdReport rep = threshold_report(thr_a, thr_b, thr_k);
      out << "d=" << detail::format_double(tp.d)
          << " eta=" << detail::format_double(tp.eta)
          << " lambda=" << detail::format_double(tp.lambda) << "\n";
      out << "d_lambda=" << detail::format_double(rep.d_lambda)
          << " d_lambda_sq=" << detail::format_double(rep.d_lambda_sq) << "\n";
      out << "ks_above=" << (rep.ks_above ? "true" : "false")
          << " tree_above=" << (rep.tree_above ? "true" : "false") << "\n";
      if (thr_n >= 2) {
        double r = coupling_radius(thr_n, thr_a, thr_b, thr_k);
        out << "coupling_radius=" << detail::format_double(r)
            << " r_floor=" << coupling_radius_floor(thr_n, thr_a, thr_b, thr_k)
            << "\n";
      }
      return 0;
    }

    if (rec->parsed())
      return cli_detail::run_experiment_command(
          "recover", rec_fl, {"tree_recovery", "sbm_recovery"}, out);
    if (conj->parsed())
      return cli_detail::run_experiment_command("conjecture", conj_fl,
                                                {"conjecture"}, out);
    if (lem->parsed())
      return cli_detail::run_experiment_command("lemmas", lem_fl, {"lemmas"},
                                                out);
    if (san->parsed())
      return cli_detail::run_experiment_command("sanity", san_fl,
                                                {"local_sanity"}, out);
    if (cal->parsed()) return cli_detail::run_calibrate(cal_fl, out);

    err << "no subcommand given\n";
    return 2;
  } catch (const ParamError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what()
        << " (partial size " << e.partial_size << ")\n";
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace blocklab
