// Copyright 2026 The congestlab Authors
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


#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "congestlab/workbench.h"
#include "json.hpp"

namespace {

using congestlab::ConfigError;
using nlohmann::json;

struct Flags {
  std::string config;
  std::string graph, graph_file, instance_kind, instance_file, p_target, fixture;
  int range = 2, vars = 3, nodes = 8;
  std::string algorithm, mode, input, report, csv, trace;
  int k = 1, lambda = 3, threads = 0;
  int64_t x = 2, bandwidth = 0, budget = 1, iteration_cap = -1, T = -1;
  std::vector<uint64_t> seeds;
  bool no_criterion = false, timestamps = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config; its fields override flags");
  cmd->add_option("--graph", f.graph, "generator spec, e.g. regular:256:4:{seed}");
  cmd->add_option("--graph-file", f.graph_file, "graph JSON");
  cmd->add_option("--instance", f.instance_kind, "sinkless|synthetic|rigged|random_component");
  cmd->add_option("--instance-file", f.instance_file, "instance JSON");
  cmd->add_option("--p-target", f.p_target, "synthetic event probability, a/b");
  cmd->add_option("--range", f.range, "synthetic variable range");
  cmd->add_option("--vars", f.vars, "synthetic variables per node");
  cmd->add_option("--fixture", f.fixture, "rigged fixture: single|double");
  cmd->add_option("--nodes", f.nodes, "random component size");
  cmd->add_option("--algorithm", f.algorithm,
                  "logn|few_colors|distance_k|fast|cps|lambda|pipeline");
  cmd->add_option("-k", f.k, "cluster separation");
  cmd->add_option("-x", f.x, "carving parameter");
  cmd->add_option("--lambda", f.lambda, "color classes for the few-colors variants");
  cmd->add_option("--seeds", f.seeds, "seed list")->delimiter(',');
  cmd->add_option("--mode", f.mode, "congest|local");
  cmd->add_option("--bandwidth", f.bandwidth, "bits per edge per round (0: 4 ceil(log2 n))");
  cmd->add_option("--budget", f.budget, "enumeration budget");
  cmd->add_option("--iteration-cap", f.iteration_cap, "resampling iteration cap");
  cmd->add_option("-T", f.T, "derandomized round budget");
  cmd->add_flag("--no-criterion", f.no_criterion, "relax the lambda-solver criterion");
  cmd->add_option("--input", f.input, "file to validate");
  cmd->add_option("--report", f.report, "JSON report path");
  cmd->add_option("--csv", f.csv, "CSV path prefix");
  cmd->add_option("--trace", f.trace, "message trace path prefix (JSON lines per seed)");
  cmd->add_flag("--timestamps", f.timestamps, "include wall times and generation time");
  cmd->add_option("--threads", f.threads, "concurrent seeds (0: hardware)");
}

json flags_to_json(const CLI::App* cmd, const Flags& f) {
  json j = {{"command", cmd->get_name()}};
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--graph")) j["graph"] = f.graph;
  if (given("--graph-file")) j["graph_file"] = f.graph_file;
  json inst = json::object();
  if (given("--instance")) inst["kind"] = f.instance_kind;
  if (given("--instance-file")) inst["file"] = f.instance_file;
  if (given("--p-target")) inst["p_target"] = f.p_target;
  if (given("--range")) inst["range"] = f.range;
  if (given("--vars")) inst["vars"] = f.vars;
  if (given("--fixture")) inst["fixture"] = f.fixture;
  if (given("--nodes")) inst["nodes"] = f.nodes;
  if (!inst.empty()) j["instance"] = inst;
  if (given("--algorithm")) j["algorithm"] = f.algorithm;
  if (given("-k")) j["k"] = f.k;
  if (given("-x")) j["x"] = f.x;
  if (given("--lambda")) j["lambda"] = f.lambda;
  if (given("--seeds")) j["seeds"] = f.seeds;
  if (given("--mode")) j["mode"] = f.mode;
  if (given("--bandwidth")) j["bandwidth"] = f.bandwidth;
  if (given("--budget")) j["budget"] = f.budget;
  if (given("--iteration-cap")) j["iteration_cap"] = f.iteration_cap;
  if (given("-T")) j["T"] = f.T;
  if (f.no_criterion) j["require_criterion"] = false;
  if (given("--input")) j["input"] = f.input;
  if (given("--report")) j["report"] = f.report;
  if (given("--csv")) j["csv"] = f.csv;
  if (given("--trace")) j["trace"] = f.trace;
  if (f.timestamps) j["timestamps"] = true;
  if (given("--threads")) j["threads"] = f.threads;
  return j;
}

int run(const CLI::App* cmd, const Flags& f) {
  json doc = flags_to_json(cmd, f);
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot open " + f.config);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(f.config + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError(f.config + ": config must be an object");
    if (file.contains("command") && file["command"] != doc["command"]) {
      throw ConfigError(f.config + ": command does not match the subcommand");
    }
    doc.merge_patch(file);
  }
  const auto cfg = congestlab::ExperimentConfig::from_json(doc);
  const auto report = congestlab::run_experiment(cfg);
  congestlab::write_outputs(cfg, report);
  for (const auto& r : report.runs) {
    std::cerr << "seed " << r.seed << ": " << (r.pass() ? "pass" : "FAIL");
    for (const auto& [name, ok] : r.checks) {
      if (!ok) std::cerr << " " << name << "=false";
    }
    if (!r.error.empty()) std::cerr << " error: " << r.error;
    std::cerr << "\n";
  }
  if (cfg.report.empty()) std::cout << report.to_json(cfg.timestamps).dump(2) << "\n";
  return report.pass() ? congestlab::kExitPass : congestlab::kExitGuaranteeFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"congestlab: distributed decomposition and local lemma experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<CLI::App*> cmds;
  for (const char* name : {"decompose", "carve", "lll", "pipeline", "validate", "bench"}) {
    CLI::App* cmd = app.add_subcommand(name);
    add_flags(cmd, flags);
    cmds.push_back(cmd);
  }
  app.add_subcommand("schema", "print the config schema");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? congestlab::kExitPass : congestlab::kExitUsage;
  }
  try {
    if (app.got_subcommand("schema")) {
      std::cout << congestlab::experiment_schema().dump(2) << "\n";
      return congestlab::kExitPass;
    }
    for (CLI::App* cmd : cmds) {
      if (cmd->parsed()) return run(cmd, flags);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return congestlab::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return congestlab::kExitInternal;
  }
  return congestlab::kExitUsage;
}
