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


// Experiment configuration, instance construction, dispatch and reporting
// behind the command-line tool.

#ifndef CONGESTLAB_WORKBENCH_H_
#define CONGESTLAB_WORKBENCH_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/graph.h"
#include "congestlab/lll.h"
#include "json.hpp"

namespace congestlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitGuaranteeFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 3;

// The shipped schema, parsed.
const nlohmann::json& experiment_schema();

// Checks `doc` against the subset of JSON Schema used by the shipped schema
// (type, enum, required, properties, additionalProperties, items, minItems,
// minimum). Returns "" or a message naming the offending path.
std::string schema_violation(const nlohmann::json& doc, const nlohmann::json& schema);

struct ExperimentConfig {
  std::string command;
  std::string graph;       // generator spec, "{seed}" replaced per run
  std::string graph_file;  // {"n", "edges", "ids", "id_bits"}
  nlohmann::json instance = nlohmann::json::object();
  std::string algorithm;
  int k = 1;
  int64_t x = 2;
  int lambda = 3;
  std::vector<uint64_t> seeds = {1};
  std::string mode = "congest";
  int64_t bandwidth = 0;  // 0: 4 ceil(log2 n)
  int64_t budget = 0;     // 0: module default
  int64_t iteration_cap = -1;
  int64_t T = -1;
  bool require_criterion = true;
  std::string input;
  std::string report;
  std::string csv;  // prefix; one file per table
  std::string trace;  // prefix; <trace>_seed<s>.jsonl per run
  bool timestamps = false;
  int threads = 0;

  // Validates against the schema first; ConfigError on any problem.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

// kind: sinkless, synthetic (p_target as "a/b", range, vars, share), rigged
// (fixture), random_component (nodes, seed taken from params or `seed`).
LllInstance make_instance(const std::string& kind, const Graph& g, const nlohmann::json& params,
                          uint64_t seed = 0);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string csv_text(const CsvTable& t);

struct RunRecord {
  uint64_t seed = 0;
  nlohmann::json metrics = nlohmann::json::object();
  // Guarantee name -> held.
  std::map<std::string, bool> checks;
  std::string error;  // upstream error with context, empty when none
  bool pass() const;
};

struct MetricsReport {
  nlohmann::json config;
  std::vector<RunRecord> runs;
  std::map<std::string, CsvTable> tables;
  bool pass() const;
  nlohmann::json to_json(bool timestamps = false) const;
  nlohmann::json aggregate() const;
};

MetricsReport run_experiment(const ExperimentConfig& cfg);

// Writes the JSON report and CSV tables named by the config (if any).
void write_outputs(const ExperimentConfig& cfg, const MetricsReport& report);

}  // namespace congestlab

#endif  // CONGESTLAB_WORKBENCH_H_
