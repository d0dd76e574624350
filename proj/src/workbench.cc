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


#include "congestlab/workbench.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "congestlab/bits.h"
#include "congestlab/carving.h"
#include "congestlab/cluster.h"
#include "congestlab/cps.h"
#include "congestlab/decomposition.h"
#include "congestlab/derandomizer.h"
#include "congestlab/generators.h"
#include "congestlab/preshatter.h"
#include "schema_text.h"

namespace congestlab {
namespace {

using nlohmann::json;

std::string type_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

bool has_type(const json& v, const std::string& t) {
  if (t == "number") return v.is_number();
  return type_name(v) == t;
}

std::string violation_at(const json& doc, const json& schema, const std::string& path) {
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& one : t) ok = ok || has_type(doc, one.get<std::string>());
    } else {
      ok = has_type(doc, t.get<std::string>());
    }
    if (!ok) return path + ": expected " + t.dump() + ", got " + type_name(doc);
  }
  if (schema.contains("enum")) {
    const auto& e = schema["enum"];
    if (std::find(e.begin(), e.end(), doc) == e.end()) {
      return path + ": " + doc.dump() + " is not one of " + e.dump();
    }
  }
  if (schema.contains("minimum") && doc.is_number() &&
      doc.get<double>() < schema["minimum"].get<double>()) {
    return path + ": below minimum " + schema["minimum"].dump();
  }
  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const auto& r : schema["required"]) {
        if (!doc.contains(r.get<std::string>())) {
          return path + ": missing required field " + r.get<std::string>();
        }
      }
    }
    const json props = schema.value("properties", json::object());
    const bool closed = schema.contains("additionalProperties") &&
                        schema["additionalProperties"].is_boolean() &&
                        !schema["additionalProperties"].get<bool>();
    for (const auto& [key, value] : doc.items()) {
      if (props.contains(key)) {
        const std::string err = violation_at(value, props[key], path + "." + key);
        if (!err.empty()) return err;
      } else if (closed) {
        return path + ": unknown field " + key;
      }
    }
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") && doc.size() < schema["minItems"].get<size_t>()) {
      return path + ": fewer than " + schema["minItems"].dump() + " items";
    }
    if (schema.contains("items")) {
      for (size_t i = 0; i < doc.size(); ++i) {
        const std::string err =
            violation_at(doc[i], schema["items"], path + "[" + std::to_string(i) + "]");
        if (!err.empty()) return err;
      }
    }
  }
  return "";
}

std::string replace_seed(std::string spec, uint64_t seed) {
  const std::string token = "{seed}";
  for (size_t at = spec.find(token); at != std::string::npos; at = spec.find(token)) {
    spec.replace(at, token.size(), std::to_string(seed));
  }
  return spec;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <typename T>
std::string str(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, Rational>) {
    return to_string(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
  } else {
    return std::to_string(v);
  }
}

// Per-seed output: the record plus rows for each table.
struct RunOutput {
  RunRecord record;
  std::map<std::string, CsvTable> tables;

  template <typename... Ts>
  void row(const std::string& table, const std::vector<std::string>& header, const Ts&... v) {
    CsvTable& t = tables[table];
    t.header = header;
    t.header.insert(t.header.begin(), "seed");
    t.rows.push_back({std::to_string(record.seed), str(v)...});
  }
};

struct Context {
  const ExperimentConfig& cfg;
  uint64_t seed;
  Graph graph;
  bool has_graph = false;
  SimConfig sim;
};

const Graph& need_graph(const Context& c) {
  if (!c.has_graph) throw ConfigError(c.cfg.command + " needs a graph or graph_file");
  return c.graph;
}

std::vector<int> all_nodes(const Graph& g) {
  std::vector<int> s(g.size());
  for (int v = 0; v < g.size(); ++v) s[v] = v;
  return s;
}

LllInstance context_instance(const Context& c) {
  const json& spec = c.cfg.instance;
  if (spec.contains("file")) return instance_from_json(read_json_file(spec["file"]));
  const std::string kind = spec.value("kind", "sinkless");
  if (kind == "rigged" || kind == "random_component") return make_instance(kind, Graph(), spec, c.seed);
  return make_instance(kind, need_graph(c), spec, c.seed);
}

void run_decompose(Context& c, RunOutput& out) {
  const Graph& g = need_graph(c);
  const std::string alg = c.cfg.algorithm.empty() ? "logn" : c.cfg.algorithm;
  NetworkDecomposition nd;
  if (alg == "logn") {
    nd = decompose_logn(g, c.cfg.k, c.sim);
  } else if (alg == "few_colors") {
    nd = decompose_few_colors(g, c.cfg.lambda, c.cfg.k, c.sim);
  } else {
    throw ConfigError("decompose does not support algorithm " + alg);
  }
  const DecompositionReport rep = validate_decomposition(g, nd);
  auto& m = out.record.metrics;
  m["n"] = g.size();
  m["classes"] = nd.classes.size();
  m["rounds"] = nd.metrics.rounds;
  m["beta"] = rep.max_beta;
  m["kappa"] = rep.max_kappa;
  m["min_distance"] = rep.min_distance == kUnreachable ? -1 : rep.min_distance;
  if (!rep.ok) m["violation"] = rep.violation;
  auto& chk = out.record.checks;
  chk["partition"] = rep.ok;
  chk["distance_gt_k"] = rep.min_distance > c.cfg.k;
  if (alg == "logn") {
    chk["classes_le_log2n_plus_1"] =
        static_cast<int64_t>(nd.classes.size()) <= log2_ceil(std::max(1, g.size())) + 1;
  } else {
    chk["classes_le_lambda"] = static_cast<int>(nd.classes.size()) <= c.cfg.lambda;
    const int64_t x = root_ceil(g.size(), c.cfg.lambda);
    bool shrink = true;
    for (const auto& s : nd.stats) shrink = shrink && s.residue_after * x <= s.residue_before;
    chk["residue_shrinks_by_root"] = shrink;
  }
  for (size_t i = 0; i < nd.stats.size(); ++i) {
    const ClassStats& s = nd.stats[i];
    out.row("classes",
            {"class", "residue_before", "residue_after", "clusters", "steiner_radius",
             "edge_congestion", "min_distance", "x", "rounds"},
            static_cast<int64_t>(i), s.residue_before, s.residue_after, s.clusters,
            s.steiner_radius, s.edge_congestion,
            s.min_distance == kUnreachable ? -1 : s.min_distance, s.x, s.rounds);
  }
}

void run_carve(Context& c, RunOutput& out) {
  const Graph& g = need_graph(c);
  const std::string alg = c.cfg.algorithm.empty() ? "distance_k" : c.cfg.algorithm;
  const auto s = all_nodes(g);
  const int64_t x = c.cfg.x;
  CarveResult r;
  int64_t beta_bound, kappa_bound;
  if (alg == "distance_k") {
    r = carve_distance_k(g, s, c.cfg.k, static_cast<int>(x), c.sim);
    const auto p = CarveParamsE::from(g.size(), x, c.cfg.k);
    beta_bound = p.beta_bound;
    kappa_bound = p.kappa_bound;
  } else if (alg == "fast") {
    r = carve_fast(g, s, static_cast<int>(x), c.sim);
    const auto p = CarveParamsC::from(g.size(), x, static_cast<int64_t>(s.size()));
    beta_bound = p.beta_bound;
    kappa_bound = p.kappa_bound;
    out.record.checks["tokens_within_bound"] = r.tokens_created <= p.total_tokens_bound;
    out.record.checks["all_top_level"] =
        std::all_of(r.level.begin(), r.level.end(), [&](int l) { return l == r.top_level; });
    bool potential = true;
    for (const auto& ph : r.phases) potential = potential && ph.potential_violations == 0;
    out.record.checks["potential_non_decreasing"] = potential;
    out.record.metrics["tokens"] = r.tokens_created;
  } else {
    throw ConfigError("carve does not support algorithm " + alg);
  }
  const CollectionStats st = validate_collection(g, r.clusters);
  const int k = alg == "fast" ? 1 : c.cfg.k;
  const int dist = min_cluster_distance(g, r.clusters);
  const int64_t dead = static_cast<int64_t>(r.dead.size());
  auto& m = out.record.metrics;
  m["n"] = g.size();
  m["clusters"] = r.clusters.clusters.size();
  m["dead"] = dead;
  m["clustered_fraction"] = 1.0 - static_cast<double>(dead) / std::max<size_t>(1, s.size());
  m["beta"] = st.steiner_radius;
  m["kappa"] = st.edge_congestion;
  m["beta_bound"] = beta_bound;
  m["kappa_bound"] = kappa_bound;
  m["rounds"] = r.metrics.rounds;
  auto& chk = out.record.checks;
  chk["clustered_fraction_ge_1_minus_1_over_x"] = dead * x <= static_cast<int64_t>(s.size());
  chk["distance_gt_k"] = dist > k;
  chk["beta_within_bound"] = st.steiner_radius <= beta_bound;
  chk["kappa_within_bound"] = st.edge_congestion <= kappa_bound;
  bool comp = true;
  for (const auto& ph : r.phases) {
    comp = comp && ph.component_bound_ok;
    out.row("phases",
            {"phase", "clusters", "max_component", "component_bound_ok", "dead",
             "steiner_radius", "edge_congestion", "steps_run", "tokens_created", "rounds"},
            ph.phase, ph.clusters, ph.max_component, static_cast<int>(ph.component_bound_ok),
            ph.dead, ph.steiner_radius, ph.edge_congestion, ph.steps_run, ph.tokens_created,
            ph.rounds);
  }
  chk["phase_component_bound"] = comp;
}

void run_cps(Context& c, const LllInstance& inst, RunOutput& out) {
  CpsOptions opts;
  opts.iteration_cap = c.cfg.iteration_cap;
  const CpsResult r = cps_solve(inst, c.sim, opts);
  const int64_t cap = opts.iteration_cap < 0
                          ? 10 * log2_ceil(std::max(2, inst.size())) + 10
                          : opts.iteration_cap;
  auto& m = out.record.metrics;
  m["iterations"] = r.iterations;
  m["violated"] = r.violated.size();
  m["rounds"] = r.metrics.rounds;
  m["max_edge_round_bits"] = r.metrics.max_round_bits;
  m["iteration_target"] = 10 * log2_ceil(std::max(2, inst.size()));
  auto& chk = out.record.checks;
  chk["valid"] = r.violated.empty() && r.success;
  chk["iterations_within_cap"] = r.iterations <= cap;
  if (c.sim.mode == Mode::kCongest) {
    chk["bandwidth_respected"] = r.metrics.max_round_bits <= c.sim.bandwidth_bits;
  }
  for (size_t t = 0; t < r.trace.size(); ++t) {
    out.row("iterations", {"iteration", "violated", "resampled"}, static_cast<int64_t>(t),
            static_cast<int64_t>(r.trace[t].violated.size()),
            static_cast<int64_t>(r.trace[t].resampled.size()));
  }
}

void run_lambda(Context& c, const LllInstance& inst, RunOutput& out) {
  LambdaOptions opts;
  opts.require_criterion = c.cfg.require_criterion;
  if (c.cfg.budget > 0) opts.budget = c.cfg.budget;
  const LambdaResult r = local_lambda_lll(inst, c.cfg.lambda, c.sim, opts);
  auto& m = out.record.metrics;
  m["p"] = to_string(r.criteria.p);
  m["d"] = r.criteria.d;
  m["ped_lambda"] = r.criteria.ped_lambda;
  m["classes"] = r.decomposition.classes.size();
  m["initial_sum"] = to_string(r.initial);
  m["final_sum"] = to_string(r.after_cluster.empty() ? r.initial : r.after_cluster.back());
  m["violated"] = r.violated.size();
  m["rounds"] = r.rounds;
  m["parallel_safe"] = r.parallel_safe;
  auto& chk = out.record.checks;
  chk["valid"] = r.violated.empty();
  chk["classes_le_lambda"] = static_cast<int>(r.decomposition.classes.size()) <= c.cfg.lambda;
  bool below = r.initial < 1;
  for (size_t i = 0; i < r.after_cluster.size(); ++i) {
    below = below && r.after_cluster[i] < 1;
    out.row("clusters", {"step", "sum"}, static_cast<int64_t>(i), r.after_cluster[i]);
  }
  chk["sum_below_one_after_every_cluster"] = below;
}

void run_pipeline(Context& c, const LllInstance& inst, RunOutput& out) {
  DerandParams params;
  params.T = c.cfg.T;
  if (c.cfg.budget > 0) params.budget = c.cfg.budget;
  const PipelineResult r = solve_range_bounded_lll(inst, c.sim, params);
  std::vector<int> sizes;
  for (const auto& comp : r.pre.residual) sizes.push_back(static_cast<int>(comp.events.size()));
  const int largest = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  const double log2n = std::log2(std::max(2, inst.size()));
  auto& m = out.record.metrics;
  m["n"] = inst.size();
  m["p"] = to_string(r.criteria.p);
  m["d"] = r.criteria.d;
  m["ped8"] = r.criteria.ped8;
  m["ped8_ok"] = r.criteria.ped8_ok;
  m["palette"] = r.pre.coloring.palette;
  m["freezes"] = r.pre.freezes.size();
  m["residual_sizes"] = sizes;
  m["max_residual"] = largest;
  m["residual_within_8_log2_n"] = largest <= 8 * log2n;
  m["residual_p"] = to_string(r.pre.residual_p);
  m["pre_rounds"] = r.pre_rounds;
  m["post_rounds"] = r.post_rounds;
  m["violated"] = r.violated.size();
  auto& chk = out.record.checks;
  chk["valid"] = r.violated.empty();
  chk["preshatter_audit"] = audit_preshatter(inst, r.pre).empty();
  chk["residual_criterion"] = r.pre.residual_ok;
  bool audit = true;
  for (size_t i = 0; i < r.post.size(); ++i) {
    const DerandResult& d = r.post[i];
    Rational prev = d.initial;
    audit = audit && d.initial < 1;
    for (const auto& e : d.audit) {
      audit = audit && e.after <= e.before && e.global <= prev && e.global < 1;
      prev = e.global;
    }
    out.row("components",
            {"component", "events", "variables", "T", "T_default", "iterations", "classes",
             "initial", "fixings", "rounds"},
            static_cast<int64_t>(i), sizes[i],
            static_cast<int64_t>(r.pre.residual[i].variables.size()), d.T, d.T_default,
            d.iterations, d.classes, d.initial, static_cast<int64_t>(d.audit.size()), d.rounds);
  }
  chk["expectation_audit"] = audit;
}

void run_lll(Context& c, RunOutput& out) {
  const LllInstance inst = context_instance(c);
  const std::string alg = c.cfg.algorithm.empty() ? "cps" : c.cfg.algorithm;
  if (alg == "cps") {
    run_cps(c, inst, out);
  } else if (alg == "lambda") {
    run_lambda(c, inst, out);
  } else if (alg == "pipeline") {
    run_pipeline(c, inst, out);
  } else {
    throw ConfigError("lll does not support algorithm " + alg);
  }
}

void run_validate(Context& c, RunOutput& out) {
  if (c.cfg.input.empty()) throw ConfigError("validate needs input");
  const json doc = read_json_file(c.cfg.input);
  auto& chk = out.record.checks;
  if (doc.contains("values")) {
    const LllInstance inst = context_instance(c);
    const Assignment a = assignment_from_json(doc);
    if (a.value.size() != inst.variables.size()) {
      throw ConfigError("assignment has " + std::to_string(a.value.size()) +
                        " values, instance has " + std::to_string(inst.variables.size()));
    }
    bool set = std::all_of(a.value.begin(), a.value.end(), [](int v) { return v >= 0; });
    chk["all_set"] = set;
    if (set) {
      const auto bad = validate_assignment(inst, a);
      out.record.metrics["violated"] = bad;
      chk["valid"] = bad.empty();
    }
  } else if (doc.contains("classes")) {
    const NetworkDecomposition nd = decomposition_from_json(doc);
    const DecompositionReport rep = validate_decomposition(need_graph(c), nd);
    if (!rep.ok) out.record.metrics["violation"] = rep.violation;
    chk["partition"] = rep.ok;
    chk["distance_gt_k"] = rep.min_distance > nd.k;
  } else if (doc.contains("clusters")) {
    const ClusterCollection cc = collection_from_json(doc);
    try {
      const CollectionStats st = validate_collection(need_graph(c), cc);
      out.record.metrics["beta"] = st.steiner_radius;
      out.record.metrics["kappa"] = st.edge_congestion;
      chk["collection"] = true;
    } catch (const CollectionError& e) {
      out.record.metrics["violation"] = e.what();
      chk["collection"] = false;
    }
  } else {
    throw ConfigError(c.cfg.input + " is neither an assignment, a decomposition nor a collection");
  }
}

void run_bench(Context& c, RunOutput& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LllInstance inst = context_instance(c);
  const std::string alg = c.cfg.algorithm.empty() ? "pipeline" : c.cfg.algorithm;
  if (alg == "pipeline") {
    run_pipeline(c, inst, out);
  } else if (alg == "cps") {
    run_cps(c, inst, out);
  } else if (alg == "lambda") {
    run_lambda(c, inst, out);
  } else {
    throw ConfigError("bench does not support algorithm " + alg);
  }
  auto& m = out.record.metrics;
  const double n = std::max(4, inst.size());
  m["log2_n"] = std::log2(n);
  m["log2_log2_n"] = std::log2(std::log2(n));
  int64_t rounds = 0;
  if (m.contains("rounds")) rounds = m["rounds"].get<int64_t>();
  if (m.contains("pre_rounds")) rounds = m["pre_rounds"].get<int64_t>() + m["post_rounds"].get<int64_t>();
  m["total_rounds"] = rounds;
  m["rounds_per_log2_n"] = static_cast<double>(rounds) / std::log2(n);
  if (c.cfg.timestamps) {
    m["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                       .count();
  }
}

RunOutput run_one(const ExperimentConfig& cfg, uint64_t seed) {
  RunOutput out;
  out.record.seed = seed;
  Context c{cfg, seed, Graph(), false, SimConfig()};
  try {
    if (!cfg.graph_file.empty()) {
      c.graph = graph_from_json(read_json_file(cfg.graph_file));
      c.has_graph = true;
    } else if (!cfg.graph.empty()) {
      c.graph = generate_graph(replace_seed(cfg.graph, seed));
      c.has_graph = true;
    }
    if (cfg.mode == "local") {
      c.sim = SimConfig::local(seed);
    } else {
      int64_t b = cfg.bandwidth;
      if (b == 0) {
        int n = c.has_graph ? c.graph.size() : 2;
        if (!c.has_graph && cfg.instance.contains("nodes")) n = cfg.instance["nodes"];
        b = 4 * std::max<int64_t>(1, log2_ceil(std::max(2, n)));
      }
      c.sim = SimConfig::congest(b, seed);
    }
    std::ofstream trace;
    if (!cfg.trace.empty()) {
      const std::string path = cfg.trace + "_seed" + std::to_string(seed) + ".jsonl";
      trace.open(path);
      if (!trace) throw ConfigError("cannot write " + path);
      c.sim.trace = &trace;
    }
    out.record.metrics["bandwidth"] = c.sim.mode == Mode::kLocal ? -1 : c.sim.bandwidth_bits;
    if (cfg.command == "decompose") {
      run_decompose(c, out);
    } else if (cfg.command == "carve") {
      run_carve(c, out);
    } else if (cfg.command == "lll" || cfg.command == "pipeline") {
      if (cfg.command == "pipeline") {
        run_pipeline(c, context_instance(c), out);
      } else {
        run_lll(c, out);
      }
    } else if (cfg.command == "validate") {
      run_validate(c, out);
    } else if (cfg.command == "bench") {
      run_bench(c, out);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    out.record.error = cfg.command + " (seed " + std::to_string(seed) + "): " + e.what();
  }
  return out;
}

}  // namespace

const nlohmann::json& experiment_schema() {
  static const json schema = json::parse(kExperimentSchemaText);
  return schema;
}

std::string schema_violation(const nlohmann::json& doc, const nlohmann::json& schema) {
  return violation_at(doc, schema, "$");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  const std::string err = schema_violation(j, experiment_schema());
  if (!err.empty()) throw ConfigError("config: " + err);
  ExperimentConfig c;
  c.command = j["command"];
  c.graph = j.value("graph", "");
  c.graph_file = j.value("graph_file", "");
  c.instance = j.value("instance", json::object());
  c.algorithm = j.value("algorithm", "");
  c.k = j.value("k", 1);
  c.x = j.value("x", int64_t{2});
  c.lambda = j.value("lambda", 3);
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
  c.mode = j.value("mode", "congest");
  c.bandwidth = j.value("bandwidth", int64_t{0});
  c.budget = j.value("budget", int64_t{0});
  c.iteration_cap = j.value("iteration_cap", int64_t{-1});
  c.T = j.value("T", int64_t{-1});
  c.require_criterion = j.value("require_criterion", true);
  c.input = j.value("input", "");
  c.report = j.value("report", "");
  c.csv = j.value("csv", "");
  c.trace = j.value("trace", "");
  c.timestamps = j.value("timestamps", false);
  c.threads = j.value("threads", 0);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  json j = {{"command", command}, {"k", k}, {"x", x}, {"lambda", lambda}, {"seeds", seeds},
            {"mode", mode}, {"bandwidth", bandwidth}, {"iteration_cap", iteration_cap},
            {"T", T}, {"require_criterion", require_criterion}};
  if (!graph.empty()) j["graph"] = graph;
  if (!graph_file.empty()) j["graph_file"] = graph_file;
  if (!instance.empty()) j["instance"] = instance;
  if (!algorithm.empty()) j["algorithm"] = algorithm;
  if (budget > 0) j["budget"] = budget;
  if (!input.empty()) j["input"] = input;
  return j;
}

nlohmann::json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
  json ids = json::array();
  for (const auto& id : g.ids()) ids.push_back(id.to_string());
  return {{"n", g.size()}, {"edges", edges}, {"ids", ids}, {"id_bits", g.id_bits()}};
}

Graph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    std::vector<Identifier> ids;
    if (j.contains("ids")) {
      for (const auto& s : j.at("ids")) ids.push_back(Identifier::parse(s.get<std::string>()));
    }
    return Graph::from_edges(j.at("n").get<int>(), edges, ids, j.value("id_bits", 0));
  } catch (const json::exception& e) {
    throw GraphError(std::string("graph JSON: ") + e.what());
  }
}

LllInstance make_instance(const std::string& kind, const Graph& g, const nlohmann::json& params,
                          uint64_t seed) {
  if (kind == "sinkless") return make_sinkless(g);
  if (kind == "synthetic") {
    const Rational p = rational_from_string(params.value("p_target", "1/8"));
    return make_synthetic(g, p, params.value("range", 2), params.value("vars", 3),
                          params.value("share", false));
  }
  if (kind == "rigged") return make_rigged(params.value("fixture", "single"));
  if (kind == "random_component") {
    return make_random_component(params.value("nodes", 8), params.value("seed", seed));
  }
  throw ConfigError("unknown instance kind " + kind);
}

std::string csv_text(const CsvTable& t) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  };
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += field(cells[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

bool RunRecord::pass() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

bool MetricsReport::pass() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.pass(); });
}

nlohmann::json MetricsReport::aggregate() const {
  json agg = {{"runs", runs.size()}};
  int64_t passed = 0, errors = 0;
  std::map<std::string, int64_t> held;
  for (const auto& r : runs) {
    passed += r.pass();
    errors += !r.error.empty();
    for (const auto& [name, ok] : r.checks) held[name] += ok;
  }
  agg["passed"] = passed;
  agg["errors"] = errors;
  agg["checks_held"] = held;
  auto numeric = [&](const std::string& key) {
    std::vector<double> v;
    for (const auto& r : runs) {
      if (r.metrics.contains(key) && r.metrics[key].is_number()) v.push_back(r.metrics[key]);
    }
    return v;
  };
  for (const char* key : {"rounds", "iterations", "max_residual", "beta", "kappa",
                          "clustered_fraction", "pre_rounds", "post_rounds", "classes"}) {
    const auto v = numeric(key);
    if (v.empty()) continue;
    double sum = 0;
    for (double x : v) sum += x;
    agg[key] = {{"min", *std::min_element(v.begin(), v.end())},
                {"max", *std::max_element(v.begin(), v.end())},
                {"mean", sum / static_cast<double>(v.size())}};
  }
  int64_t within = 0, counted = 0;
  for (const auto& r : runs) {
    if (r.metrics.contains("residual_within_8_log2_n")) {
      ++counted;
      within += r.metrics["residual_within_8_log2_n"].get<bool>();
    }
  }
  if (counted > 0) {
    agg["residual_within_8_log2_n_fraction"] = static_cast<double>(within) / counted;
  }
  return agg;
}

nlohmann::json MetricsReport::to_json(bool timestamps) const {
  json rs = json::array();
  for (const auto& r : runs) {
    json j = {{"seed", r.seed}, {"pass", r.pass()}, {"metrics", r.metrics},
              {"checks", r.checks}};
    if (!r.error.empty()) j["error"] = r.error;
    rs.push_back(j);
  }
  json out = {{"config", config}, {"pass", pass()}, {"runs", rs}, {"aggregate", aggregate()}};
  if (timestamps) {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out["generated_at"] = buf;
  }
  return out;
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.command == "validate" && cfg.input.empty()) throw ConfigError("validate needs input");
  const std::vector<uint64_t> seeds =
      cfg.command == "validate" ? std::vector<uint64_t>{cfg.seeds.front()} : cfg.seeds;
  std::vector<RunOutput> outs(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < seeds.size(); i = next++) {
      try {
        outs[i] = run_one(cfg, seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  MetricsReport report;
  report.config = cfg.to_json();
  for (auto& o : outs) {
    report.runs.push_back(std::move(o.record));
    for (auto& [name, table] : o.tables) {
      CsvTable& dst = report.tables[name];
      dst.header = table.header;
      for (auto& row : table.rows) dst.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_outputs(const ExperimentConfig& cfg, const MetricsReport& report) {
  if (!cfg.report.empty()) {
    std::ofstream out(cfg.report);
    if (!out) throw ConfigError("cannot write " + cfg.report);
    out << report.to_json(cfg.timestamps).dump(2) << '\n';
  }
  if (!cfg.csv.empty()) {
    for (const auto& [name, table] : report.tables) {
      const std::string path = cfg.csv + "_" + name + ".csv";
      std::ofstream out(path);
      if (!out) throw ConfigError("cannot write " + path);
      out << csv_text(table);
    }
  }
}

}  // namespace congestlab
