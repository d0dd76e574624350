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


#include "congestlab/derandomizer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>
#include <unordered_map>

#include "congestlab/aggregate.h"
#include "congestlab/cluster.h"

namespace congestlab {
namespace {

std::vector<char> scope_mask(int n, const std::vector<int>& scope) {
  std::vector<char> m(n, 0);
  for (int v : scope) m[v] = 1;
  return m;
}

int64_t count_in(const std::vector<int>& violated, const std::vector<char>& mask) {
  int64_t c = 0;
  for (int v : violated) c += mask[v];
  return c;
}

uint64_t fixed_or(const PartialFixing& phi, int v, int64_t i, bool& fixed) {
  if (v < static_cast<int>(phi.tape.size()) && i < static_cast<int64_t>(phi.tape[v].size())) {
    fixed = true;
    return phi.tape[v][i];
  }
  fixed = false;
  return 0;
}

// Lazy odometer over the unfixed positions of `relevant` nodes, in the order
// the replay reads them. A leaf with choices c_1..c_m has weight prod 1/L.
Rational lazy_expectation(const LllInstance& comp, int64_t iterations, const PartialFixing& phi,
                          const std::vector<char>& scope, const std::vector<char>& relevant,
                          int64_t budget) {
  struct Choice {
    int64_t key;
    uint64_t value;
    uint64_t range;
  };
  std::vector<int64_t> range(comp.size());
  for (int v = 0; v < comp.size(); ++v) range[v] = tape_range(comp, v);
  std::vector<Choice> path;
  std::unordered_map<int64_t, size_t> where;
  Rational acc = 0;
  int64_t leaves = 0;
  const TapeFn draw = [&](int v, int64_t i) -> uint64_t {
    bool fixed;
    const uint64_t f = fixed_or(phi, v, i, fixed);
    if (fixed || !relevant[v]) return f;
    const int64_t key = (static_cast<int64_t>(v) << 32) | i;
    auto it = where.find(key);
    if (it != where.end()) return path[it->second].value;
    where.emplace(key, path.size());
    path.push_back({key, 0, static_cast<uint64_t>(range[v])});
    return 0;
  };
  while (true) {
    if (++leaves > budget) {
      throw BudgetExceeded("failure expectation", static_cast<double>(leaves), budget);
    }
    const CpsSimulation sim = simulate_cps(comp, iterations, draw);
    const int64_t bad = count_in(sim.violated, scope);
    if (bad > 0) {
      mpz_class den = 1;
      for (const Choice& c : path) den *= c.range;
      Rational w(mpz_class(static_cast<long>(bad)), den);
      w.canonicalize();
      acc += w;
    }
    while (!path.empty() && ++path.back().value >= path.back().range) {
      where.erase(path.back().key);
      path.pop_back();
    }
    if (path.empty()) break;
  }
  return acc;
}

// Zero iterations: X_v is the event under the initial values, so the
// expectation is a sum of conditional probabilities.
Rational initial_expectation(const LllInstance& comp, const PartialFixing& phi,
                             const std::vector<int>& scope, const std::vector<char>& relevant,
                             int64_t budget) {
  Assignment a = Assignment::unset(comp);
  for (int u = 0; u < comp.size(); ++u) {
    const auto& owned = comp.owned[u];
    for (size_t i = 0; i < owned.size(); ++i) {
      bool fixed;
      const uint64_t f = fixed_or(phi, u, static_cast<int64_t>(i), fixed);
      if (fixed || !relevant[u]) {
        a.value[owned[i]] = static_cast<int>(f % comp.variables[owned[i]].range);
      }
    }
  }
  Rational sum = 0;
  for (int v : scope) sum += event_probability(comp, v, a, budget);
  return sum;
}

int64_t positions(const LllInstance& comp, int u, int64_t iterations) {
  return static_cast<int64_t>(comp.owned[u].size()) * (1 + iterations);
}

// log2 of the initial-draw branching of the whole component, times the
// number of draw rounds; a cheap lower estimate of the enumeration.
double branching_log2(const LllInstance& comp, int64_t iterations) {
  double bits = 0;
  for (int u = 0; u < comp.size(); ++u) {
    bits += static_cast<double>(comp.owned[u].size()) * std::log2(tape_range(comp, u));
  }
  return bits * static_cast<double>(1 + iterations);
}

struct WCluster {
  std::vector<int> region;  // W, sorted
  Cluster cluster;
};

WCluster grow_region(const Graph& g, const Cluster& c, int radius) {
  WCluster w;
  const auto dist = bounded_bfs(g, c.members, radius);
  std::vector<int> order;
  for (int v = 0; v < g.size(); ++v) {
    if (dist[v] != kUnreachable) order.push_back(v);
  }
  w.region = order;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  w.cluster.id = c.id;
  w.cluster.leader = c.leader;
  w.cluster.members = w.region;
  w.cluster.tree = c.tree;
  std::vector<char> on_tree(g.size(), 0);
  if (c.leader >= 0) on_tree[c.leader] = 1;
  for (const auto& e : c.tree) on_tree[e.child] = on_tree[e.parent] = 1;
  for (int v : order) {
    if (on_tree[v]) continue;
    int parent = -1;
    for (int u : g.neighbors(v)) {
      if (dist[u] == dist[v] - 1 && (parent < 0 || u < parent)) parent = u;
    }
    w.cluster.tree.push_back({v, parent});
    on_tree[v] = 1;
  }
  return w;
}

BitString node_info(const LllInstance& comp, int u, const PartialFixing& phi) {
  const Graph& g = comp.graph;
  BitString b;
  g.id(u).write(b, g.id_bits());
  b.push(g.degree(u), 32);
  for (int w : g.neighbors(u)) g.id(w).write(b, g.id_bits());
  const Event& ev = comp.events[u];
  b.push_bool(ev.kind == PredicateKind::kSinkless);
  if (ev.kind == PredicateKind::kSinkless) {
    for (int t : ev.toward) b.push(t, bits_for(comp.variables[ev.vbl[0]].range));
  } else {
    for (uint8_t t : ev.table) b.push_bool(t);
  }
  const int w = bits_for(tape_range(comp, u));
  for (uint64_t v : phi.tape[u]) b.push(v, w);
  return b;
}

BitString tape_payload(const LllInstance& comp, int u, const std::vector<uint64_t>& tape) {
  BitString b;
  const int w = bits_for(tape_range(comp, u));
  for (uint64_t v : tape) b.push(v, w);
  return b;
}

DerandResult derandomize_at(const LllInstance& comp, const DerandParams& params,
                            const SimConfig& cfg, int component_id, int64_t iterations,
                            int64_t T, const std::vector<std::vector<int>>* order) {
  const int n = comp.size();
  DerandResult res;
  res.T = T;
  res.iterations = iterations;
  res.k = static_cast<int>(4 * (T + params.r) + 1);
  const int64_t global_n = std::max<int64_t>(params.global_n, n);
  res.bandwidth = 4 * std::max<int64_t>(log2_ceil(std::max<int64_t>(2, global_n)), n);
  SimConfig ccfg = cfg;
  ccfg.bandwidth_bits = res.bandwidth;
  ccfg.trace = nullptr;
  if (ccfg.mode == Mode::kCongest && !comp.range_bounded()) ccfg.mode = Mode::kLocal;

  const NetworkDecomposition nd = decompose_logn(comp.graph, res.k, ccfg);
  res.classes = static_cast<int>(nd.classes.size());
  res.rounds += nd.metrics.rounds;

  PartialFixing phi;
  phi.tape.assign(n, {});
  std::vector<int> everyone(n);
  for (int v = 0; v < n; ++v) everyone[v] = v;
  res.initial = failure_expectation(comp, iterations, phi, everyone, params.budget);
  if (res.initial >= 1) {
    throw DerandError("component " + std::to_string(component_id) +
                      ": initial failure expectation " + to_string(res.initial) + " is not below 1");
  }
  Rational global = res.initial;
  const int radius = static_cast<int>(2 * (T + params.r));

  for (size_t c = 0; c < nd.classes.size(); ++c) {
    const ClusterCollection& cc = nd.classes[c];
    ClusterCollection wcc;
    wcc.id_bits = cc.id_bits;
    std::vector<WCluster> regions;
    for (const Cluster& cl : cc.clusters) {
      regions.push_back(grow_region(comp.graph, cl, radius));
      wcc.clusters.push_back(regions.back().cluster);
    }
    std::vector<BitString> info(n);
    int x = 1;
    for (const auto& r : regions) {
      for (int u : r.region) {
        info[u] = node_info(comp, u, phi);
        x = std::max(x, static_cast<int>(info[u].size()));
      }
    }
    const GatherResult gathered = token_learning_gather(comp.graph, wcc, ccfg, info, x);
    res.rounds += gathered.metrics.rounds;

    std::vector<int> cluster_order(cc.clusters.size());
    for (size_t i = 0; i < cluster_order.size(); ++i) cluster_order[i] = static_cast<int>(i);
    if (order && c < order->size() && !(*order)[c].empty()) cluster_order = (*order)[c];
    for (int ci : cluster_order) {
      const auto& scope = regions[ci].region;
      std::vector<int> members = cc.clusters[ci].members;
      std::sort(members.begin(), members.end(), [&](int a, int b) {
        return gathered.indexing.index[a] < gathered.indexing.index[b];
      });
      Rational cur = failure_expectation(comp, iterations, phi, scope, params.budget);
      for (int u : members) {
        const uint64_t range = tape_range(comp, u);
        for (int64_t pos = static_cast<int64_t>(phi.tape[u].size());
             pos < positions(comp, u, iterations); ++pos) {
          bool done = false;
          for (uint64_t val = 0; val < range && !done; ++val) {
            phi.tape[u].push_back(val);
            const Rational e = failure_expectation(comp, iterations, phi, scope, params.budget);
            if (e <= cur) {
              global += e - cur;
              res.audit.push_back({component_id, static_cast<int>(c), ci, u, pos, val, cur, e,
                                   global});
              if (global >= 1) {
                throw DerandError("component " + std::to_string(component_id) +
                                  ": global expectation reached " + to_string(global));
              }
              cur = e;
              done = true;
            } else {
              phi.tape[u].pop_back();
            }
          }
          if (!done) {
            throw DerandError("component " + std::to_string(component_id) +
                              ": no value keeps the expectation from increasing");
          }
        }
      }
    }

    std::vector<std::vector<BitString>> payload(cc.clusters.size());
    int px = 1;
    for (size_t ci = 0; ci < cc.clusters.size(); ++ci) {
      payload[ci].resize(gathered.member_at[ci].size());
      for (size_t i = 0; i < payload[ci].size(); ++i) {
        const int u = gathered.member_at[ci][i];
        if (std::binary_search(cc.clusters[ci].members.begin(), cc.clusters[ci].members.end(), u)) {
          payload[ci][i] = tape_payload(comp, u, phi.tape[u]);
          px = std::max(px, static_cast<int>(payload[ci][i].size()));
        }
      }
    }
    const DisseminateResult dis =
        token_learning_disseminate(comp.graph, wcc, ccfg, payload, px, &gathered.indexing);
    res.rounds += dis.metrics.rounds;
    for (const Cluster& cl : cc.clusters) {
      for (int u : cl.members) {
        if (!(dis.received[u] == tape_payload(comp, u, phi.tape[u]))) {
          throw DerandError("dissemination delivered a wrong tape to node " + std::to_string(u));
        }
      }
    }
  }

  for (int u = 0; u < n; ++u) {
    if (static_cast<int64_t>(phi.tape[u].size()) != positions(comp, u, iterations)) {
      throw DerandError("node " + std::to_string(u) + " was never fixed");
    }
  }
  CpsOptions opts;
  opts.iteration_cap = iterations;
  const CpsResult run = cps_solve_with_tape(comp, ccfg, opts, phi.tape);
  res.rounds += run.metrics.rounds;
  if (!run.violated.empty()) {
    throw DerandError("component " + std::to_string(component_id) + ": " +
                      std::to_string(run.violated.size()) + " events hold after the fixed run");
  }
  res.tapes = std::move(phi.tape);
  res.assignment = run.assignment;
  return res;
}

}  // namespace

int64_t DerandParams::default_T(int64_t n) const {
  if (n <= 1) return 0;
  return static_cast<int64_t>(std::ceil(c_T * std::log2(static_cast<double>(n)) - 1e-9));
}

Rational failure_expectation(const LllInstance& comp, int64_t iterations,
                             const PartialFixing& phi, const std::vector<int>& scope,
                             int64_t budget) {
  if (scope.empty()) return 0;
  const auto dist = bounded_bfs(comp.graph, scope, influence_radius(iterations));
  std::vector<char> relevant(comp.size());
  for (int v = 0; v < comp.size(); ++v) relevant[v] = dist[v] != kUnreachable;
  if (iterations == 0) return initial_expectation(comp, phi, scope, relevant, budget);
  return lazy_expectation(comp, iterations, phi, scope_mask(comp.size(), scope), relevant,
                          budget);
}

Rational failure_expectation_brute(const LllInstance& comp, int64_t iterations,
                                   const PartialFixing& phi, const std::vector<int>& scope,
                                   int64_t budget) {
  const int n = comp.size();
  struct Slot {
    int node;
    int64_t index;
    uint64_t range;
  };
  std::vector<Slot> slots;
  double total = 1;
  std::vector<std::vector<uint64_t>> tape(n);
  for (int u = 0; u < n; ++u) {
    const int64_t h = positions(comp, u, iterations);
    const uint64_t range = tape_range(comp, u);
    tape[u].assign(h, 0);
    for (int64_t i = 0; i < h; ++i) {
      if (u < static_cast<int>(phi.tape.size()) && i < static_cast<int64_t>(phi.tape[u].size())) {
        tape[u][i] = phi.tape[u][i];
      } else {
        slots.push_back({u, i, range});
        total *= static_cast<double>(range);
      }
    }
  }
  if (total > static_cast<double>(budget)) {
    throw BudgetExceeded("brute-force expectation", total, budget);
  }
  const auto mask = scope_mask(n, scope);
  const TapeFn draw = [&](int v, int64_t i) { return tape[v][i]; };
  int64_t hits = 0, leaves = 0;
  while (true) {
    ++leaves;
    hits += count_in(simulate_cps(comp, iterations, draw).violated, mask);
    size_t j = 0;
    for (; j < slots.size(); ++j) {
      uint64_t& v = tape[slots[j].node][slots[j].index];
      if (++v < slots[j].range) break;
      v = 0;
    }
    if (j == slots.size()) break;
  }
  Rational r(mpz_class(static_cast<long>(hits)), mpz_class(static_cast<long>(leaves)));
  r.canonicalize();
  return r;
}

nlohmann::json audit_to_json(const AuditEntry& e) {
  return {{"component", e.component}, {"class", e.cls},          {"cluster", e.cluster},
          {"node", e.node},           {"position", e.position},  {"value", e.value},
          {"before", to_string(e.before)}, {"after", to_string(e.after)},
          {"global", to_string(e.global)}};
}

DerandResult derandomize_component(const LllInstance& comp, const DerandParams& params,
                                   const SimConfig& cfg, int component_id,
                                   const std::vector<std::vector<int>>* order) {
  const int64_t t_default = params.T >= 0 ? params.T : params.default_T(comp.size());
  const int64_t it_default = iterations_for(t_default);
  const double limit = std::log2(static_cast<double>(params.budget));
  int64_t it = it_default;
  while (it > 0 && branching_log2(comp, it) > limit) {
    if (!params.shrink_T) {
      throw BudgetExceeded("derandomization of component " + std::to_string(component_id),
                           std::exp2(branching_log2(comp, it)), params.budget);
    }
    --it;
  }
  while (true) {
    try {
      DerandResult r = derandomize_at(comp, params, cfg, component_id, it,
                                      it == it_default ? t_default : 3 * it, order);
      r.T_default = t_default;
      return r;
    } catch (const BudgetExceeded&) {
      if (it == 0 || !params.shrink_T) throw;
      --it;
    }
  }
}

std::vector<DerandResult> deterministic_lll(const std::vector<ResidualComponent>& residual,
                                            const DerandParams& params, const SimConfig& cfg) {
  std::vector<DerandResult> out(residual.size());
  std::vector<std::exception_ptr> errors(residual.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < residual.size(); i = next++) {
      try {
        out[i] = derandomize_component(residual[i].instance, params, cfg, static_cast<int>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(residual.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

PipelineResult solve_range_bounded_lll(const LllInstance& inst, const SimConfig& cfg,
                                       const DerandParams& params) {
  PipelineResult r;
  r.criteria = check_criteria(inst);
  if (!r.criteria.residual_ok) {
    throw CriterionFailure("criterion sqrt(p) (d + 1) < 1 fails (p = " +
                               to_string(r.criteria.p) + ", d = " + std::to_string(inst.d) + ")",
                           r.criteria);
  }
  r.pre = preshatter(inst, cfg);
  if (!r.pre.residual_ok) {
    throw DerandError("residual components violate the criterion sqrt(p) (d + 1) < 1");
  }
  DerandParams p = params;
  p.global_n = inst.size();
  r.post = deterministic_lll(r.pre.residual, p, cfg);
  r.assignment = r.pre.assignment;
  for (size_t c = 0; c < r.post.size(); ++c) {
    const auto& vars = r.pre.residual[c].variables;
    for (size_t i = 0; i < vars.size(); ++i) {
      r.assignment.value[vars[i]] = r.post[c].assignment.value[i];
    }
    r.post_rounds = std::max(r.post_rounds, r.post[c].rounds);
  }
  r.pre_rounds = r.pre.rounds;
  r.violated = validate_assignment(inst, r.assignment);
  return r;
}

LambdaResult local_lambda_lll(const LllInstance& inst, int lambda, const SimConfig& cfg,
                              const LambdaOptions& opts) {
  LambdaResult r;
  r.criteria = check_criteria(inst, lambda, opts.budget);
  if (opts.require_criterion && !r.criteria.ped_lambda_ok) {
    throw CriterionFailure("criterion p (ed)^" + std::to_string(lambda) + " < 1 fails",
                           r.criteria);
  }
  const int n = inst.size();
  Assignment& a = r.assignment;
  a = Assignment::unset(inst);
  std::vector<Rational> prob(n);
  r.initial = 0;
  for (int e = 0; e < n; ++e) {
    prob[e] = event_probability(inst, e, a, opts.budget);
    r.initial += prob[e];
  }
  if (r.initial >= 1) {
    throw CriterionFailure("sum of event probabilities " + to_string(r.initial) +
                               " is not below 1",
                           r.criteria);
  }
  SimConfig lcfg = cfg;
  lcfg.mode = Mode::kLocal;
  lcfg.trace = nullptr;
  const Graph h = dependency_graph(inst);
  r.decomposition = decompose_few_colors(h, lambda, 2, lcfg);
  r.rounds = r.decomposition.metrics.rounds;
  Rational sum = r.initial;

  for (const ClusterCollection& cc : r.decomposition.classes) {
    std::vector<int> touched(n, -1);
    std::vector<BitString> info(n);
    int x = 1;
    for (size_t ci = 0; ci < cc.clusters.size(); ++ci) {
      for (int u : cc.clusters[ci].members) {
        for (int v : inst.owned[u]) {
          for (int e : inst.var_events[v]) {
            if (touched[e] >= 0 && touched[e] != static_cast<int>(ci)) r.parallel_safe = false;
            touched[e] = static_cast<int>(ci);
          }
        }
        info[u] = node_info(inst, u, PartialFixing{std::vector<std::vector<uint64_t>>(n)});
        x = std::max(x, static_cast<int>(info[u].size()));
      }
    }
    const GatherResult gathered = token_learning_gather(h, cc, lcfg, info, x);
    r.rounds += gathered.metrics.rounds;
    for (const Cluster& cl : cc.clusters) {
      std::vector<int> vars;
      for (int u : cl.members) vars.insert(vars.end(), inst.owned[u].begin(), inst.owned[u].end());
      std::sort(vars.begin(), vars.end());
      for (int x_id : vars) {
        const auto& users = inst.var_events[x_id];
        Rational cur = 0;
        for (int e : users) cur += prob[e];
        bool done = false;
        for (int val = 0; val < inst.variables[x_id].range && !done; ++val) {
          a.value[x_id] = val;
          Rational next = 0;
          std::vector<Rational> updated;
          for (int e : users) {
            updated.push_back(event_probability(inst, e, a, opts.budget));
            next += updated.back();
          }
          if (next <= cur) {
            for (size_t i = 0; i < users.size(); ++i) prob[users[i]] = updated[i];
            sum += next - cur;
            done = true;
          }
        }
        if (!done) throw DerandError("no value keeps the probability sum from increasing");
      }
      r.after_cluster.push_back(sum);
      if (sum >= 1) throw DerandError("probability sum reached " + to_string(sum));
    }
    std::vector<std::vector<BitString>> payload(cc.clusters.size());
    int px = 1;
    for (size_t ci = 0; ci < cc.clusters.size(); ++ci) {
      payload[ci].resize(gathered.member_at[ci].size());
      for (size_t i = 0; i < payload[ci].size(); ++i) {
        const int u = gathered.member_at[ci][i];
        for (int v : inst.owned[u]) {
          payload[ci][i].push(a.value[v], bits_for(inst.variables[v].range));
        }
        px = std::max(px, static_cast<int>(payload[ci][i].size()));
      }
    }
    r.rounds +=
        token_learning_disseminate(h, cc, lcfg, payload, px, &gathered.indexing).metrics.rounds;
  }
  r.violated = validate_assignment(inst, a);
  return r;
}

}  // namespace congestlab
