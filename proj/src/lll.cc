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


#include "congestlab/lll.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "congestlab/bits.h"
#include "congestlab/generators.h"

namespace congestlab {
namespace {

constexpr int64_t kTableCap = int64_t{1} << 24;

int64_t table_size(const LllInstance& inst, const std::vector<int>& vbl) {
  int64_t size = 1;
  for (int x : vbl) {
    size *= inst.variables[x].range;
    if (size > kTableCap) throw InstanceError("event table larger than 2^24 entries");
  }
  return size;
}

Rational inverse_product(const LllInstance& inst, const std::vector<int>& vars) {
  mpz_class den = 1;
  for (int x : vars) den *= inst.variables[x].range;
  Rational r(mpz_class(1), den);
  r.canonicalize();
  return r;
}

}  // namespace

BudgetExceeded::BudgetExceeded(const std::string& what, double req, int64_t b)
    : std::runtime_error(what + ": enumeration of " + std::to_string(req) +
                         " exceeds budget " + std::to_string(b)),
      required(req),
      budget(b) {}

void LllInstance::finalize() {
  const int n = graph.size();
  if (static_cast<int>(events.size()) != n) {
    throw InstanceError("instance: " + std::to_string(events.size()) + " events for " +
                        std::to_string(n) + " nodes");
  }
  const int m = static_cast<int>(variables.size());
  owned.assign(n, {});
  for (int x = 0; x < m; ++x) {
    const auto& var = variables[x];
    if (var.owner < 0 || var.owner >= n) {
      throw InstanceError("variable " + std::to_string(x) + ": owner out of range");
    }
    if (var.range < 1) throw InstanceError("variable " + std::to_string(x) + ": range < 1");
    owned[var.owner].push_back(x);
  }
  var_events.assign(m, {});
  for (int e = 0; e < n; ++e) {
    Event& ev = events[e];
    const std::string name = "event " + std::to_string(e);
    if (!std::is_sorted(ev.vbl.begin(), ev.vbl.end()) ||
        std::adjacent_find(ev.vbl.begin(), ev.vbl.end()) != ev.vbl.end()) {
      throw InstanceError(name + ": vbl must be sorted and distinct");
    }
    for (int x : ev.vbl) {
      if (x < 0 || x >= m) throw InstanceError(name + ": unknown variable");
      var_events[x].push_back(e);
    }
    if (ev.kind == PredicateKind::kTable) {
      if (static_cast<int64_t>(ev.table.size()) != table_size(*this, ev.vbl)) {
        throw InstanceError(name + ": truth table has wrong size");
      }
    } else {
      if (ev.toward.size() != ev.vbl.size()) {
        throw InstanceError(name + ": toward list has wrong size");
      }
      for (size_t i = 0; i < ev.vbl.size(); ++i) {
        if (ev.toward[i] < 0 || ev.toward[i] >= variables[ev.vbl[i]].range) {
          throw InstanceError(name + ": toward value out of range");
        }
      }
    }
    if (ev.prob_override && (*ev.prob_override < 0 || *ev.prob_override > 1)) {
      throw InstanceError(name + ": probability override outside [0, 1]");
    }
  }
  dependency.assign(n, {});
  for (int x = 0; x < m; ++x) {
    const int w = variables[x].owner;
    for (int a : var_events[x]) {
      if (a != w && graph.port_of(a, w) < 0) {
        throw InstanceError("variable " + std::to_string(x) + " is not owned by event " +
                            std::to_string(a) + " or a neighbor");
      }
      for (int b : var_events[x]) {
        if (a != b) dependency[a].push_back(b);
      }
    }
  }
  d = 0;
  for (int e = 0; e < n; ++e) {
    auto& dep = dependency[e];
    std::sort(dep.begin(), dep.end());
    dep.erase(std::unique(dep.begin(), dep.end()), dep.end());
    for (int f : dep) {
      if (graph.port_of(e, f) < 0) {
        throw InstanceError("events " + std::to_string(e) + " and " + std::to_string(f) +
                            " share a variable but are not adjacent");
      }
    }
    d = std::max(d, static_cast<int>(dep.size()));
  }
}

bool LllInstance::range_bounded() const {
  const int64_t dd = d;
  const int64_t max_vbl = dd * dd * dd + 3 * dd + 1;
  const int64_t max_range = std::max<int64_t>(2, dd * dd);
  for (const auto& ev : events) {
    if (static_cast<int64_t>(ev.vbl.size()) > max_vbl) return false;
  }
  for (const auto& v : variables) {
    if (v.range > max_range) return false;
  }
  return true;
}

bool LllInstance::holds_on(int e, const std::vector<int>& values) const {
  const Event& ev = events[e];
  if (ev.kind == PredicateKind::kSinkless) {
    for (size_t i = 0; i < values.size(); ++i) {
      if (values[i] != ev.toward[i]) return false;
    }
    return true;
  }
  int64_t index = 0, scale = 1;
  for (size_t i = 0; i < values.size(); ++i) {
    index += values[i] * scale;
    scale *= variables[ev.vbl[i]].range;
  }
  return ev.table[index] != 0;
}

Assignment Assignment::unset(const LllInstance& inst) {
  Assignment a;
  a.value.assign(inst.variables.size(), kUnset);
  a.frozen.assign(inst.variables.size(), 0);
  return a;
}

bool Assignment::total() const {
  return std::none_of(value.begin(), value.end(), [](int v) { return v == kUnset; });
}

Rational event_probability(const LllInstance& inst, int e, const Assignment& a,
                           int64_t budget) {
  const Event& ev = inst.events[e];
  std::vector<int> free_pos;
  std::vector<int> values(ev.vbl.size());
  for (size_t i = 0; i < ev.vbl.size(); ++i) {
    values[i] = a.value[ev.vbl[i]];
    if (values[i] == kUnset) free_pos.push_back(static_cast<int>(i));
  }
  if (ev.prob_override && free_pos.size() == ev.vbl.size()) return *ev.prob_override;
  if (ev.kind == PredicateKind::kSinkless) {
    std::vector<int> free_vars;
    for (size_t i = 0; i < ev.vbl.size(); ++i) {
      if (values[i] == kUnset) {
        free_vars.push_back(ev.vbl[i]);
      } else if (values[i] != ev.toward[i]) {
        return Rational(0);
      }
    }
    return inverse_product(inst, free_vars);
  }
  double total = 1;
  for (int i : free_pos) total *= inst.variables[ev.vbl[i]].range;
  if (total > static_cast<double>(budget)) {
    throw BudgetExceeded("event " + std::to_string(e), total, budget);
  }
  for (int i : free_pos) values[i] = 0;
  int64_t hits = 0, count = 0;
  while (true) {
    ++count;
    if (inst.holds_on(e, values)) ++hits;
    size_t j = 0;
    for (; j < free_pos.size(); ++j) {
      int& v = values[free_pos[j]];
      if (++v < inst.variables[ev.vbl[free_pos[j]]].range) break;
      v = 0;
    }
    if (j == free_pos.size()) break;
  }
  Rational r(mpz_class(static_cast<long>(hits)), mpz_class(static_cast<long>(count)));
  r.canonicalize();
  return r;
}

Rational event_probability(const LllInstance& inst, int e, int64_t budget) {
  return event_probability(inst, e, Assignment::unset(inst), budget);
}

CriterionReport check_criteria(const LllInstance& inst, int lambda, int64_t budget) {
  CriterionReport r;
  r.d = inst.d;
  r.lambda = lambda;
  r.p = 0;
  for (int e = 0; e < inst.size(); ++e) {
    r.p = std::max(r.p, event_probability(inst, e, budget));
  }
  const double p = to_double(r.p);
  const double d = inst.d;
  const double e = std::exp(1.0);
  r.epd = e * p * d;
  r.epd2 = e * p * d * d;
  r.ped8 = p * std::pow(e * d, 8);
  r.ped_lambda = p * std::pow(e * d, lambda);
  // A certain event can never be avoided, whatever d is.
  const bool possible = r.p < 1;
  auto decide = [&](const Rational& x, int power) {
    const Verdict v = compare_e_power(x, power);
    if (v == Verdict::kUndecided) r.undecided = true;
    return possible && v == Verdict::kBelow;
  };
  const Rational dq(inst.d);
  Rational dpow = 1;
  for (int i = 0; i < 8; ++i) dpow *= dq;
  Rational dl = 1;
  for (int i = 0; i < lambda; ++i) dl *= dq;
  r.epd_ok = decide(r.p * dq, 1);
  r.epd2_ok = decide(r.p * dq * dq, 1);
  r.ped8_ok = decide(r.p * dpow, 8);
  r.ped_lambda_ok = decide(r.p * dl, lambda);
  r.residual_ok = possible && r.p * (dq + 1) * (dq + 1) < 1;
  return r;
}

std::vector<int> validate_assignment(const LllInstance& inst, const Assignment& a) {
  if (a.value.size() != inst.variables.size()) {
    throw std::invalid_argument("assignment size does not match the instance");
  }
  std::vector<int> violated;
  std::vector<int> values;
  for (int e = 0; e < inst.size(); ++e) {
    const auto& vbl = inst.events[e].vbl;
    values.resize(vbl.size());
    for (size_t i = 0; i < vbl.size(); ++i) {
      values[i] = a.value[vbl[i]];
      if (values[i] == kUnset) {
        throw std::invalid_argument("variable " + std::to_string(vbl[i]) + " of event " +
                                    std::to_string(e) + " is unset");
      }
      if (values[i] < 0 || values[i] >= inst.variables[vbl[i]].range) {
        throw std::invalid_argument("variable " + std::to_string(vbl[i]) +
                                    " outside its range");
      }
    }
    if (inst.holds_on(e, values)) violated.push_back(e);
  }
  return violated;
}

LllInstance make_sinkless(const Graph& g) {
  LllInstance inst;
  inst.graph = g;
  for (int v = 0; v < g.size(); ++v) {
    if (g.degree(v) < 1) {
      throw InstanceError("sinkless: node " + std::to_string(v) + " has no edges");
    }
  }
  inst.events.resize(g.size());
  for (int e = 0; e < static_cast<int>(g.edge_count()); ++e) {
    const auto [u, v] = g.edge(e);
    inst.variables.push_back({u, 2});
    inst.events[u].vbl.push_back(e);
    inst.events[u].toward.push_back(0);
    inst.events[v].vbl.push_back(e);
    inst.events[v].toward.push_back(1);
  }
  for (auto& ev : inst.events) {
    ev.kind = PredicateKind::kSinkless;
    // Edge ids are assigned in sorted edge order, but the two lists were
    // filled together; sort them jointly.
    std::vector<size_t> order(ev.vbl.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return ev.vbl[a] < ev.vbl[b]; });
    std::vector<int> vbl, toward;
    for (size_t i : order) {
      vbl.push_back(ev.vbl[i]);
      toward.push_back(ev.toward[i]);
    }
    ev.vbl = std::move(vbl);
    ev.toward = std::move(toward);
  }
  inst.finalize();
  return inst;
}

LllInstance make_synthetic(const Graph& g, const Rational& p_target, int range,
                           int vars_per_node, bool share) {
  if (range < 1 || vars_per_node < 0) throw InstanceError("synthetic: bad range or count");
  if (p_target < 0 || p_target > 1) throw InstanceError("synthetic: p_target outside [0, 1]");
  LllInstance inst;
  inst.graph = g;
  inst.events.resize(g.size());
  for (int v = 0; v < g.size(); ++v) {
    for (int i = 0; i < vars_per_node; ++i) {
      inst.events[v].vbl.push_back(static_cast<int>(inst.variables.size()));
      inst.variables.push_back({v, range});
    }
  }
  if (share) {
    for (const auto& [u, v] : g.edges()) {
      const int x = static_cast<int>(inst.variables.size());
      inst.variables.push_back({u, range});
      inst.events[u].vbl.push_back(x);
      inst.events[v].vbl.push_back(x);
    }
  }
  for (auto& ev : inst.events) {
    std::sort(ev.vbl.begin(), ev.vbl.end());
    const int64_t size = table_size(inst, ev.vbl);
    const Rational bad = p_target * Rational(static_cast<long>(size));
    if (bad.get_den() != 1) {
      throw InstanceError("synthetic: p_target * table size is not an integer");
    }
    const int64_t count = bad.get_num().get_si();
    ev.table.assign(size, 0);
    std::fill(ev.table.end() - count, ev.table.end(), 1);
  }
  inst.finalize();
  return inst;
}

LllInstance make_rigged(const std::string& fixture) {
  LllInstance inst;
  if (fixture == "single") {
    inst.graph = Graph::from_edges(1, std::vector<Edge>{});
    inst.variables = {{0, 2}};
    Event ev;
    ev.vbl = {0};
    ev.table = {0, 1};
    inst.events = {ev};
  } else if (fixture == "double") {
    inst.graph = Graph::from_edges(2, std::vector<Edge>{{0, 1}});
    inst.variables = {{0, 4}, {1, 4}};
    Event a, b;
    a.vbl = b.vbl = {0, 1};
    a.table.assign(16, 0);
    b.table.assign(16, 0);
    for (int x0 = 0; x0 < 4; ++x0) {
      for (int x1 = 0; x1 < 4; ++x1) {
        a.table[x0 + 4 * x1] = x0 == x1;
        b.table[x0 + 4 * x1] = (x0 + x1) % 4 == 3;
      }
    }
    inst.events = {a, b};
  } else {
    throw InstanceError("unknown rigged fixture '" + fixture + "'");
  }
  inst.finalize();
  return inst;
}

LllInstance make_random_component(int nodes, uint64_t seed, bool sum_below_one) {
  if (nodes < 1) throw InstanceError("random component: need at least one node");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  std::vector<int> deg(nodes, 0);
  for (int v = 1; v < nodes; ++v) {
    int u = static_cast<int>(uniform_below(rng, v));
    for (int tries = 0; deg[u] >= 3 && tries < 8; ++tries) {
      u = static_cast<int>(uniform_below(rng, v));
    }
    edges.emplace_back(u, v);
    ++deg[u];
    ++deg[v];
  }
  for (int extra = 0; extra < nodes / 3; ++extra) {
    const int u = static_cast<int>(uniform_below(rng, nodes));
    const int v = static_cast<int>(uniform_below(rng, nodes));
    if (u == v || deg[u] >= 4 || deg[v] >= 4) continue;
    const Edge e{std::min(u, v), std::max(u, v)};
    if (std::find(edges.begin(), edges.end(), e) != edges.end()) continue;
    edges.push_back(e);
    ++deg[u];
    ++deg[v];
  }
  LllInstance inst;
  inst.graph = with_random_ids(Graph::from_edges(nodes, edges), 2 * log2_ceil(nodes) + 8, seed ^ 0x9e3779b97f4a7c15ULL);
  inst.events.resize(nodes);
  for (int v = 0; v < nodes; ++v) {
    if (uniform_below(rng, 2) == 0) {
      inst.events[v].vbl.push_back(static_cast<int>(inst.variables.size()));
      inst.variables.push_back({v, 2 + static_cast<int>(uniform_below(rng, 2))});
    }
  }
  for (const auto& [u, v] : inst.graph.edges()) {
    const int x = static_cast<int>(inst.variables.size());
    inst.variables.push_back({uniform_below(rng, 2) ? u : v,
                              2 + static_cast<int>(uniform_below(rng, 2))});
    inst.events[u].vbl.push_back(x);
    inst.events[v].vbl.push_back(x);
  }
  int d = 0;
  for (int v = 0; v < nodes; ++v) d = std::max(d, inst.graph.degree(v));
  for (auto& ev : inst.events) {
    std::sort(ev.vbl.begin(), ev.vbl.end());
    const int64_t size = table_size(inst, ev.vbl);
    const int64_t count = size / (2 * (sum_below_one ? std::max(d + 1, nodes) : d + 1));
    std::vector<int64_t> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    ev.table.assign(size, 0);
    for (int64_t i = 0; i < count; ++i) ev.table[idx[i]] = 1;
  }
  inst.finalize();
  return inst;
}

nlohmann::json instance_to_json(const LllInstance& inst) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [u, v] : inst.graph.edges()) edges.push_back({u, v});
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& id : inst.graph.ids()) ids.push_back(id.to_string());
  nlohmann::json vars = nlohmann::json::array();
  for (size_t x = 0; x < inst.variables.size(); ++x) {
    vars.push_back({{"id", x}, {"owner", inst.variables[x].owner},
                    {"range", inst.variables[x].range}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (int e = 0; e < inst.size(); ++e) {
    const Event& ev = inst.events[e];
    nlohmann::json j = {{"node", e}, {"vbl", ev.vbl}};
    if (ev.kind == PredicateKind::kSinkless) {
      j["predicate"] = "sinkless";
      j["toward"] = ev.toward;
    } else {
      std::string bits(ev.table.size(), '0');
      for (size_t i = 0; i < ev.table.size(); ++i) bits[i] = ev.table[i] ? '1' : '0';
      j["predicate"] = {{"table", bits}};
    }
    if (ev.prob_override) j["prob_override"] = to_string(*ev.prob_override);
    events.push_back(j);
  }
  return {{"graph", {{"n", inst.graph.size()}, {"edges", edges}, {"ids", ids},
                     {"id_bits", inst.graph.id_bits()}}},
          {"variables", vars},
          {"events", events}};
}

LllInstance instance_from_json(const nlohmann::json& j) {
  LllInstance inst;
  try {
    const auto& gj = j.at("graph");
    const int n = gj.at("n").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : gj.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    std::vector<Identifier> ids;
    if (gj.contains("ids")) {
      for (const auto& s : gj.at("ids")) ids.push_back(Identifier::parse(s.get<std::string>()));
    }
    inst.graph = Graph::from_edges(n, edges, ids, gj.value("id_bits", 0));
    const auto& vars = j.at("variables");
    inst.variables.resize(vars.size());
    for (const auto& v : vars) {
      const size_t id = v.at("id").get<size_t>();
      if (id >= vars.size()) throw InstanceError("variable id out of range");
      inst.variables[id] = {v.at("owner").get<int>(), v.at("range").get<int>()};
    }
    inst.events.resize(n);
    std::vector<char> seen(n, 0);
    for (const auto& ej : j.at("events")) {
      const int node = ej.at("node").get<int>();
      if (node < 0 || node >= n || seen[node]) throw InstanceError("bad or repeated event node");
      seen[node] = 1;
      Event& ev = inst.events[node];
      ev.vbl = ej.at("vbl").get<std::vector<int>>();
      const auto& pred = ej.at("predicate");
      if (pred.is_string()) {
        if (pred.get<std::string>() != "sinkless") {
          throw InstanceError("unknown builtin predicate " + pred.get<std::string>());
        }
        ev.kind = PredicateKind::kSinkless;
        if (ej.contains("toward")) {
          ev.toward = ej.at("toward").get<std::vector<int>>();
        } else {
          for (int x : ev.vbl) {
            if (x < 0 || x >= static_cast<int>(inst.variables.size())) {
              throw InstanceError("unknown variable in vbl");
            }
            ev.toward.push_back(inst.variables[x].owner == node ? 0 : 1);
          }
        }
      } else {
        const std::string bits = pred.at("table").get<std::string>();
        ev.table.resize(bits.size());
        for (size_t i = 0; i < bits.size(); ++i) {
          if (bits[i] != '0' && bits[i] != '1') throw InstanceError("table must be 0/1");
          ev.table[i] = bits[i] == '1';
        }
      }
      if (ej.contains("prob_override")) {
        ev.prob_override = rational_from_string(ej.at("prob_override").get<std::string>());
      }
    }
    if (std::count(seen.begin(), seen.end(), 0) > 0) {
      throw InstanceError("every node needs exactly one event");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InstanceError(std::string("instance JSON: ") + e.what());
  }
  inst.finalize();
  return inst;
}

nlohmann::json assignment_to_json(const Assignment& a) {
  std::vector<int> frozen(a.frozen.begin(), a.frozen.end());
  return {{"values", a.value}, {"frozen", frozen}};
}

Assignment assignment_from_json(const nlohmann::json& j) {
  Assignment a;
  a.value = j.at("values").get<std::vector<int>>();
  if (j.contains("frozen")) {
    for (int f : j.at("frozen").get<std::vector<int>>()) a.frozen.push_back(f != 0);
  } else {
    a.frozen.assign(a.value.size(), 0);
  }
  if (a.frozen.size() != a.value.size()) throw std::invalid_argument("frozen list size mismatch");
  return a;
}

}  // namespace congestlab
