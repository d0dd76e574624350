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

#include "congestlab/cluster.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "congestlab/generators.h"

namespace congestlab {

int64_t ClusterCollection::clustered_nodes() const {
  int64_t total = 0;
  for (const auto& c : clusters) total += static_cast<int64_t>(c.members.size());
  return total;
}

std::vector<int> ClusterCollection::owner(int n) const {
  std::vector<int> own(n, -1);
  for (int c = 0; c < static_cast<int>(clusters.size()); ++c) {
    for (int v : clusters[c].members) own[v] = c;
  }
  return own;
}

ClusterCollection ClusterCollection::singletons(const Graph& g,
                                                const std::vector<int>& nodes) {
  ClusterCollection cc;
  cc.id_bits = g.id_bits();
  for (int v : nodes) {
    Cluster c;
    c.id = g.id(v);
    c.leader = v;
    c.members = {v};
    cc.clusters.push_back(std::move(c));
  }
  return cc;
}

namespace {

std::string name(const Cluster& c) { return "cluster " + c.id.to_string(); }

// Undirected adjacency of a Steiner tree, keyed by node.
std::map<int, std::vector<int>> tree_adjacency(const Cluster& c) {
  std::map<int, std::vector<int>> adj;
  adj[c.leader];
  for (const auto& e : c.tree) {
    adj[e.child].push_back(e.parent);
    adj[e.parent].push_back(e.child);
  }
  return adj;
}

std::pair<int, int> farthest(const std::map<int, std::vector<int>>& adj,
                             int from) {
  std::map<int, int> dist{{from, 0}};
  std::vector<int> queue{from};
  std::pair<int, int> best{from, 0};
  for (size_t i = 0; i < queue.size(); ++i) {
    const int v = queue[i];
    const int d = dist[v];
    if (d > best.second) best = {v, d};
    for (int u : adj.at(v)) {
      if (dist.emplace(u, d + 1).second) queue.push_back(u);
    }
  }
  return best;
}

}  // namespace

int steiner_diameter(const Cluster& c) {
  if (c.tree.empty()) return 0;
  auto adj = tree_adjacency(c);
  const int end = farthest(adj, c.leader).first;
  return farthest(adj, end).second;
}

int steiner_depth(const Cluster& c) {
  if (c.tree.empty()) return 0;
  return farthest(tree_adjacency(c), c.leader).second;
}

int min_cluster_distance(const Graph& g, const ClusterCollection& cc) {
  if (cc.clusters.size() < 2) return kUnreachable;
  std::vector<int> label(g.size(), -1);
  std::vector<int> dist(g.size(), kUnreachable);
  std::vector<int> queue;
  for (int c = 0; c < static_cast<int>(cc.clusters.size()); ++c) {
    for (int v : cc.clusters[c].members) {
      label[v] = c;
      dist[v] = 0;
      queue.push_back(v);
    }
  }
  for (size_t i = 0; i < queue.size(); ++i) {
    const int v = queue[i];
    for (int u : g.neighbors(v)) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        label[u] = label[v];
        queue.push_back(u);
      }
    }
  }
  int best = kUnreachable;
  for (const auto& [u, v] : g.edges()) {
    if (label[u] >= 0 && label[v] >= 0 && label[u] != label[v]) {
      best = std::min(best, dist[u] + dist[v] + 1);
    }
  }
  return best;
}

std::vector<std::vector<int>> cluster_components(const Graph& g,
                                                 const ClusterCollection& cc,
                                                 int k) {
  const int p = static_cast<int>(cc.clusters.size());
  const std::vector<int> owner = cc.owner(g.size());
  std::vector<int> parent(p);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& comp :
       components_under(g, [&](int v) { return owner[v] >= 0; }, k)) {
    for (int v : comp) parent[find(owner[v])] = find(owner[comp.front()]);
  }
  std::vector<std::vector<int>> out;
  std::vector<int> slot(p, -1);
  for (int c = 0; c < p; ++c) {
    const int r = find(c);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(c);
  }
  return out;
}

CollectionStats validate_collection(const Graph& g,
                                    const ClusterCollection& cc) {
  const int n = g.size();
  if (cc.id_bits < 1 || cc.id_bits > kMaxIdBits) {
    throw CollectionError("id_bits out of range");
  }
  CollectionStats stats;
  std::set<Identifier> ids;
  std::vector<int> owner(n, -1);
  std::vector<int> edge_count(g.edge_count(), 0);
  std::vector<int> node_count(n, 0);
  for (int ci = 0; ci < static_cast<int>(cc.clusters.size()); ++ci) {
    const Cluster& c = cc.clusters[ci];
    if (!c.id.fits(cc.id_bits)) {
      throw CollectionError(name(c) + ": identifier wider than id_bits");
    }
    if (!ids.insert(c.id).second) {
      throw CollectionError(name(c) + ": duplicate cluster identifier");
    }
    if (c.members.empty()) throw CollectionError(name(c) + ": no members");
    if (c.leader < 0 || c.leader >= n) {
      throw CollectionError(name(c) + ": leader out of range");
    }
    for (size_t i = 0; i < c.members.size(); ++i) {
      const int v = c.members[i];
      if (v < 0 || v >= n) {
        throw CollectionError(name(c) + ": member out of range");
      }
      if (i > 0 && c.members[i - 1] >= v) {
        throw CollectionError(name(c) + ": members not sorted and unique");
      }
      if (owner[v] >= 0) {
        throw CollectionError(
            "disjointness violated: node " + std::to_string(v) + " in " +
            name(cc.clusters[owner[v]]) + " and " + name(c));
      }
      owner[v] = ci;
    }
    // Tree shape: unique parent per child, real edges, leaderward paths.
    std::map<int, int> parent;
    for (const auto& e : c.tree) {
      if (e.child < 0 || e.child >= n || e.parent < 0 || e.parent >= n) {
        throw CollectionError(name(c) + ": Steiner edge out of range");
      }
      const int ei = g.edge_index(e.child, e.parent);
      if (ei < 0) {
        throw CollectionError(name(c) + ": Steiner edge " +
                              std::to_string(e.child) + "->" +
                              std::to_string(e.parent) + " is not in G");
      }
      if (e.child == c.leader) {
        throw CollectionError(name(c) + ": leader has an outgoing edge");
      }
      if (!parent.emplace(e.child, e.parent).second) {
        throw CollectionError(name(c) + ": node " + std::to_string(e.child) +
                              " has two parents");
      }
      ++edge_count[ei];
    }
    std::set<int> nodes{c.leader};
    for (const auto& [child, par] : parent) {
      nodes.insert(child);
      nodes.insert(par);
    }
    for (int v : nodes) {
      int cur = v;
      size_t steps = 0;
      while (cur != c.leader) {
        auto it = parent.find(cur);
        if (it == parent.end() || ++steps > parent.size()) {
          throw CollectionError(name(c) + ": node " + std::to_string(v) +
                                " has no oriented path to the leader");
        }
        cur = it->second;
      }
      ++node_count[v];
    }
    for (int v : c.members) {
      if (!nodes.count(v)) {
        throw CollectionError(name(c) + ": member " + std::to_string(v) +
                              " is not a terminal of the Steiner tree");
      }
    }
    stats.steiner_radius = std::max(stats.steiner_radius, steiner_diameter(c));
    stats.max_cluster_size =
        std::max(stats.max_cluster_size, static_cast<int>(c.members.size()));
  }
  for (int x : edge_count) stats.edge_congestion = std::max(stats.edge_congestion, x);
  for (int x : node_count) stats.node_congestion = std::max(stats.node_congestion, x);
  stats.min_cluster_distance = min_cluster_distance(g, cc);
  return stats;
}

ClusterViews build_views(const Graph& g, const ClusterCollection& cc) {
  const int n = g.size();
  ClusterViews views;
  views.at.assign(n, {});
  views.edge_trees.assign(g.edge_count(), {});
  std::vector<int> order(cc.clusters.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return cc.clusters[a].id < cc.clusters[b].id;
  });
  for (int ci : order) {
    const Cluster& c = cc.clusters[ci];
    std::map<int, TreeMembership> local;
    local[c.leader].cluster = ci;
    for (const auto& e : c.tree) {
      local[e.child].cluster = ci;
      local[e.parent].cluster = ci;
      local[e.child].parent_port = g.port_of(e.child, e.parent);
      local[e.parent].child_ports.push_back(g.port_of(e.parent, e.child));
      views.edge_trees[g.edge_index(e.child, e.parent)].push_back(ci);
    }
    for (int v : c.members) local[v].member = true;
    for (auto& [v, m] : local) {
      m.cluster = ci;
      std::sort(m.child_ports.begin(), m.child_ports.end());
      views.at[v].push_back(std::move(m));
    }
  }
  views.streams_per_port.assign(n, {});
  for (int v = 0; v < n; ++v) {
    views.streams_per_port[v].assign(g.degree(v), 0);
    for (int p = 0; p < g.degree(v); ++p) {
      const int e = g.edge_of_slot(g.slot_begin(v) + p);
      views.streams_per_port[v][p] = static_cast<int>(views.edge_trees[e].size());
      views.max_edge_trees =
          std::max(views.max_edge_trees, views.streams_per_port[v][p]);
    }
    auto stream_of = [&](int port, int cluster) {
      const auto& list =
          views.edge_trees[g.edge_of_slot(g.slot_begin(v) + port)];
      return static_cast<int>(std::find(list.begin(), list.end(), cluster) -
                              list.begin());
    };
    for (auto& m : views.at[v]) {
      if (m.parent_port >= 0) m.parent_stream = stream_of(m.parent_port, m.cluster);
      for (int p : m.child_ports) m.child_streams.push_back(stream_of(p, m.cluster));
    }
  }
  return views;
}

ClusterCollection random_collection(const Graph& g, int count, int radius,
                                    uint64_t seed, double detached_leaders,
                                    double coverage) {
  const int n = g.size();
  std::mt19937_64 rng(seed);
  auto coin = [&](double p) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
  };
  count = std::min(count, n);
  std::vector<int> nodes(n);
  for (int v = 0; v < n; ++v) nodes[v] = v;
  for (int i = 0; i < count; ++i) {
    std::swap(nodes[i], nodes[i + uniform_below(rng, n - i)]);
  }
  std::vector<int> leaders(nodes.begin(), nodes.begin() + count);
  std::vector<char> detached(count, 0);
  std::vector<int> owner(n, -1);
  for (int c = 0; c < count; ++c) {
    detached[c] = coin(detached_leaders) ? 1 : 0;
    if (!detached[c]) owner[leaders[c]] = c;
  }
  // Candidate clusters per node: leaders within `radius`.
  std::vector<std::vector<int>> parent(count);
  std::vector<std::vector<int>> reach(n);
  for (int c = 0; c < count; ++c) {
    std::vector<int> dist(n, kUnreachable);
    parent[c].assign(n, -1);
    std::vector<int> queue{leaders[c]};
    dist[leaders[c]] = 0;
    for (size_t i = 0; i < queue.size(); ++i) {
      const int v = queue[i];
      if (dist[v] > 0) reach[v].push_back(c);
      if (dist[v] == radius) continue;
      for (int u : g.neighbors(v)) {
        if (dist[u] == kUnreachable) {
          dist[u] = dist[v] + 1;
          parent[c][u] = v;
          queue.push_back(u);
        }
      }
    }
  }
  std::vector<char> is_leader(n, 0);
  for (int c = 0; c < count; ++c) is_leader[leaders[c]] = 1;
  for (int v = 0; v < n; ++v) {
    if (is_leader[v] || reach[v].empty() || !coin(coverage)) continue;
    owner[v] = reach[v][uniform_below(rng, reach[v].size())];
  }
  ClusterCollection cc;
  cc.id_bits = g.id_bits();
  std::vector<int> slot(count, -1);
  for (int c = 0; c < count; ++c) {
    Cluster cl;
    cl.id = g.id(leaders[c]);
    cl.leader = leaders[c];
    std::set<int> in_tree{leaders[c]};
    for (int v = 0; v < n; ++v) {
      if (owner[v] != c) continue;
      cl.members.push_back(v);
      for (int u = v; !in_tree.count(u); u = parent[c][u]) {
        in_tree.insert(u);
        cl.tree.push_back({u, parent[c][u]});
      }
    }
    if (cl.members.empty()) continue;
    std::sort(cl.tree.begin(), cl.tree.end(), [](const auto& a, const auto& b) {
      return a.child < b.child;
    });
    cc.clusters.push_back(std::move(cl));
  }
  return cc;
}

nlohmann::json collection_to_json(const ClusterCollection& cc) {
  nlohmann::json j;
  j["id_bits"] = cc.id_bits;
  j["ids"] = nlohmann::json::array();
  j["clusters"] = nlohmann::json::array();
  j["leaders"] = nlohmann::json::array();
  j["steiner_edges"] = nlohmann::json::array();
  for (const auto& c : cc.clusters) {
    j["ids"].push_back(c.id.to_string());
    j["clusters"].push_back(c.members);
    j["leaders"].push_back(c.leader);
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : c.tree) edges.push_back({e.child, e.parent});
    j["steiner_edges"].push_back(edges);
  }
  return j;
}

ClusterCollection collection_from_json(const nlohmann::json& j) {
  try {
    ClusterCollection cc;
    const auto& members = j.at("clusters");
    const auto& leaders = j.at("leaders");
    const auto& edges = j.at("steiner_edges");
    if (members.size() != leaders.size() || members.size() != edges.size()) {
      throw CollectionError("clusters/leaders/steiner_edges length mismatch");
    }
    int widest = 1;
    for (size_t i = 0; i < members.size(); ++i) {
      Cluster c;
      c.members = members[i].get<std::vector<int>>();
      std::sort(c.members.begin(), c.members.end());
      c.leader = leaders[i].get<int>();
      for (const auto& e : edges[i]) {
        c.tree.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
      }
      if (j.contains("ids")) {
        c.id = Identifier::parse(j["ids"].at(i).get<std::string>());
      } else {
        c.id = Identifier(static_cast<uint64_t>(i));
      }
      widest = std::max(widest, c.id.bit_length());
      cc.clusters.push_back(std::move(c));
    }
    cc.id_bits = j.contains("id_bits") ? j["id_bits"].get<int>() : widest;
    return cc;
  } catch (const nlohmann::json::exception& e) {
    throw CollectionError(std::string("malformed collection JSON: ") + e.what());
  }
}

}  // namespace congestlab
