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

#include "congestlab/graph.h"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace congestlab {

Graph Graph::from_edges(int n, std::span<const Edge> edges,
                        std::vector<Identifier> ids, int id_bits) {
  if (n < 0) throw GraphError("negative node count");
  Graph g;
  g.n_ = n;
  std::vector<Edge> norm;
  norm.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw GraphError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       "): index out of range for n=" + std::to_string(n));
    }
    if (a == b) {
      throw GraphError("self-loop at node " + std::to_string(a));
    }
    norm.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(norm.begin(), norm.end());
  for (size_t i = 1; i < norm.size(); ++i) {
    if (norm[i] == norm[i - 1]) {
      throw GraphError("duplicate edge (" + std::to_string(norm[i].first) +
                       "," + std::to_string(norm[i].second) + ")");
    }
  }
  g.edges_ = norm;

  std::vector<int> deg(n, 0);
  for (const auto& [a, b] : norm) {
    ++deg[a];
    ++deg[b];
  }
  g.offsets_.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
  g.adj_.assign(g.offsets_[n], 0);
  std::vector<int> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [a, b] : norm) {
    g.adj_[fill[a]++] = b;
    g.adj_[fill[b]++] = a;
  }
  for (int v = 0; v < n; ++v) {
    std::sort(g.adj_.begin() + g.offsets_[v], g.adj_.begin() + g.offsets_[v + 1]);
    g.max_degree_ = std::max(g.max_degree_, deg[v]);
  }
  g.reverse_.assign(g.adj_.size(), -1);
  g.slot_edge_.assign(g.adj_.size(), -1);
  for (int v = 0; v < n; ++v) {
    for (int s = g.offsets_[v]; s < g.offsets_[v + 1]; ++s) {
      const int u = g.adj_[s];
      g.reverse_[s] = g.offsets_[u] + g.port_of(u, v);
    }
  }
  for (int e = 0; e < static_cast<int>(norm.size()); ++e) {
    const auto [a, b] = norm[e];
    const int s = g.offsets_[a] + g.port_of(a, b);
    g.slot_edge_[s] = e;
    g.slot_edge_[g.reverse_[s]] = e;
  }

  if (ids.empty()) {
    ids.reserve(n);
    for (int v = 0; v < n; ++v) ids.emplace_back(static_cast<uint64_t>(v));
  }
  if (static_cast<int>(ids.size()) != n) {
    throw GraphError("identifier count does not match node count");
  }
  {
    std::vector<Identifier> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] == sorted[i - 1]) {
        throw GraphError("duplicate identifier " + sorted[i].to_string());
      }
    }
  }
  int widest = 1;
  for (const auto& id : ids) widest = std::max(widest, id.bit_length());
  if (id_bits == 0) id_bits = std::max(2 * log2_ceil(n), widest);
  if (id_bits > kMaxIdBits) throw GraphError("id_bits above 256");
  if (widest > id_bits) {
    throw GraphError("identifier wider than id_bits=" + std::to_string(id_bits));
  }
  g.ids_ = std::move(ids);
  g.id_bits_ = id_bits;
  return g;
}

int Graph::port_of(int v, int u) const {
  auto nb = neighbors(v);
  auto it = std::lower_bound(nb.begin(), nb.end(), u);
  if (it == nb.end() || *it != u) return -1;
  return static_cast<int>(it - nb.begin());
}

int Graph::edge_index(int u, int v) const {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) return -1;
  const int p = port_of(u, v);
  return p < 0 ? -1 : slot_edge_[offsets_[u] + p];
}

Graph Graph::induced(std::span<const int> nodes) const {
  std::vector<int> local(n_, -1);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) local[nodes[i]] = i;
  std::vector<Edge> sub;
  std::vector<Identifier> ids;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    ids.push_back(ids_[nodes[i]]);
    for (int u : neighbors(nodes[i])) {
      if (local[u] > i) sub.emplace_back(i, local[u]);
    }
  }
  return from_edges(static_cast<int>(nodes.size()), sub, std::move(ids),
                    id_bits_);
}

Graph parse_graph(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (out.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) {
    throw GraphError("line " + std::to_string(line_no) + ": " + what);
  };
  if (!next_line(line)) throw GraphError("empty graph file");
  long long n = -1, m = -1;
  {
    std::istringstream ls(line);
    std::string extra;
    if (!(ls >> n >> m) || (ls >> extra) || n < 0 || m < 0) {
      fail("malformed header, expected 'n m'");
    }
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  std::set<Edge> seen;
  for (long long i = 0; i < m; ++i) {
    if (!next_line(line)) fail("expected " + std::to_string(m) + " edges");
    std::istringstream ls(line);
    long long u, v;
    std::string extra;
    if (!(ls >> u >> v) || (ls >> extra)) fail("malformed edge line '" + line + "'");
    if (u < 0 || u >= n || v < 0 || v >= n) {
      fail("index out of range in edge (" + std::to_string(u) + "," +
           std::to_string(v) + ")");
    }
    if (u == v) fail("self-loop at node " + std::to_string(u));
    Edge key{static_cast<int>(std::min(u, v)), static_cast<int>(std::max(u, v))};
    if (!seen.insert(key).second) {
      fail("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
    edges.push_back(key);
  }
  std::vector<Identifier> ids;
  for (int v = 0; v < n; ++v) ids.emplace_back(static_cast<uint64_t>(v));
  while (next_line(line)) {
    std::istringstream ls(line);
    std::string tag, value, extra;
    long long u;
    if (!(ls >> tag >> u >> value) || tag != "id" || (ls >> extra)) {
      fail("malformed id line '" + line + "'");
    }
    if (u < 0 || u >= n) fail("index out of range in id line");
    try {
      ids[u] = Identifier::parse(value);
    } catch (const std::exception& e) {
      fail(std::string("bad identifier: ") + e.what());
    }
  }
  return Graph::from_edges(static_cast<int>(n), edges, std::move(ids));
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file " + path);
  return parse_graph(in);
}

void write_graph(const Graph& g, std::ostream& out) {
  out << g.size() << ' ' << g.edge_count() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
  for (int v = 0; v < g.size(); ++v) {
    if (g.id(v) != Identifier(static_cast<uint64_t>(v))) {
      out << "id " << v << ' ' << g.id(v).to_string() << '\n';
    }
  }
}

void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write graph file " + path);
  write_graph(g, out);
}

std::vector<int> bounded_bfs(const Graph& g, std::span<const int> sources,
                             int limit) {
  std::vector<int> dist(g.size(), kUnreachable);
  std::vector<int> frontier;
  for (int s : sources) {
    if (s < 0 || s >= g.size()) throw GraphError("source out of range");
    if (dist[s] != 0) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  }
  std::vector<int> next;
  for (int d = 0; d < limit && !frontier.empty(); ++d) {
    next.clear();
    for (int v : frontier) {
      for (int u : g.neighbors(v)) {
        if (dist[u] == kUnreachable) {
          dist[u] = d + 1;
          next.push_back(u);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

DistanceOracle bfs_distances(const Graph& g, std::span<const int> sources) {
  if (sources.empty()) throw GraphError("bfs_distances: empty source set");
  return DistanceOracle{bounded_bfs(g, sources, kUnreachable)};
}

bool power_adjacent(const Graph& g, int u, int v, int k) {
  if (u == v) return false;
  int src[] = {u};
  return bounded_bfs(g, src, k)[v] <= k;
}

std::vector<std::vector<int>> components_under(
    const Graph& g, const std::function<bool(int)>& predicate, int k) {
  if (k < 1) throw GraphError("components_under: k must be >= 1");
  const int n = g.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> in(n, 0);
  for (int v = 0; v < n; ++v) in[v] = predicate(v) ? 1 : 0;

  // Bounded BFS from every predicate node with a reusable visit stamp.
  std::vector<int> stamp(n, -1);
  std::vector<int> frontier, next;
  for (int s = 0; s < n; ++s) {
    if (!in[s]) continue;
    frontier.assign(1, s);
    stamp[s] = s;
    for (int d = 0; d < k && !frontier.empty(); ++d) {
      next.clear();
      for (int v : frontier) {
        for (int u : g.neighbors(v)) {
          if (stamp[u] == s) continue;
          stamp[u] = s;
          next.push_back(u);
          if (in[u]) parent[find(u)] = find(s);
        }
      }
      frontier.swap(next);
    }
  }
  std::vector<std::vector<int>> comps;
  std::vector<int> slot(n, -1);
  for (int v = 0; v < n; ++v) {
    if (!in[v]) continue;
    const int r = find(v);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[slot[r]].push_back(v);
  }
  return comps;
}

}  // namespace congestlab
