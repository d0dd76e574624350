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

#ifndef CONGESTLAB_GRAPH_H_
#define CONGESTLAB_GRAPH_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "congestlab/identifier.h"

namespace congestlab {

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Edge = std::pair<int, int>;

// Static undirected simple graph in CSR form. Neighbor lists are sorted by
// node index, so every iteration order derived from a Graph is deterministic.
//
// A "slot" is a directed edge u->v, addressed as offset(u) + port where port
// is the position of v in u's neighbor list. Engines keep per-slot buffers.
class Graph {
 public:
  Graph() = default;

  // Validates the edge list (range, self-loops, duplicates). `ids` defaults to
  // the node indices; `id_bits` defaults to max(2*ceil(log2 n), widest id).
  static Graph from_edges(int n, std::span<const Edge> edges,
                          std::vector<Identifier> ids = {}, int id_bits = 0);

  int size() const { return n_; }
  int64_t edge_count() const { return static_cast<int64_t>(edges_.size()); }
  int max_degree() const { return max_degree_; }
  int degree(int v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const int> neighbors(int v) const {
    return {adj_.data() + offsets_[v], static_cast<size_t>(degree(v))};
  }

  const Identifier& id(int v) const { return ids_[v]; }
  const std::vector<Identifier>& ids() const { return ids_; }
  int id_bits() const { return id_bits_; }

  int64_t slot_count() const { return static_cast<int64_t>(adj_.size()); }
  int slot_begin(int v) const { return offsets_[v]; }
  int slot_target(int slot) const { return adj_[slot]; }
  int reverse_slot(int slot) const { return reverse_[slot]; }
  int edge_of_slot(int slot) const { return slot_edge_[slot]; }
  // Port of u in v's neighbor list, or -1 when not adjacent.
  int port_of(int v, int u) const;
  // Undirected edge index of {u, v}, or -1.
  int edge_index(int u, int v) const;
  const Edge& edge(int e) const { return edges_[e]; }  // first < second
  const std::vector<Edge>& edges() const { return edges_; }

  // Induced subgraph on `nodes` (in the given order); identifiers and id_bits
  // are carried over so ID-dependent tie-breaks are preserved.
  Graph induced(std::span<const int> nodes) const;

 private:
  int n_ = 0;
  int max_degree_ = 0;
  int id_bits_ = 1;
  std::vector<int> offsets_{0};
  std::vector<int> adj_;
  std::vector<int> reverse_;
  std::vector<int> slot_edge_;
  std::vector<Edge> edges_;
  std::vector<Identifier> ids_;
};

// Edge-list text format: "n m", then m lines "u v", then optional lines
// "id u value" (value decimal or 0x-hex).
Graph parse_graph(std::istream& in);
Graph load_graph(const std::string& path);
// Canonical form: edges as (min,max) sorted; id lines only for nodes whose
// identifier differs from their index.
void write_graph(const Graph& g, std::ostream& out);
void save_graph(const Graph& g, const std::string& path);

struct DistanceOracle {
  std::vector<int> dist;  // kUnreachable when no source is reachable
  bool reachable(int v) const { return dist[v] != kUnreachable; }
};

DistanceOracle bfs_distances(const Graph& g, std::span<const int> sources);

// Hop distances from `sources`, not exploring beyond `limit` hops.
std::vector<int> bounded_bfs(const Graph& g, std::span<const int> sources,
                             int limit);

// True iff 0 < dist_G(u, v) <= k.
bool power_adjacent(const Graph& g, int u, int v, int k);

// Maximal sets of predicate nodes connected by chains of links of hop length
// <= k in G (paths may pass through any node). Sorted by smallest member.
std::vector<std::vector<int>> components_under(
    const Graph& g, const std::function<bool(int)>& predicate, int k);

}  // namespace congestlab

#endif  // CONGESTLAB_GRAPH_H_
