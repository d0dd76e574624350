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

#ifndef CONGESTLAB_CLUSTER_H_
#define CONGESTLAB_CLUSTER_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/graph.h"
#include "congestlab/identifier.h"
#include "json.hpp"

namespace congestlab {

struct SteinerEdge {
  int child;
  int parent;
  friend bool operator==(const SteinerEdge&, const SteinerEdge&) = default;
};

// A cluster: member nodes plus a Steiner tree whose edges point toward the
// leader. Non-members may appear in the tree as relay nodes, and the leader
// itself need not be a member.
struct Cluster {
  Identifier id;
  int leader = -1;
  std::vector<int> members;  // sorted
  std::vector<SteinerEdge> tree;
};

struct ClusterCollection {
  std::vector<Cluster> clusters;
  int id_bits = 1;

  int64_t clustered_nodes() const;
  // Cluster index per node, -1 for unclustered nodes.
  std::vector<int> owner(int n) const;
  // One singleton cluster per node in `nodes`, identified by the node's id.
  static ClusterCollection singletons(const Graph& g,
                                      const std::vector<int>& nodes);
};

class CollectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CollectionStats {
  int steiner_radius = 0;       // beta: max Steiner tree diameter
  int edge_congestion = 0;      // kappa: max trees sharing one edge
  int node_congestion = 0;      // max trees sharing one node
  int min_cluster_distance = kUnreachable;  // over distinct cluster pairs
  int max_cluster_size = 0;
};

// Checks disjointness, terminal coverage, tree shape and orientation, edge
// existence and identifier width. Throws CollectionError naming the offender.
CollectionStats validate_collection(const Graph& g,
                                    const ClusterCollection& cc);

// Diameter, in edges, of one cluster's Steiner tree (0 for a bare leader).
int steiner_diameter(const Cluster& c);

// Largest distance from the leader within the cluster's Steiner tree.
int steiner_depth(const Cluster& c);

// Minimum hop distance between members of distinct clusters.
int min_cluster_distance(const Graph& g, const ClusterCollection& cc);

// Distance-k connected components of clusters: two clusters are adjacent when
// some of their members are within k hops. Cluster indices, each component
// sorted, components ordered by smallest index.
std::vector<std::vector<int>> cluster_components(const Graph& g,
                                                 const ClusterCollection& cc,
                                                 int k);

// What each node knows locally about the trees passing through it.
struct TreeMembership {
  int cluster = -1;
  bool member = false;
  int parent_port = -1;  // -1 at the leader
  int parent_stream = -1;
  std::vector<int> child_ports;    // sorted by port
  std::vector<int> child_streams;  // parallel to child_ports
};

struct ClusterViews {
  // Per node, memberships sorted by cluster identifier.
  std::vector<std::vector<TreeMembership>> at;
  // Per undirected edge, clusters whose tree uses it, sorted by identifier.
  std::vector<std::vector<int>> edge_trees;
  // Per node and port: number of trees on that edge.
  std::vector<std::vector<int>> streams_per_port;
  int max_edge_trees = 0;
};

ClusterViews build_views(const Graph& g, const ClusterCollection& cc);

// Random collection for tests and benchmarks: `count` leaders, each member
// joins a random leader within `radius` hops, trees are unions of shortest
// paths in G (so trees of different clusters may overlap). With probability
// `detached_leaders` a leader is not itself a member.
ClusterCollection random_collection(const Graph& g, int count, int radius,
                                    uint64_t seed,
                                    double detached_leaders = 0.0,
                                    double coverage = 1.0);

nlohmann::json collection_to_json(const ClusterCollection& cc);
ClusterCollection collection_from_json(const nlohmann::json& j);

}  // namespace congestlab

#endif  // CONGESTLAB_CLUSTER_H_
