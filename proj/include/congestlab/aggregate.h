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

#ifndef CONGESTLAB_AGGREGATE_H_
#define CONGESTLAB_AGGREGATE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "congestlab/bits.h"
#include "congestlab/cluster.h"
#include "congestlab/engine.h"

namespace congestlab {

// Constant used in the round bounds below:
//   broadcast / aggregate:  rounds <= kBoundConstant * max(1, kappa/b) * (beta + kappa)
//   gather / disseminate:   rounds <= kBoundConstant * kappa * (beta + N*x/b)
inline constexpr int kBoundConstant = 8;

int64_t tree_round_bound(int beta, int kappa, int64_t b);
int64_t token_round_bound(int beta, int kappa, int64_t n_max, int64_t x,
                          int64_t b);

// Every programme below runs on the Steiner trees of one collection. Trees
// that share an edge are multiplexed over it by LinkLayer, one stream per
// tree, served round-robin in cluster-identifier order.

struct BroadcastResult {
  // Per node: (cluster index, payload) for every tree the node lies on.
  std::vector<std::vector<std::pair<int, BitString>>> at;
  RoundMetrics metrics;

  // The payload of the cluster that `v` is a member of (empty if none).
  BitString member_value(const ClusterCollection& cc, int v) const;
};

// Leader of cluster c sends payload[c] (exactly `width` bits) down its tree.
BroadcastResult tree_broadcast(const Graph& g, const ClusterCollection& cc,
                               const SimConfig& cfg,
                               const std::vector<BitString>& payload,
                               int width, const ClusterViews* views = nullptr);

enum class AggregateKind { kMin, kSumMod, kConvergecast };

struct AggregateResult {
  std::vector<uint64_t> value;                // per cluster, MIN / SUM_MOD
  std::vector<std::vector<uint64_t>> items;   // per cluster, CONVERGECAST
  RoundMetrics metrics;
};

// Input of tree node `v` for cluster `c`; nullopt means no contribution
// (for CONVERGECAST: not a special node). MIN of an empty set is 2^width - 1.
using TreeInput = std::function<std::optional<uint64_t>(int v, int c)>;

AggregateResult tree_aggregate_at(const Graph& g, const ClusterCollection& cc,
                                  const SimConfig& cfg, AggregateKind kind,
                                  const TreeInput& input, int width,
                                  int max_special = 0,
                                  const ClusterViews* views = nullptr);

// Member-input form: input[v] is node v's value for its own cluster. For
// CONVERGECAST, nodes with an input are the special nodes, and a cluster with
// more than `max_special` of them is rejected before simulation.
AggregateResult tree_aggregate(const Graph& g, const ClusterCollection& cc,
                               const SimConfig& cfg, AggregateKind kind,
                               const std::vector<std::optional<uint64_t>>& input,
                               int width, int max_special = 0);

// DFS (preorder) numbering of every cluster's members along its Steiner tree,
// computed by a subtree-count convergecast followed by an offset broadcast.
// With `weight`, member v occupies the index block [index, index + weight[v]).
struct TreeIndexing {
  std::vector<int> index;  // per node, -1 if unclustered
  std::vector<int> size;   // per cluster
  // Per node and membership (parallel to ClusterViews::at): member count of
  // the subtree at this node, and per child port the child's subtree count
  // and first index.
  struct Local {
    int subtree = 0;
    int offset = 0;
    std::vector<int> child_count;
    std::vector<int> child_offset;
  };
  std::vector<std::vector<Local>> local;
  RoundMetrics metrics;
};

TreeIndexing assign_cluster_indices(const Graph& g,
                                    const ClusterCollection& cc,
                                    const SimConfig& cfg,
                                    const ClusterViews* views = nullptr,
                                    const std::vector<int>* weight = nullptr);

struct GatherResult {
  // Per cluster, per in-cluster index: the member's info (x bits).
  std::vector<std::vector<BitString>> info;
  // Per cluster, per in-cluster index: the member node (for oracles).
  std::vector<std::vector<int>> member_at;
  TreeIndexing indexing;
  RoundMetrics metrics;  // includes the indexing run
};

// Every member sends up to x bits; leaders learn all of them.
GatherResult token_learning_gather(const Graph& g, const ClusterCollection& cc,
                                   const SimConfig& cfg,
                                   const std::vector<BitString>& info, int x,
                                   const ClusterViews* views = nullptr);

struct DisseminateResult {
  std::vector<BitString> received;  // per node (empty if unclustered)
  RoundMetrics metrics;
};

// payload[c][i] (<= x bits) goes from c's leader to the member with
// in-cluster index i. Reuses `indexing` when supplied.
DisseminateResult token_learning_disseminate(
    const Graph& g, const ClusterCollection& cc, const SimConfig& cfg,
    const std::vector<std::vector<BitString>>& payload, int x,
    const TreeIndexing* indexing = nullptr,
    const ClusterViews* views = nullptr);

}  // namespace congestlab

#endif  // CONGESTLAB_AGGREGATE_H_
