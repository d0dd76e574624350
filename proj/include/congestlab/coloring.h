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


#ifndef CONGESTLAB_COLORING_H_
#define CONGESTLAB_COLORING_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/cluster.h"
#include "congestlab/engine.h"
#include "json.hpp"

namespace congestlab {

enum class Color : uint8_t { kRed = 0, kBlue = 1 };

// A cluster is heavy iff at least this many clusters selected it.
inline constexpr int kHeavyThreshold = 12;

class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every node of every cluster floods a token carrying its cluster identifier
// for k iterations; each cluster then picks one member that saw a foreign
// token (its leaf) and routes back along the remembered ports to the token's
// origin. A BFS tree is named by the identifier its tokens carry.
struct ConnectingStructure {
  int k = 1;
  std::vector<int> target;  // per cluster; -1 when distance-k isolated
  std::vector<int> leaf;    // per cluster; -1 when distance-k isolated
  // Per cluster: leaf first, token origin (a member of the target) last.
  std::vector<std::vector<int>> path;
  // Per edge: distinct BFS trees that carry a selected path over it.
  std::vector<int> edge_trees;
  // Per cluster: its Steiner tree extended by the path prefixes that lead to
  // it up to the first node already on the tree. Members are the leaves of
  // the clusters that selected it; leader and identifier are unchanged.
  ClusterCollection extended;
  RoundMetrics metrics;

  bool isolated(int c) const { return target[c] < 0; }
};

ConnectingStructure build_connecting_structure(const Graph& g,
                                               const ClusterCollection& cc,
                                               int k, const SimConfig& cfg);

// Checks the three structure properties against centralized oracles: roots
// and leaves are cluster members, a cluster selects exactly when another
// cluster lies within distance k, and no edge lies in more than four trees.
void validate_connecting_structure(const Graph& g, const ClusterCollection& cc,
                                   const ConnectingStructure& cs);

enum class ColoringStep : uint8_t {
  kIsolated,    // step 0
  kHeavyChild,  // step 3, including grandchildren placed in a heavy group
  kHeavy,       // step 4
  kLight,       // step 5
};

struct ColoringResult {
  std::vector<Color> color;
  std::vector<ColoringStep> step;
  std::vector<char> heavy;
  // Per cluster: the balanced group it was colored in, -1 for steps 0 and 4.
  std::vector<int> group;
  ConnectingStructure structure;
  RoundMetrics metrics;
};

ColoringResult color_red_blue(const Graph& g, const ClusterCollection& cc,
                              int k, const SimConfig& cfg);

struct BalanceComponent {
  std::vector<int> clusters;
  int blue = 0;
  bool ok = true;
};

struct BalanceReport {
  std::vector<BalanceComponent> components;  // only those with >= 2 clusters
  bool ok = true;
  std::string violation;  // first failing component, empty when ok
};

// Blue fraction of every distance-k component with at least two clusters
// must lie in [1/2, 3/4].
BalanceReport check_balance(const Graph& g, const ClusterCollection& cc, int k,
                            const std::vector<Color>& color);

nlohmann::json coloring_to_json(const ClusterCollection& cc,
                                const std::vector<Color>& color);
std::vector<Color> coloring_from_json(const ClusterCollection& cc,
                                      const nlohmann::json& j);

}  // namespace congestlab

#endif  // CONGESTLAB_COLORING_H_
