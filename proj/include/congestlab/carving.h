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


#ifndef CONGESTLAB_CARVING_H_
#define CONGESTLAB_CARVING_H_

#include <cstdint>
#include <vector>

#include "congestlab/cluster.h"
#include "congestlab/engine.h"
#include "json.hpp"

namespace congestlab {

// ceil(log_{4/3} n), 0 for n <= 1.
int log43_ceil(int64_t n);

struct CarveParamsE {
  int phases = 0;
  int64_t proposal_parameter = 0;
  int64_t steps = 0;
  int64_t beta_bound = 0;
  int64_t kappa_bound = 0;
  static CarveParamsE from(int64_t n, int64_t x, int k);
};

struct CarveParamsC {
  int levels = 0;
  int phases = 0;
  int64_t pay_per_kill = 0;
  int64_t steps = 0;
  int64_t total_tokens_bound = 0;
  int64_t beta_bound = 0;
  int64_t kappa_bound = 0;  // 4 * phases
  static CarveParamsC from(int64_t n, int64_t x, int64_t s_size);
};

struct PhaseStats {
  int phase = 0;  // 1-based
  int clusters = 0;
  int max_component = 0;     // clusters in the largest distance-k component
  bool component_bound_ok = true;  // max_component <= max(1, (3/4)^phase |S|)
  int64_t dead = 0;
  int steiner_radius = 0;    // max tree diameter
  int steiner_depth = 0;     // max leader-to-node distance in a tree
  int max_depth_growth = 0;  // per step, over all clusters
  int edge_congestion = 0;
  int64_t steps_run = 0;
  int64_t steps_skipped = 0;  // steps after a fixed point was reached
  int64_t rounds = 0;         // cumulative simulated rounds at phase end
  // Levels variant only.
  int64_t tokens_created = 0;
  int top_level_clusters = 0;
  int potential_violations = 0;
};

struct CarveResult {
  ClusterCollection clusters;
  std::vector<int> dead;  // sorted
  std::vector<PhaseStats> phases;
  RoundMetrics metrics;
  // Levels variant only.
  std::vector<int> level;  // per final cluster
  int top_level = 0;
  int64_t tokens_created = 0;
  // Per phase, per node: potential at phase start and at phase end; -1 for
  // nodes not in a cluster at that time.
  std::vector<std::vector<int64_t>> potential_start, potential_end;
};

// True iff comp <= max(1, (3/4)^phase * s), evaluated exactly.
bool component_bound_holds(int64_t comp, int phase, int64_t s);

// Distance-k carving on the node set S (duplicates ignored). `n_bound` is the
// n used for the parameters (0 means g.size()).
CarveResult carve_distance_k(const Graph& g, const std::vector<int>& s, int k,
                             int x, const SimConfig& cfg, int64_t n_bound = 0);

// Distance-1 carving with levels and tokens.
CarveResult carve_fast(const Graph& g, const std::vector<int>& s, int x,
                       const SimConfig& cfg, int64_t n_bound = 0);

nlohmann::json phase_stats_to_json(const PhaseStats& s);

}  // namespace congestlab

#endif  // CONGESTLAB_CARVING_H_
