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


// Parallel resampling: every violated event that is a local priority minimum
// among its violated dependency neighbors resamples its variables.

#ifndef CONGESTLAB_CPS_H_
#define CONGESTLAB_CPS_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "congestlab/engine.h"
#include "congestlab/lll.h"

namespace congestlab {

// Range of every draw made by node v: the lcm of the ranges of the variables
// it owns (1 if none). A draw r gives variable x the value r mod range(x).
int64_t tape_range(const LllInstance& inst, int v);

struct CpsOptions {
  int64_t iteration_cap = -1;  // negative: 10 * ceil(log2 n) + 10
  // Acyclic orientation of H: lower priority wins. Empty: node identifiers.
  std::vector<int64_t> priority;
};

struct CpsIteration {
  std::vector<int> violated;   // F_t
  std::vector<int> resampled;  // I_t
};

struct CpsResult {
  Assignment assignment;
  bool success = false;
  int64_t iterations = 0;  // first t with F_t empty, else the cap
  std::vector<int> violated;
  std::vector<CpsIteration> trace;  // up to `iterations`
  std::vector<int64_t> draws;
  RoundMetrics metrics;
};

// Runs the engine program. In CONGEST mode the instance must be range
// bounded; values travel in length-prefixed frames and are split across
// rounds when they exceed the bandwidth.
CpsResult cps_solve(const LllInstance& inst, const SimConfig& cfg,
                    const CpsOptions& opts = {});
CpsResult cps_solve_with_tape(const LllInstance& inst, const SimConfig& cfg,
                              const CpsOptions& opts,
                              const std::vector<std::vector<uint64_t>>& tapes);

// Centralized replay with identical semantics. `draw(v, index)` returns the
// index-th tape value of node v in [0, tape_range(v)).
struct CpsSimulation {
  std::vector<int> values;
  std::vector<int> violated;  // after the last iteration run
  int64_t iterations = 0;     // iterations with a nonempty F_t
  std::vector<int64_t> draws;
};
using TapeFn = std::function<uint64_t(int node, int64_t index)>;
CpsSimulation simulate_cps(const LllInstance& inst, int64_t iterations,
                           const TapeFn& draw,
                           const std::vector<int64_t>& priority = {});

// Checks every traced I_t against the local-minimum rule applied to F_t.
bool trace_consistent(const LllInstance& inst, const CpsResult& r,
                      const std::vector<int64_t>& priority = {});

}  // namespace congestlab

#endif  // CONGESTLAB_CPS_H_
