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


// Pre-shattering: a distance-2 coloring of the dependency graph, then color
// classes sample their free variables and freeze around events that become
// too likely. What remains unset splits into small residual components.

#ifndef CONGESTLAB_PRESHATTER_H_
#define CONGESTLAB_PRESHATTER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "congestlab/engine.h"
#include "congestlab/lll.h"

namespace congestlab {

// The dependency graph H as a communication graph (same identifiers).
Graph dependency_graph(const LllInstance& inst);

struct Distance2Coloring {
  std::vector<int> color;
  int palette = 0;  // colors lie in [0, palette)
  int linial_steps = 0;
  int reduction_steps = 0;
  RoundMetrics metrics;
};

// Linial polynomial steps from the identifiers, then block-wise reduction to
// at most D+1 colors where D = Δ(h)^2 bounds the degree of h².
Distance2Coloring distance2_coloring(const Graph& h, const SimConfig& cfg);
bool is_distance2_coloring(const Graph& h, const std::vector<int>& color);

struct FreezeRecord {
  int processed;  // event whose sampling was undone
  int event;      // event that reached the threshold
  Rational q;     // its conditional probability at that moment
};

struct ResidualComponent {
  std::vector<int> events;     // original event ids, ascending
  std::vector<int> variables;  // original variable ids of the unset variables
  LllInstance instance;        // conditioned on the set values, local ids
};

struct PreshatterResult {
  Assignment assignment;
  Rational p;  // unconditional maximum; the threshold is sqrt(p)
  Distance2Coloring coloring;
  std::vector<FreezeRecord> freezes;
  std::vector<ResidualComponent> residual;
  int64_t class_rounds = 0;  // charged for processing the color classes
  int64_t rounds = 0;        // coloring rounds plus class_rounds
  Rational residual_p;       // max conditional probability over residual events
  int residual_d = 0;
  bool residual_ok = false;  // residual_p^2 < p and p (d + 1)^2 < 1
};

// Rounds charged per color class: sample, announce values, report
// conditional probabilities back, announce undo and freezes.
inline constexpr int kRoundsPerClass = 4;

// Samples use counter_draw(cfg.seed, event, k, range) for the k-th value
// drawn by an event.
PreshatterResult preshatter(const LllInstance& inst, const SimConfig& cfg,
                            int64_t budget = kProbabilityBudget);

// Exact per-event audit: frozen thresholds reached, every event with an unset
// variable stays below the threshold, every fully set event is avoided, and
// the residual components are exactly the components of unset events.
// Returns an empty string when everything holds.
std::string audit_preshatter(const LllInstance& inst, const PreshatterResult& r,
                             int64_t budget = kProbabilityBudget);

struct ShatteringReport {
  int bad = 0;                 // |B|, events with an unset variable
  int max_h_component = 0;     // largest component of H[B]
  int max_z_component = 0;     // largest component of Z[B]
  double log_delta_n = 0;
  double p2_bound = 0;         // log_Δ n · Δ^(2 c2)
  bool p1_ok = true;
  bool p2_ok = true;
};

// Z links events whose distance in H lies in [2 c2 + 1, 4 c2 + 2].
ShatteringReport shattering_diagnostics(const LllInstance& inst,
                                        const PreshatterResult& r, int c2 = 2);

}  // namespace congestlab

#endif  // CONGESTLAB_PRESHATTER_H_
