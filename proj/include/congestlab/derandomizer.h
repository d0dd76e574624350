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


// Conditional-expectation derandomization of the resampling algorithm on
// small components, the full range-bounded pipeline, and the few-colors
// direct solver for the LOCAL model.

#ifndef CONGESTLAB_DERANDOMIZER_H_
#define CONGESTLAB_DERANDOMIZER_H_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/cps.h"
#include "congestlab/decomposition.h"
#include "congestlab/lll.h"
#include "congestlab/preshatter.h"

namespace congestlab {

class DerandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int64_t kEnumerationBudget = int64_t{1} << 22;

struct DerandParams {
  int64_t T = -1;   // engine rounds of the program; negative: ceil(c_T log2 N)
  double c_T = 4;
  int r = 1;
  int64_t budget = kEnumerationBudget;
  int64_t global_n = 0;  // size of the whole network, for the bandwidth
  // Largest T whose enumeration fits the budget (down to 0) when the default
  // does not. Off: BudgetExceeded instead.
  bool shrink_T = true;

  int64_t default_T(int64_t n) const;
};

// Fixed tape prefixes; positions beyond a prefix are unfixed.
struct PartialFixing {
  std::vector<std::vector<uint64_t>> tape;
};

// Resampling iterations run for a round budget T (three rounds each).
inline int64_t iterations_for(int64_t T) { return T / 3; }

// Influence radius of tapes on X_v after `iterations` iterations: T + r hops.
inline int influence_radius(int64_t iterations, int r = 1) {
  return static_cast<int>(3 * iterations + r);
}

// E[sum over scope of X_v | phi], X_v = event v holds after `iterations`
// iterations. Unfixed positions of nodes within the influence radius of the
// scope are enumerated lazily (only positions that are read); unfixed
// positions elsewhere are read as 0.
Rational failure_expectation(const LllInstance& comp, int64_t iterations,
                             const PartialFixing& phi, const std::vector<int>& scope,
                             int64_t budget = kEnumerationBudget);

// Same quantity by full enumeration of every tape position that any branch
// can read, ignoring locality (for cross-checks on tiny inputs).
Rational failure_expectation_brute(const LllInstance& comp, int64_t iterations,
                                   const PartialFixing& phi,
                                   const std::vector<int>& scope,
                                   int64_t budget = kEnumerationBudget);

struct AuditEntry {
  int component = 0;
  int cls = 0;
  int cluster = 0;
  int node = 0;
  int64_t position = 0;
  uint64_t value = 0;
  Rational before, after;  // over the cluster's W
  Rational global;         // over the whole component, after this step
};

nlohmann::json audit_to_json(const AuditEntry& e);

struct DerandResult {
  std::vector<std::vector<uint64_t>> tapes;
  Assignment assignment;
  int64_t T = 0;           // round budget actually derandomized
  int64_t T_default = 0;
  int64_t iterations = 0;
  int k = 0;               // cluster distance requirement 4(T + r) + 1
  int classes = 0;
  Rational initial;        // E[sum X_v] before any fixing
  std::vector<AuditEntry> audit;
  int64_t rounds = 0;      // decomposition + gathers + disseminations + final run
  int64_t bandwidth = 0;
};

// `order` permutes the clusters of each class (for equivalence tests); empty
// means cluster index order.
DerandResult derandomize_component(const LllInstance& comp, const DerandParams& params,
                                   const SimConfig& cfg, int component_id = 0,
                                   const std::vector<std::vector<int>>* order = nullptr);

std::vector<DerandResult> deterministic_lll(const std::vector<ResidualComponent>& residual,
                                            const DerandParams& params, const SimConfig& cfg);

class CriterionFailure : public std::runtime_error {
 public:
  CriterionFailure(const std::string& what, const CriterionReport& r)
      : std::runtime_error(what), report(r) {}
  CriterionReport report;
};

struct PipelineResult {
  CriterionReport criteria;
  PreshatterResult pre;
  std::vector<DerandResult> post;
  Assignment assignment;
  std::vector<int> violated;
  int64_t pre_rounds = 0;
  int64_t post_rounds = 0;  // max over components (they run in parallel)
};

// Refuses when sqrt(p) (d + 1) >= 1; p (ed)^8 < 1 is reported, not enforced.
PipelineResult solve_range_bounded_lll(const LllInstance& inst, const SimConfig& cfg,
                                       const DerandParams& params = {});

struct LambdaOptions {
  // Require p (ed)^lambda < 1. Off: only the starting invariant
  // sum_E P(E) < 1 is required.
  bool require_criterion = true;
  int64_t budget = kProbabilityBudget;
};

struct LambdaResult {
  CriterionReport criteria;
  NetworkDecomposition decomposition;
  Assignment assignment;
  std::vector<int> violated;
  Rational initial;
  std::vector<Rational> after_cluster;  // sum_E P(E | phi) after each cluster
  bool parallel_safe = true;  // same-class clusters touch disjoint events
  int64_t rounds = 0;
};

LambdaResult local_lambda_lll(const LllInstance& inst, int lambda, const SimConfig& cfg,
                              const LambdaOptions& opts = {});

}  // namespace congestlab

#endif  // CONGESTLAB_DERANDOMIZER_H_
