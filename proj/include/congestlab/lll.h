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


#ifndef CONGESTLAB_LLL_H_
#define CONGESTLAB_LLL_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/graph.h"
#include "congestlab/rational.h"
#include "json.hpp"

namespace congestlab {

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double required, int64_t budget);
  double required;  // enumeration size that was needed (may be huge)
  int64_t budget;
};

class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kUnset = -1;
inline constexpr int64_t kProbabilityBudget = int64_t{1} << 20;

struct Variable {
  int owner = 0;
  int range = 2;
};

enum class PredicateKind {
  kTable,     // truth table over the mixed-radix encoding of vbl
  kSinkless,  // holds iff every variable takes its `toward` value
};

struct Event {
  std::vector<int> vbl;  // sorted variable ids
  PredicateKind kind = PredicateKind::kTable;
  // kTable: entry i is 1 iff the event holds under assignment index i, where
  // index = sum_j value(vbl[j]) * prod_{l<j} range(vbl[l]).
  std::vector<uint8_t> table;
  // kSinkless: per vbl position, the value that orients that edge inward.
  std::vector<int> toward;
  // Unconditional probability, used when no variable of the event is set.
  std::optional<Rational> prob_override;
};

// Event v lives at node v of `graph`. Every variable is owned by a node whose
// event uses it or by a neighbor of each event using it, and events sharing a
// variable are adjacent in `graph`.
struct LllInstance {
  Graph graph;
  std::vector<Variable> variables;
  std::vector<Event> events;

  // Derived by finalize().
  std::vector<std::vector<int>> var_events;  // events using each variable
  std::vector<std::vector<int>> dependency;  // sorted dependency neighbors
  std::vector<std::vector<int>> owned;       // sorted variables per node
  int d = 0;                                 // max dependency degree

  // Validates the structure and computes the derived fields.
  void finalize();

  int size() const { return static_cast<int>(events.size()); }
  bool range_bounded() const;
  // Evaluates the predicate of event e on values given in vbl order.
  bool holds_on(int e, const std::vector<int>& values) const;
};

struct Assignment {
  std::vector<int> value;     // per variable, kUnset if unset
  std::vector<char> frozen;   // per variable
  static Assignment unset(const LllInstance& inst);
  bool total() const;
};

// Exact P(event e holds) with unset variables drawn uniformly.
Rational event_probability(const LllInstance& inst, int e, const Assignment& a,
                           int64_t budget = kProbabilityBudget);
// Same with every variable unset.
Rational event_probability(const LllInstance& inst, int e,
                           int64_t budget = kProbabilityBudget);

struct CriterionReport {
  Rational p;  // max event probability
  int d = 0;
  int lambda = 0;
  double epd = 0, epd2 = 0, ped8 = 0, ped_lambda = 0;
  bool epd_ok = false, epd2_ok = false, ped8_ok = false, ped_lambda_ok = false;
  // sqrt(p) * (d + 1) < 1, decided as p * (d + 1)^2 < 1.
  bool residual_ok = false;
  bool undecided = false;  // some e-bracket was inconclusive (counted as fail)
};

CriterionReport check_criteria(const LllInstance& inst, int lambda = 3,
                               int64_t budget = kProbabilityBudget);

// Events whose predicates hold. Throws std::invalid_argument when a variable
// of some event is unset.
std::vector<int> validate_assignment(const LllInstance& inst,
                                     const Assignment& a);

// One binary variable per edge, owned by the lower-index endpoint; value 1
// orients the edge from the lower to the higher index. The event at v holds
// iff every incident edge points at v.
LllInstance make_sinkless(const Graph& g);

// Each node owns `vars_per_node` variables of range `range`. The event at v
// reads its own variables plus, when `share` is set, the first variable of
// every neighbor. The event holds on the lexicographically largest
// p_target * |table| assignments (p_target * |table| must be an integer).
LllInstance make_synthetic(const Graph& g, const Rational& p_target, int range,
                           int vars_per_node, bool share = true);

// Fixtures: "single" (one event, one binary variable, probability 1/2) and
// "double" (two adjacent events over two variables of range 4, each with
// probability 1/4, jointly avoidable).
LllInstance make_rigged(const std::string& fixture);

// Random connected component of `nodes` events with random truth tables of
// probability at most 1 / (2 (d + 1)); deterministic in `seed`. With
// `sum_below_one`, each probability is also at most 1 / (2 nodes).
LllInstance make_random_component(int nodes, uint64_t seed, bool sum_below_one = false);

nlohmann::json instance_to_json(const LllInstance& inst);
LllInstance instance_from_json(const nlohmann::json& j);
nlohmann::json assignment_to_json(const Assignment& a);
Assignment assignment_from_json(const nlohmann::json& j);

}  // namespace congestlab

#endif  // CONGESTLAB_LLL_H_
