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


#include "congestlab/derandomizer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "congestlab/generators.h"

namespace congestlab {
namespace {

std::vector<int> all_events(const LllInstance& inst) {
  std::vector<int> s(inst.size());
  for (int v = 0; v < inst.size(); ++v) s[v] = v;
  return s;
}

PartialFixing empty_fixing(const LllInstance& inst) {
  return PartialFixing{std::vector<std::vector<uint64_t>>(inst.size())};
}

int64_t positions(const LllInstance& inst, int u, int64_t it) {
  return static_cast<int64_t>(inst.owned[u].size()) * (1 + it);
}

LllInstance triangle() { return make_sinkless(complete_graph(3)); }

TEST(FailureExpectationTest, EmptyScopeIsZero) {
  const LllInstance inst = triangle();
  EXPECT_EQ(failure_expectation(inst, 2, empty_fixing(inst), {}), Rational(0));
}

TEST(FailureExpectationTest, FullyFixedCountsTheReplay) {
  const LllInstance inst = make_sinkless(random_regular(12, 3, 4));
  std::mt19937_64 rng(9);
  for (int64_t it : {0, 1, 3}) {
    PartialFixing phi = empty_fixing(inst);
    for (int u = 0; u < inst.size(); ++u) {
      for (int64_t i = 0; i < positions(inst, u, it); ++i) {
        phi.tape[u].push_back(rng() % tape_range(inst, u));
      }
    }
    const auto sim = simulate_cps(inst, it, [&](int v, int64_t i) { return phi.tape[v][i]; });
    EXPECT_EQ(failure_expectation(inst, it, phi, all_events(inst)),
              Rational(static_cast<long>(sim.violated.size())));
  }
}

TEST(FailureExpectationTest, ZeroIterationsIsSumOfProbabilities) {
  const LllInstance inst = make_sinkless(random_regular(10, 3, 2));
  EXPECT_EQ(failure_expectation(inst, 0, empty_fixing(inst), all_events(inst)),
            Rational(5, 4));
}

TEST(FailureExpectationTest, LazyMatchesBrute) {
  const LllInstance tri = triangle();
  for (int64_t it : {0, 1, 2}) {
    for (int v = 0; v < 3; ++v) {
      EXPECT_EQ(failure_expectation(tri, it, empty_fixing(tri), {v}),
                failure_expectation_brute(tri, it, empty_fixing(tri), {v}));
    }
  }
  int compared = 0;
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    const LllInstance comp = make_random_component(4, seed);
    PartialFixing phi = empty_fixing(comp);
    if (!comp.owned[0].empty()) phi.tape[0].push_back(0);
    for (int64_t it : {0, 1}) {
      Rational brute;
      try {
        brute = failure_expectation_brute(comp, it, phi, all_events(comp), 1 << 20);
      } catch (const BudgetExceeded&) {
        continue;
      }
      EXPECT_EQ(failure_expectation(comp, it, phi, all_events(comp)), brute) << seed;
      EXPECT_EQ(failure_expectation(comp, it, phi, {0}),
                failure_expectation_brute(comp, it, phi, {0}, 1 << 20));
      ++compared;
    }
  }
  EXPECT_GE(compared, 8);
}

// Locality: tapes beyond the influence radius do not move X_v.
TEST(FailureExpectationTest, FarTapesDoNotMatter) {
  const LllInstance inst = make_sinkless(path_graph(12));
  const int64_t it = 1;
  const int v = 0;
  PartialFixing a = empty_fixing(inst), b = empty_fixing(inst);
  for (int u = influence_radius(it) + 1; u < inst.size(); ++u) {
    for (int64_t i = 0; i < positions(inst, u, it); ++i) {
      a.tape[u].push_back(0);
      b.tape[u].push_back(1);
    }
  }
  EXPECT_EQ(failure_expectation(inst, it, a, {v}), failure_expectation(inst, it, b, {v}));
  EXPECT_EQ(failure_expectation(inst, it, a, {v}),
            failure_expectation_brute(inst, it, a, {v}));
}

TEST(FailureExpectationTest, ConditionalExpectationsAverage) {
  const LllInstance inst = make_sinkless(random_regular(8, 3, 5));
  const int64_t it = 1;
  PartialFixing phi = empty_fixing(inst);
  const Rational whole = failure_expectation(inst, it, phi, all_events(inst));
  const int u = 0;
  const uint64_t range = tape_range(inst, u);
  Rational avg = 0;
  for (uint64_t val = 0; val < range; ++val) {
    phi.tape[u] = {val};
    avg += failure_expectation(inst, it, phi, all_events(inst));
  }
  avg /= Rational(static_cast<long>(range));
  EXPECT_EQ(avg, whole);
}

TEST(FailureExpectationTest, MonteCarloAgrees) {
  const LllInstance inst = make_sinkless(random_regular(10, 3, 8));
  const int64_t it = 1;
  const double exact =
      failure_expectation(inst, it, empty_fixing(inst), all_events(inst)).get_d();
  const int trials = 20000;
  double sum = 0, sq = 0;
  for (int t = 0; t < trials; ++t) {
    const auto sim = simulate_cps(inst, it, [&](int v, int64_t i) {
      return counter_draw(t, v, i, tape_range(inst, v));
    });
    const double x = static_cast<double>(sim.violated.size());
    sum += x;
    sq += x * x;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(std::max(1e-12, sq / trials - mean * mean) / trials);
  EXPECT_NEAR(mean, exact, 4 * sd);
}

TEST(FailureExpectationTest, BudgetIsEnforced) {
  const LllInstance inst = make_sinkless(random_regular(16, 3, 1));
  EXPECT_THROW(failure_expectation(inst, 3, empty_fixing(inst), all_events(inst), 64),
               BudgetExceeded);
}

void expect_sound(const LllInstance& comp, const DerandResult& r) {
  EXPECT_LT(r.initial, Rational(1));
  EXPECT_TRUE(validate_assignment(comp, r.assignment).empty());
  Rational prev = r.initial;
  for (const AuditEntry& e : r.audit) {
    EXPECT_LE(e.after, e.before);
    EXPECT_LE(e.global, prev);
    EXPECT_LT(e.global, Rational(1));
    prev = e.global;
  }
  for (int u = 0; u < comp.size(); ++u) {
    EXPECT_EQ(static_cast<int64_t>(r.tapes[u].size()), positions(comp, u, r.iterations));
  }
}

TEST(DerandomizeComponentTest, RiggedFixtures) {
  for (const char* f : {"single", "double"}) {
    const LllInstance comp = make_rigged(f);
    const DerandResult r = derandomize_component(comp, DerandParams{}, SimConfig::local());
    expect_sound(comp, r);
  }
}

TEST(DerandomizeComponentTest, RandomComponents) {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const LllInstance comp = make_random_component(8, seed);
    const DerandResult r = derandomize_component(comp, DerandParams{}, SimConfig::congest(40));
    expect_sound(comp, r);
    EXPECT_EQ(r.k, 4 * (r.T + 1) + 1);
  }
}

TEST(DerandomizeComponentTest, ExplicitSmallT) {
  const LllInstance comp = make_sinkless(complete_graph(4));
  DerandParams p;
  p.T = 3;
  p.shrink_T = false;
  const DerandResult r = derandomize_component(comp, p, SimConfig::local());
  EXPECT_EQ(r.iterations, 1);
  expect_sound(comp, r);
}

TEST(DerandomizeComponentTest, SeedIndependent) {
  const LllInstance comp = make_random_component(10, 4);
  const DerandResult a = derandomize_component(comp, DerandParams{}, SimConfig::congest(40, 1));
  const DerandResult b = derandomize_component(comp, DerandParams{}, SimConfig::congest(40, 99));
  EXPECT_EQ(a.tapes, b.tapes);
  EXPECT_EQ(a.assignment.value, b.assignment.value);
}

TEST(DerandomizeComponentTest, ClusterOrderWithinClassIsIrrelevant) {
  const LllInstance comp = make_sinkless(random_regular(60, 9, 2));
  const DerandResult a = derandomize_component(comp, DerandParams{}, SimConfig::local());
  std::vector<std::vector<int>> order;
  const NetworkDecomposition nd = decompose_logn(comp.graph, a.k, SimConfig::local());
  for (const auto& cls : nd.classes) {
    std::vector<int> o(cls.clusters.size());
    for (size_t i = 0; i < o.size(); ++i) o[i] = static_cast<int>(o.size() - 1 - i);
    order.push_back(o);
  }
  const DerandResult b = derandomize_component(comp, DerandParams{}, SimConfig::local(), 0, &order);
  EXPECT_EQ(a.tapes, b.tapes);
}

TEST(PipelineTest, SinklessTenRegular) {
  const LllInstance inst = make_sinkless(random_regular(256, 10, 3));
  const PipelineResult r = solve_range_bounded_lll(inst, SimConfig::congest(40, 3));
  EXPECT_TRUE(r.violated.empty());
  for (int v : r.assignment.value) EXPECT_GE(v, 0);
  EXPECT_EQ(r.pre_rounds, r.pre.rounds);
}

TEST(PipelineTest, RefusesWhenResidualCriterionFails) {
  const LllInstance inst = make_sinkless(torus(5, 5));
  EXPECT_THROW(solve_range_bounded_lll(inst, SimConfig::congest(40)), CriterionFailure);
}

TEST(LambdaSolverTest, SeventeenRegularMeetsCriterion) {
  const LllInstance inst = make_sinkless(random_regular(64, 17, 1));
  const LambdaResult r = local_lambda_lll(inst, 3, SimConfig::local());
  EXPECT_TRUE(r.criteria.ped_lambda_ok);
  EXPECT_TRUE(r.violated.empty());
  Rational prev = r.initial;
  for (const Rational& s : r.after_cluster) {
    EXPECT_LE(s, prev);
    EXPECT_LT(s, Rational(1));
    prev = s;
  }
  EXPECT_LE(r.decomposition.classes.size(), 3u);
}

TEST(LambdaSolverTest, FourteenRegularNeedsRelaxedCriterion) {
  const LllInstance inst = make_sinkless(random_regular(64, 14, 2));
  EXPECT_THROW(local_lambda_lll(inst, 3, SimConfig::local()), CriterionFailure);
  LambdaOptions opts;
  opts.require_criterion = false;
  const LambdaResult r = local_lambda_lll(inst, 3, SimConfig::local(), opts);
  EXPECT_TRUE(r.violated.empty());
}

}  // namespace
}  // namespace congestlab
