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


#include "congestlab/cps.h"

#include <gtest/gtest.h>

#include "congestlab/generators.h"

namespace congestlab {
namespace {

TapeFn seeded(const LllInstance& inst, uint64_t seed) {
  return [&inst, seed](int v, int64_t i) {
    return counter_draw(seed, v, i, tape_range(inst, v));
  };
}

// Two adjacent events that both hold iff the shared bit is 0.
LllInstance twin_events() {
  LllInstance inst;
  inst.graph = Graph::from_edges(2, std::vector<Edge>{{0, 1}});
  inst.variables = {{0, 2}};
  inst.events.resize(2);
  for (auto& ev : inst.events) {
    ev.vbl = {0};
    ev.table = {1, 0};
  }
  inst.finalize();
  return inst;
}

TEST(CpsTest, AlreadyAvoidedNeedsNoIterations) {
  const LllInstance inst = make_synthetic(torus(4, 4), Rational(0), 2, 1, true);
  const CpsResult r = cps_solve(inst, SimConfig::congest(16, 3));
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.trace.empty());
}

TEST(CpsTest, OnlyLocalMinimumResamples) {
  const LllInstance inst = twin_events();
  const std::vector<std::vector<uint64_t>> tapes = {{0, 1}, {}};
  CpsOptions opts;
  opts.iteration_cap = 5;
  const CpsResult r = cps_solve_with_tape(inst, SimConfig::congest(8), opts, tapes);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].violated, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.trace[0].resampled, (std::vector<int>{0}));
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.assignment.value[0], 1);

  opts.priority = {1, 0};
  const CpsResult s = cps_solve_with_tape(inst, SimConfig::congest(8), opts, tapes);
  EXPECT_EQ(s.trace[0].resampled, (std::vector<int>{1}));
}

TEST(CpsTest, CapExhaustionReportsViolated) {
  const LllInstance inst = twin_events();
  const std::vector<std::vector<uint64_t>> tapes = {{0, 0, 0}, {}};
  CpsOptions opts;
  opts.iteration_cap = 2;
  const CpsResult r = cps_solve_with_tape(inst, SimConfig::congest(8), opts, tapes);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_EQ(r.violated, (std::vector<int>{0, 1}));
}

TEST(CpsTest, SinklessSixRegular) {
  const Graph g = random_regular(256, 6, 11);
  const LllInstance inst = make_sinkless(g);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const CpsResult r = cps_solve(inst, SimConfig::congest(4 * 8, seed));
    EXPECT_TRUE(r.success) << seed;
    EXPECT_TRUE(validate_assignment(inst, r.assignment).empty());
    EXPECT_LE(r.iterations, 80);
    EXPECT_TRUE(trace_consistent(inst, r));
    const CpsSimulation sim = simulate_cps(inst, r.iterations, seeded(inst, seed));
    EXPECT_EQ(sim.values, r.assignment.value);
    EXPECT_EQ(sim.iterations, r.iterations);
    EXPECT_TRUE(sim.violated.empty());
  }
}

TEST(CpsTest, EngineMatchesSimulationUnderSplitting) {
  // Every frame carries a length prefix, so a one-bit budget splits all of
  // them.
  const LllInstance inst =
      make_synthetic(random_regular(30, 3, 2), Rational(1, 16), 2, 2, true);
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    CpsOptions opts;
    opts.iteration_cap = 6;
    const CpsResult wide = cps_solve(inst, SimConfig::local(seed), opts);
    const CpsResult narrow = cps_solve(inst, SimConfig::congest(1, seed), opts);
    EXPECT_EQ(wide.assignment.value, narrow.assignment.value);
    EXPECT_EQ(wide.iterations, narrow.iterations);
    EXPECT_GT(narrow.metrics.rounds, wide.metrics.rounds);
    const CpsSimulation sim = simulate_cps(inst, opts.iteration_cap, seeded(inst, seed));
    EXPECT_EQ(sim.values, wide.assignment.value);
    EXPECT_EQ(sim.violated, wide.violated);
  }
}

TEST(CpsTest, CongestNeedsRangeBounded) {
  const LllInstance inst = make_synthetic(path_graph(1), Rational(1, 3), 3, 1, false);
  EXPECT_THROW(cps_solve(inst, SimConfig::congest(16)), InstanceError);
  EXPECT_NO_THROW(cps_solve(inst, SimConfig::local(1)));
}

TEST(CpsTest, RandomComponentsAgreeWithSimulation) {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const LllInstance inst = make_random_component(14, seed);
    CpsOptions opts;
    opts.iteration_cap = 4;
    const CpsResult r = cps_solve(inst, SimConfig::local(seed), opts);
    const CpsSimulation sim = simulate_cps(inst, 4, seeded(inst, seed));
    EXPECT_EQ(sim.values, r.assignment.value);
    EXPECT_EQ(sim.draws, r.draws);
    EXPECT_TRUE(trace_consistent(inst, r));
  }
}

}  // namespace
}  // namespace congestlab
