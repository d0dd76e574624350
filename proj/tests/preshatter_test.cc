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


#include "congestlab/preshatter.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "congestlab/generators.h"

namespace congestlab {
namespace {

TEST(DistanceTwoColoringTest, ValidAndWithinFourDSquared) {
  for (uint64_t seed : {1, 2}) {
    const Graph g = random_regular(200, 6, seed);
    const Graph h = dependency_graph(make_sinkless(g));
    const Distance2Coloring c = distance2_coloring(h, SimConfig::congest(40, seed));
    EXPECT_TRUE(is_distance2_coloring(h, c.color));
    EXPECT_LE(c.palette, 4 * 6 * 6);
    for (int col : c.color) {
      EXPECT_GE(col, 0);
      EXPECT_LT(col, c.palette);
    }
  }
}

TEST(DistanceTwoColoringTest, RejectsNeighborsAtDistanceTwo) {
  const Graph p = path_graph(3);
  EXPECT_FALSE(is_distance2_coloring(p, {0, 1, 0}));
  EXPECT_TRUE(is_distance2_coloring(p, {0, 1, 2}));
}

TEST(PreshatterTest, ZeroProbabilityLeavesNothing) {
  const LllInstance inst = make_synthetic(torus(6, 6), Rational(0), 2, 1);
  const PreshatterResult r = preshatter(inst, SimConfig::congest(40, 3));
  EXPECT_TRUE(r.residual.empty());
  EXPECT_TRUE(r.freezes.empty());
  EXPECT_EQ(audit_preshatter(inst, r), "");
  EXPECT_TRUE(validate_assignment(inst, r.assignment).empty());
}

TEST(PreshatterTest, RiggedSingleEitherAvoidsOrFreezes) {
  const LllInstance inst = make_rigged("single");
  int frozen = 0;
  for (uint64_t seed = 0; seed < 16; ++seed) {
    const PreshatterResult r = preshatter(inst, SimConfig::local(seed));
    EXPECT_EQ(audit_preshatter(inst, r), "");
    if (r.residual.empty()) {
      EXPECT_TRUE(validate_assignment(inst, r.assignment).empty());
    } else {
      ++frozen;
      ASSERT_EQ(r.residual.size(), 1u);
      EXPECT_EQ(r.residual[0].events, std::vector<int>{0});
      ASSERT_EQ(r.freezes.size(), 1u);
      EXPECT_EQ(r.freezes[0].q, Rational(1));
    }
  }
  EXPECT_GT(frozen, 0);
  EXPECT_LT(frozen, 16);
}

TEST(PreshatterTest, SinklessTenRegularAudit) {
  const LllInstance inst = make_sinkless(random_regular(256, 10, 7));
  const PreshatterResult r = preshatter(inst, SimConfig::congest(40, 7));
  EXPECT_EQ(audit_preshatter(inst, r), "");
  EXPECT_TRUE(r.residual_ok);
  EXPECT_EQ(r.class_rounds, kRoundsPerClass * r.coloring.palette);
  for (const auto& comp : r.residual) {
    EXPECT_TRUE(std::is_sorted(comp.events.begin(), comp.events.end()));
    EXPECT_EQ(comp.instance.size(), static_cast<int>(comp.events.size()));
    for (int v : comp.variables) EXPECT_EQ(r.assignment.value[v], -1);
  }
  const ShatteringReport s = shattering_diagnostics(inst, r);
  int bad = 0, largest = 0;
  for (const auto& comp : r.residual) {
    bad += static_cast<int>(comp.events.size());
    largest = std::max(largest, static_cast<int>(comp.events.size()));
  }
  EXPECT_EQ(s.bad, bad);
  EXPECT_EQ(s.max_h_component, largest);
}

TEST(PreshatterTest, ResidualConditioningMatchesOriginal) {
  const LllInstance inst = make_sinkless(random_regular(128, 10, 11));
  const PreshatterResult r = preshatter(inst, SimConfig::congest(40, 11));
  for (const auto& comp : r.residual) {
    for (size_t i = 0; i < comp.events.size(); ++i) {
      EXPECT_EQ(event_probability(comp.instance, static_cast<int>(i)),
                event_probability(inst, comp.events[i], r.assignment));
    }
  }
}

}  // namespace
}  // namespace congestlab
