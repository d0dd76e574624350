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


#include "congestlab/coloring.h"

#include <gtest/gtest.h>

#include <map>

#include "congestlab/generators.h"

namespace congestlab {
namespace {

Graph star_graph(int leaves) {
  std::vector<Edge> edges;
  for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, edges);
}

int blue_count(const std::vector<Color>& color) {
  int b = 0;
  for (Color c : color) b += c == Color::kBlue ? 1 : 0;
  return b;
}

// Group invariants: each balanced group has at least two clusters and at
// most one more blue than red.
void expect_groups_balanced(const ColoringResult& r) {
  std::map<int, std::pair<int, int>> groups;  // group -> (size, blue)
  for (size_t c = 0; c < r.color.size(); ++c) {
    if (r.group[c] < 0) continue;
    auto& [size, blue] = groups[r.group[c]];
    ++size;
    blue += r.color[c] == Color::kBlue ? 1 : 0;
  }
  for (const auto& [gid, sb] : groups) {
    const auto [size, blue] = sb;
    EXPECT_GE(size, 2) << "group " << gid;
    EXPECT_GE(2 * blue, size) << "group " << gid;
    EXPECT_LE(2 * blue, size + 1) << "group " << gid;
  }
}

TEST(ConnectingStructureTest, PathThroughMiddleNode) {
  Graph g = path_graph(3);
  auto cc = ClusterCollection::singletons(g, {0, 2});
  auto cs = build_connecting_structure(g, cc, 2, SimConfig::congest(16));
  validate_connecting_structure(g, cc, cs);
  EXPECT_EQ(cs.target[0], 1);
  EXPECT_EQ(cs.target[1], 0);
  EXPECT_EQ(cs.path[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(cs.path[1], (std::vector<int>{2, 1, 0}));
  for (int e : cs.edge_trees) EXPECT_LE(e, 2);
}

TEST(ConnectingStructureTest, SingleClusterIsIsolated) {
  Graph g = path_graph(5);
  auto cc = random_collection(g, 1, 4, 3);
  for (int k : {1, 3, 6}) {
    auto cs = build_connecting_structure(g, cc, k, SimConfig::congest(16));
    EXPECT_TRUE(cs.isolated(0));
    validate_connecting_structure(g, cc, cs);
  }
}

TEST(ConnectingStructureTest, TooFarClustersStayIsolated) {
  Graph g = path_graph(5);
  auto cc = ClusterCollection::singletons(g, {0, 4});
  auto cs = build_connecting_structure(g, cc, 3, SimConfig::congest(16));
  EXPECT_TRUE(cs.isolated(0));
  EXPECT_TRUE(cs.isolated(1));
  cs = build_connecting_structure(g, cc, 4, SimConfig::congest(16));
  EXPECT_FALSE(cs.isolated(0));
  validate_connecting_structure(g, cc, cs);
}

TEST(ConnectingStructureTest, RandomSingletonInstancesRespectEdgeBound) {
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 3;
    Graph g = random_regular(40 + 2 * trial, 3 + trial % 2,
                             static_cast<uint64_t>(trial));
    std::vector<int> nodes;
    for (int v = 0; v < g.size(); ++v) {
      if ((v * 7 + trial) % 3 != 0) nodes.push_back(v);
    }
    auto cc = ClusterCollection::singletons(g, nodes);
    auto cs = build_connecting_structure(g, cc, k, SimConfig::congest(32));
    validate_connecting_structure(g, cc, cs);
    for (int e : cs.edge_trees) ASSERT_LE(e, 4);
  }
}

TEST(ConnectingStructureTest, NarrowBandwidthSpreadsIterations) {
  Graph g = random_regular(30, 4, 9);
  auto cc = random_collection(g, 8, 2, 4);
  auto wide = build_connecting_structure(g, cc, 2, SimConfig::local());
  auto narrow = build_connecting_structure(g, cc, 2, SimConfig::congest(g.id_bits()));
  validate_connecting_structure(g, cc, narrow);
  EXPECT_EQ(wide.target, narrow.target);
  EXPECT_EQ(wide.path, narrow.path);
}

TEST(ColoringTest, IsolatedClusterIsRed) {
  Graph g = path_graph(4);
  auto cc = random_collection(g, 1, 3, 1);
  auto r = color_red_blue(g, cc, 2, SimConfig::congest(16));
  ASSERT_EQ(r.color.size(), 1u);
  EXPECT_EQ(r.color[0], Color::kRed);
  EXPECT_EQ(r.step[0], ColoringStep::kIsolated);
}

TEST(ColoringTest, MutualProposersSplitEvenly) {
  Graph g = path_graph(2);
  auto cc = ClusterCollection::singletons(g, {0, 1});
  auto r = color_red_blue(g, cc, 1, SimConfig::congest(16));
  EXPECT_EQ(r.structure.target[0], 1);
  EXPECT_EQ(r.structure.target[1], 0);
  EXPECT_EQ(blue_count(r.color), 1);
  EXPECT_EQ(r.step[0], ColoringStep::kLight);
  EXPECT_EQ(r.group[0], r.group[1]);
}

TEST(ColoringTest, ThirteenChildrenOfAHeavyCluster) {
  Graph g = star_graph(13);
  std::vector<int> all(14);
  for (int v = 0; v < 14; ++v) all[v] = v;
  auto cc = ClusterCollection::singletons(g, all);
  auto r = color_red_blue(g, cc, 1, SimConfig::congest(16));
  EXPECT_TRUE(r.heavy[0]);
  EXPECT_EQ(r.color[0], Color::kBlue);
  EXPECT_EQ(r.step[0], ColoringStep::kHeavy);
  int children_blue = 0;
  for (int c = 1; c < 14; ++c) {
    EXPECT_EQ(r.step[c], ColoringStep::kHeavyChild);
    children_blue += r.color[c] == Color::kBlue ? 1 : 0;
  }
  EXPECT_EQ(children_blue, 7);
  EXPECT_EQ(blue_count(r.color), 8);
  EXPECT_TRUE(check_balance(g, cc, 1, r.color).ok);
}

TEST(ColoringTest, ElevenChildrenStayLight) {
  Graph g = star_graph(11);
  std::vector<int> all(12);
  for (int v = 0; v < 12; ++v) all[v] = v;
  auto cc = ClusterCollection::singletons(g, all);
  auto r = color_red_blue(g, cc, 1, SimConfig::congest(16));
  EXPECT_FALSE(r.heavy[0]);
  for (int c = 0; c < 12; ++c) EXPECT_EQ(r.step[c], ColoringStep::kLight);
  expect_groups_balanced(r);
  EXPECT_TRUE(check_balance(g, cc, 1, r.color).ok);
}

TEST(ColoringTest, LonelyGrandchildJoinsHeavyGroup) {
  // Node 0 is the hub with 12 leaves 1..12; node 13 hangs off leaf 12.
  std::vector<Edge> edges;
  for (int i = 1; i <= 12; ++i) edges.emplace_back(0, i);
  edges.emplace_back(12, 13);
  Graph g = Graph::from_edges(14, edges);
  std::vector<int> all(14);
  for (int v = 0; v < 14; ++v) all[v] = v;
  auto cc = ClusterCollection::singletons(g, all);
  auto r = color_red_blue(g, cc, 1, SimConfig::congest(16));
  ASSERT_TRUE(r.heavy[0]);
  EXPECT_EQ(r.structure.target[12], 0);
  EXPECT_EQ(r.structure.target[13], 12);
  EXPECT_EQ(r.step[13], ColoringStep::kHeavyChild);
  EXPECT_EQ(r.group[13], 0);
  expect_groups_balanced(r);
  // 12 children plus one grandchild: 7 blue, and the hub is blue.
  EXPECT_EQ(blue_count(r.color), 8);
  EXPECT_TRUE(check_balance(g, cc, 1, r.color).ok);
}

TEST(ColoringTest, RandomCollectionsAreBalancedAndDeterministic) {
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 3;
    const int n = 30 + (trial * 37) % 200;
    Graph g = trial % 2 == 0 ? random_regular(n - n % 2, 3 + trial % 3, trial)
                             : bounded_er(n, 3.0 / n, 6, trial);
    const int count = std::max(1, g.size() / (2 + trial % 5));
    auto cc = random_collection(g, count, 1 + trial % 3, trial + 1000);
    SimConfig cfg = SimConfig::congest(32);
    auto r = color_red_blue(g, cc, k, cfg);
    validate_connecting_structure(g, cc, r.structure);
    for (size_t c = 0; c < cc.clusters.size(); ++c) {
      if (r.structure.isolated(c)) EXPECT_EQ(r.color[c], Color::kRed);
    }
    auto report = check_balance(g, cc, k, r.color);
    ASSERT_TRUE(report.ok) << "trial " << trial << ": " << report.violation;
    expect_groups_balanced(r);
    if (trial % 10 == 0) {
      auto again = color_red_blue(g, cc, k, cfg);
      EXPECT_EQ(again.color, r.color);
      EXPECT_EQ(again.metrics.rounds, r.metrics.rounds);
    }
  }
}

TEST(BalanceTest, Examples) {
  Graph g = path_graph(4);
  auto two = ClusterCollection::singletons(g, {0, 1});
  EXPECT_TRUE(check_balance(g, two, 1, {Color::kBlue, Color::kRed}).ok);
  auto four = ClusterCollection::singletons(g, {0, 1, 2, 3});
  auto bad = check_balance(g, four, 1, std::vector<Color>(4, Color::kBlue));
  EXPECT_FALSE(bad.ok);
  EXPECT_NE(bad.violation.find("4 of 4"), std::string::npos);
  auto one = ClusterCollection::singletons(g, {0});
  auto exempt = check_balance(g, one, 1, {Color::kRed});
  EXPECT_TRUE(exempt.ok);
  EXPECT_TRUE(exempt.components.empty());
}

TEST(BalanceTest, JsonRoundTrip) {
  Graph g = path_graph(3);
  auto cc = ClusterCollection::singletons(g, {0, 2});
  std::vector<Color> color{Color::kBlue, Color::kRed};
  auto j = coloring_to_json(cc, color);
  EXPECT_EQ(j["0"], "blue");
  EXPECT_EQ(j["2"], "red");
  EXPECT_EQ(coloring_from_json(cc, j), color);
  j["2"] = "green";
  EXPECT_THROW(coloring_from_json(cc, j), std::invalid_argument);
}

}  // namespace
}  // namespace congestlab
