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


#include "congestlab/decomposition.h"

#include <gtest/gtest.h>

#include "congestlab/generators.h"

namespace congestlab {
namespace {

Cluster singleton(const Graph& g, int v) {
  Cluster c;
  c.id = g.id(v);
  c.leader = v;
  c.members = {v};
  return c;
}

TEST(RootCeilTest, Values) {
  EXPECT_EQ(root_ceil(256, 2), 16);
  EXPECT_EQ(root_ceil(257, 2), 17);
  EXPECT_EQ(root_ceil(81, 4), 3);
  EXPECT_EQ(root_ceil(1024, 10), 2);
  EXPECT_EQ(root_ceil(1000, 3), 10);
  EXPECT_EQ(root_ceil(1001, 3), 11);
  EXPECT_EQ(root_ceil(1, 3), 1);
}

TEST(DecomposeTest, SingleNode) {
  Graph g = path_graph(1);
  auto nd = decompose_logn(g, 1, SimConfig::congest(16));
  ASSERT_EQ(nd.classes.size(), 1u);
  EXPECT_EQ(nd.classes[0].clusters.size(), 1u);
  EXPECT_TRUE(validate_decomposition(g, nd).ok);
}

TEST(DecomposeTest, LognOnRandomRegular) {
  for (int k : {1, 5}) {
    Graph g = random_regular(256, 4, 3 + k);
    auto nd = decompose_logn(g, k, SimConfig::congest(32));
    const auto rep = validate_decomposition(g, nd);
    EXPECT_TRUE(rep.ok) << rep.violation;
    EXPECT_LE(nd.classes.size(), 9u);
    for (const auto& st : nd.stats) {
      EXPECT_LE(st.residue_after * 2, st.residue_before);
      EXPECT_LE(st.steiner_radius, st.beta_bound);
      EXPECT_LE(st.edge_congestion, st.kappa_bound);
    }
  }
}

TEST(DecomposeTest, LognOnPathNeedsSeveralClasses) {
  Graph g = path_graph(40);
  auto nd = decompose_logn(g, 3, SimConfig::congest(24));
  const auto rep = validate_decomposition(g, nd);
  EXPECT_TRUE(rep.ok) << rep.violation;
  EXPECT_GT(rep.min_distance, 3);
}

TEST(DecomposeTest, TargetSubset) {
  Graph g = torus(8, 8);
  std::vector<int> targets;
  for (int v = 0; v < g.size(); v += 3) targets.push_back(v);
  auto nd = decompose_logn(g, 2, SimConfig::congest(24), targets);
  EXPECT_TRUE(validate_decomposition(g, nd, targets).ok);
  EXPECT_FALSE(validate_decomposition(g, nd).ok);
}

TEST(DecomposeTest, FewColorsTwoClasses) {
  Graph g = random_regular(256, 4, 8);
  auto nd = decompose_few_colors(g, 2, 1, SimConfig::congest(32));
  EXPECT_TRUE(validate_decomposition(g, nd).ok);
  ASSERT_LE(nd.classes.size(), 2u);
  EXPECT_EQ(nd.stats[0].x, 16);
  EXPECT_LE(nd.stats[0].residue_after, 16);
}

TEST(DecomposeTest, FewColorsDistanceTwo) {
  Graph g = random_regular(81, 4, 2);
  auto nd = decompose_few_colors(g, 4, 2, SimConfig::congest(32));
  const auto rep = validate_decomposition(g, nd);
  EXPECT_TRUE(rep.ok) << rep.violation;
  EXPECT_LE(nd.classes.size(), 4u);
  for (const auto& st : nd.stats) EXPECT_LE(st.residue_after * 3, st.residue_before);
}

TEST(DecomposeTest, FewColorsRejectsBadLambda) {
  Graph g = path_graph(16);
  EXPECT_THROW(decompose_few_colors(g, 0, 1, SimConfig::local()), std::invalid_argument);
  EXPECT_THROW(decompose_few_colors(g, 5, 1, SimConfig::local()), std::invalid_argument);
}

TEST(DecompValidateTest, NodeInTwoClasses) {
  Graph g = path_graph(5);
  NetworkDecomposition nd;
  nd.k = 1;
  ClusterCollection a, b;
  a.id_bits = b.id_bits = g.id_bits();
  a.clusters = {singleton(g, 0), singleton(g, 2)};
  b.clusters = {singleton(g, 2), singleton(g, 4)};
  nd.classes = {a, b};
  const auto rep = validate_decomposition(g, nd);
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(rep.violation.find("partition"), std::string::npos);
}

TEST(DecompValidateTest, DistanceMustExceedK) {
  Graph g = path_graph(4);
  NetworkDecomposition nd;
  nd.k = 2;
  ClusterCollection a, b;
  a.id_bits = b.id_bits = g.id_bits();
  a.clusters = {singleton(g, 0), singleton(g, 2)};  // distance exactly 2
  b.clusters = {singleton(g, 1), singleton(g, 3)};
  nd.classes = {a, b};
  const auto rep = validate_decomposition(g, nd);
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(rep.violation.find("distance 2"), std::string::npos);
}

TEST(DecompValidateTest, FourCycleOppositePairs) {
  Graph g = Graph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  NetworkDecomposition nd;
  nd.k = 1;
  ClusterCollection a, b;
  a.id_bits = b.id_bits = g.id_bits();
  a.clusters = {singleton(g, 0), singleton(g, 2)};
  b.clusters = {singleton(g, 1), singleton(g, 3)};
  nd.classes = {a, b};
  const auto rep = validate_decomposition(g, nd);
  EXPECT_TRUE(rep.ok) << rep.violation;
  EXPECT_EQ(rep.colors, 2);
}

TEST(DecompValidateTest, JsonRoundTrip) {
  Graph g = random_regular(32, 4, 1);
  auto nd = decompose_logn(g, 1, SimConfig::congest(32));
  auto back = decomposition_from_json(decomposition_to_json(nd));
  EXPECT_EQ(back.k, 1);
  EXPECT_TRUE(validate_decomposition(g, back).ok);
  EXPECT_EQ(decomposition_to_json(back)["classes"], decomposition_to_json(nd)["classes"]);
}

}  // namespace
}  // namespace congestlab
