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

#include "congestlab/graph.h"

#include <gtest/gtest.h>

#include <sstream>

#include "congestlab/generators.h"

namespace congestlab {
namespace {

Graph parse(const std::string& text) {
  std::istringstream in(text);
  return parse_graph(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const GraphError& e) {
    return e.what();
  }
  return "";
}

TEST(BitsTest, WidthHelpers) {
  EXPECT_EQ(bits_for(0), 0);
  EXPECT_EQ(bits_for(1), 0);
  EXPECT_EQ(bits_for(2), 1);
  EXPECT_EQ(bits_for(5), 3);
  EXPECT_EQ(bits_for(8), 3);
  EXPECT_EQ(log2_ceil(1), 1);
  EXPECT_EQ(log2_ceil(2), 1);
  EXPECT_EQ(log2_ceil(3), 2);
  EXPECT_EQ(log2_ceil(1024), 10);
  EXPECT_EQ(log2_ceil(1025), 11);
}

TEST(BitsTest, PushReadAcrossWords) {
  BitString s;
  s.push(5, 3);
  s.push(0xdeadbeefcafef00dULL, 64);
  s.push_bool(true);
  ASSERT_EQ(s.size(), 68u);
  BitReader r(s);
  EXPECT_EQ(r.take(3), 5u);
  EXPECT_EQ(r.take(64), 0xdeadbeefcafef00dULL);
  EXPECT_TRUE(r.take_bool());
  EXPECT_THROW(r.take(1), std::out_of_range);
  s.consume_front(3);
  EXPECT_EQ(s.read(0, 64), 0xdeadbeefcafef00dULL);
  EXPECT_THROW(s.push(4, 2), std::invalid_argument);
}

TEST(IdentifierTest, ParseAndSerializeWideValues) {
  const Identifier a = Identifier::parse("0x1" + std::string(60, '0'));
  EXPECT_EQ(a.bit_length(), 241);
  BitString s;
  a.write(s, 256);
  BitReader r(s);
  EXPECT_EQ(Identifier::read(r, 256), a);
  EXPECT_EQ(Identifier::parse("12345678901234567890123").to_string(),
            "12345678901234567890123");
  EXPECT_LT(Identifier(3), a);
  EXPECT_THROW(Identifier::parse("0x1" + std::string(64, '0')),
               std::out_of_range);
  Identifier b(100);
  EXPECT_EQ(b.divmod_small(7), 2u);
  EXPECT_EQ(b, Identifier(14));
}

TEST(GraphTest, LoadsPath) {
  Graph g = parse("3 2\n0 1\n1 2\n");
  EXPECT_EQ(g.size(), 3);
  EXPECT_EQ(g.edge_count(), 2);
  EXPECT_EQ(g.max_degree(), 2);
  EXPECT_EQ(g.neighbors(1)[0], 0);
  EXPECT_EQ(g.neighbors(1)[1], 2);
  EXPECT_EQ(g.id(2), Identifier(2));
}

TEST(GraphTest, RejectsMalformedInput) {
  EXPECT_NE(error_of("2 1\n0 0\n").find("self-loop"), std::string::npos);
  EXPECT_NE(error_of("4 2\n0 1\n0 1\n").find("duplicate edge"),
            std::string::npos);
  EXPECT_NE(error_of("4 2\n0 1\n1 0\n").find("duplicate edge"),
            std::string::npos);
  EXPECT_NE(error_of("3 1\n0 7\n").find("out of range"), std::string::npos);
  EXPECT_NE(error_of("3 1\n0 x\n").find("malformed"), std::string::npos);
  EXPECT_NE(error_of("3 2\n0 1\n").find("expected 2 edges"),
            std::string::npos);
  EXPECT_NE(error_of("2 1\n0 1\nid 0 5\nid 1 5\n").find("duplicate identifier"),
            std::string::npos);
}

TEST(GraphTest, IdentifierBlockAndWidth) {
  Graph g = parse("2 1\n0 1\nid 0 0xffffffffffffffffffff\nid 1 7\n");
  EXPECT_EQ(g.id(1), Identifier(7));
  EXPECT_EQ(g.id_bits(), 80);
  Graph h = parse("16 0\n");
  EXPECT_EQ(h.id_bits(), 8);
}

TEST(GraphTest, SaveLoadRoundTripIsByteExact) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Graph g = with_random_ids(random_regular(40, 3, seed), 90, seed);
    std::ostringstream first;
    write_graph(g, first);
    Graph back = parse(first.str());
    std::ostringstream second;
    write_graph(back, second);
    EXPECT_EQ(first.str(), second.str());
    EXPECT_EQ(back.ids(), g.ids());
  }
}

TEST(GraphTest, SlotsAreConsistent) {
  Graph g = random_regular(30, 4, 9);
  for (int v = 0; v < g.size(); ++v) {
    for (int p = 0; p < g.degree(v); ++p) {
      const int s = g.slot_begin(v) + p;
      const int u = g.slot_target(s);
      const int r = g.reverse_slot(s);
      EXPECT_EQ(g.slot_target(r), v);
      EXPECT_EQ(g.reverse_slot(r), s);
      EXPECT_EQ(g.edge_of_slot(s), g.edge_of_slot(r));
      EXPECT_EQ(g.edge_index(u, v), g.edge_of_slot(s));
    }
  }
}

TEST(BfsTest, PathExamples) {
  Graph g = path_graph(3);
  int a[] = {0};
  auto d = bfs_distances(g, a);
  EXPECT_EQ(d.dist, (std::vector<int>{0, 1, 2}));
  int ac[] = {0, 2};
  EXPECT_EQ(bfs_distances(g, ac).dist[1], 1);
  Graph two = Graph::from_edges(2, {});
  EXPECT_FALSE(bfs_distances(two, a).reachable(1));
  EXPECT_THROW(bfs_distances(g, std::span<const int>{}), GraphError);
}

std::vector<std::vector<int>> floyd_warshall(const Graph& g) {
  const int n = g.size();
  const int inf = 1 << 29;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int v = 0; v < n; ++v) {
    d[v][v] = 0;
    for (int u : g.neighbors(v)) d[v][u] = 1;
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
      }
    }
  }
  for (auto& row : d) {
    for (int& x : row) {
      if (x >= inf) x = kUnreachable;
    }
  }
  return d;
}

TEST(BfsTest, AgreesWithFloydWarshall) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 10 + static_cast<int>(seed * 3) % 55;
    Graph g = bounded_er(n, 0.06, 4, seed);
    auto fw = floyd_warshall(g);
    for (int s = 0; s < n; ++s) {
      int src[] = {s};
      auto d = bfs_distances(g, src);
      EXPECT_EQ(d.dist, fw[s]);
      for (const auto& [u, v] : g.edges()) {
        if (d.reachable(u)) EXPECT_LE(d.dist[v], d.dist[u] + 1);
      }
    }
    for (int k = 1; k <= 3; ++k) {
      for (int u = 0; u < n; u += 3) {
        for (int v = 0; v < n; ++v) {
          EXPECT_EQ(power_adjacent(g, u, v, k), u != v && fw[u][v] <= k);
        }
      }
    }
  }
}

TEST(ComponentsTest, PathExamples) {
  Graph g = path_graph(3);
  auto pred = [](int v) { return v != 1; };
  EXPECT_EQ(components_under(g, pred, 1).size(), 2u);
  auto two = components_under(g, pred, 2);
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0], (std::vector<int>{0, 2}));
  EXPECT_TRUE(components_under(g, [](int) { return false; }, 1).empty());
  EXPECT_THROW(components_under(g, pred, 0), GraphError);
}

TEST(ComponentsTest, PowerComponentsMatchOracle) {
  for (uint64_t seed = 0; seed < 15; ++seed) {
    Graph g = bounded_er(48, 0.05, 4, seed + 100);
    auto fw = floyd_warshall(g);
    auto pred = [&](int v) { return (v * 7 + seed) % 3 != 0; };
    for (int k = 1; k <= 3; ++k) {
      auto comps = components_under(g, pred, k);
      std::vector<int> label(g.size(), -1);
      for (size_t c = 0; c < comps.size(); ++c) {
        for (int v : comps[c]) label[v] = static_cast<int>(c);
      }
      // Oracle: union-find over predicate pairs within distance k.
      std::vector<int> parent(g.size());
      for (int v = 0; v < g.size(); ++v) parent[v] = v;
      std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
      };
      for (int u = 0; u < g.size(); ++u) {
        for (int v = 0; v < g.size(); ++v) {
          if (pred(u) && pred(v) && fw[u][v] <= k) parent[find(u)] = find(v);
        }
      }
      for (int u = 0; u < g.size(); ++u) {
        EXPECT_EQ(label[u] >= 0, pred(u));
        for (int v = 0; v < g.size(); ++v) {
          if (pred(u) && pred(v)) {
            EXPECT_EQ(label[u] == label[v], find(u) == find(v));
          }
        }
      }
    }
  }
}

TEST(GeneratorsTest, Examples) {
  Graph p = generate_graph("path:3");
  EXPECT_EQ(p.size(), 3);
  EXPECT_EQ(p.edge_count(), 2);
  Graph t = generate_graph("torus:4:4");
  EXPECT_EQ(t.size(), 16);
  for (int v = 0; v < 16; ++v) EXPECT_EQ(t.degree(v), 4);
  std::ostringstream a, b;
  write_graph(generate_graph("regular:64:4:1"), a);
  write_graph(generate_graph("regular:64:4:1"), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_THROW(generate_graph("regular:5:3:1"), GraphError);
  EXPECT_THROW(generate_graph("complete:17"), GraphError);
  Graph r = random_regular(1024, 10, 3);
  for (int v = 0; v < r.size(); ++v) EXPECT_EQ(r.degree(v), 10);
  Graph e = bounded_er(200, 0.1, 5, 4);
  EXPECT_LE(e.max_degree(), 5);
}

}  // namespace
}  // namespace congestlab
