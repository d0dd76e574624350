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

#include "congestlab/generators.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

namespace congestlab {

uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound 0");
  const uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(rng()) * bound;
    if (static_cast<uint64_t>(m) >= threshold) {
      return static_cast<uint64_t>(m >> 64);
    }
  }
}

Graph random_regular(int n, int d, uint64_t seed) {
  if (n < 0 || d < 0) throw GraphError("random_regular: negative parameter");
  if ((static_cast<int64_t>(n) * d) % 2 != 0) {
    throw GraphError("random_regular: n*d must be even (n=" +
                     std::to_string(n) + ", d=" + std::to_string(d) + ")");
  }
  if (d >= n && n > 0) {
    throw GraphError("random_regular: need d < n");
  }
  std::mt19937_64 rng(seed);
  // Pairing model with incremental rejection of bad pairs; restart when the
  // remaining points admit no legal pair.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> points;
    points.reserve(static_cast<size_t>(n) * d);
    for (int v = 0; v < n; ++v) {
      for (int i = 0; i < d; ++i) points.push_back(v);
    }
    std::set<Edge> edges;
    bool stuck = false;
    while (!points.empty()) {
      bool placed = false;
      for (int tries = 0; tries < 100; ++tries) {
        const size_t i = uniform_below(rng, points.size());
        const size_t j = uniform_below(rng, points.size());
        if (i == j) continue;
        const int a = points[i], b = points[j];
        if (a == b) continue;
        const Edge e{std::min(a, b), std::max(a, b)};
        if (edges.count(e)) continue;
        edges.insert(e);
        const size_t hi = std::max(i, j), lo = std::min(i, j);
        points[hi] = points.back();
        points.pop_back();
        points[lo] = points.back();
        points.pop_back();
        placed = true;
        break;
      }
      if (!placed) {
        stuck = true;
        break;
      }
    }
    if (!stuck) {
      std::vector<Edge> list(edges.begin(), edges.end());
      return Graph::from_edges(n, list);
    }
  }
  throw GraphError("random_regular: failed to generate a simple graph");
}

Graph torus(int w, int h) {
  if (w < 3 || h < 3) throw GraphError("torus: both sides must be >= 3");
  std::vector<Edge> edges;
  auto at = [w](int x, int y) { return y * w + x; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      edges.emplace_back(at(x, y), at((x + 1) % w, y));
      edges.emplace_back(at(x, y), at(x, (y + 1) % h));
    }
  }
  return Graph::from_edges(w * h, edges);
}

Graph path_graph(int n) {
  if (n < 0) throw GraphError("path: negative size");
  std::vector<Edge> edges;
  for (int v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
  return Graph::from_edges(n, edges);
}

Graph bounded_er(int n, double p, int degree_cap, uint64_t seed) {
  if (n < 0 || p < 0 || p > 1 || degree_cap < 0) {
    throw GraphError("er: bad parameters");
  }
  std::mt19937_64 rng(seed);
  const uint64_t scale = uint64_t{1} << 53;
  const uint64_t cut = static_cast<uint64_t>(p * static_cast<double>(scale));
  std::vector<int> deg(n, 0);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const bool coin = (rng() >> 11) < cut;
      if (coin && deg[u] < degree_cap && deg[v] < degree_cap) {
        edges.emplace_back(u, v);
        ++deg[u];
        ++deg[v];
      }
    }
  }
  return Graph::from_edges(n, edges);
}

Graph complete_graph(int n) {
  if (n < 0 || n > 16) throw GraphError("complete: n must be in [0, 16]");
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  }
  return Graph::from_edges(n, edges);
}

Graph generate_graph(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.empty()) throw GraphError("empty generator spec");
  auto arg = [&](size_t i) -> const std::string& {
    if (i >= parts.size()) {
      throw GraphError("generator spec '" + spec + "' is missing fields");
    }
    return parts[i];
  };
  auto expect = [&](size_t count) {
    if (parts.size() != count) {
      throw GraphError("generator spec '" + spec + "' has wrong field count");
    }
  };
  try {
    const std::string& kind = parts[0];
    if (kind == "regular") {
      expect(4);
      return random_regular(std::stoi(arg(1)), std::stoi(arg(2)),
                            std::stoull(arg(3)));
    }
    if (kind == "torus") {
      expect(3);
      return torus(std::stoi(arg(1)), std::stoi(arg(2)));
    }
    if (kind == "path") {
      expect(2);
      return path_graph(std::stoi(arg(1)));
    }
    if (kind == "er") {
      expect(5);
      return bounded_er(std::stoi(arg(1)), std::stod(arg(2)),
                        std::stoi(arg(3)), std::stoull(arg(4)));
    }
    if (kind == "complete") {
      expect(2);
      return complete_graph(std::stoi(arg(1)));
    }
  } catch (const std::logic_error&) {
    throw GraphError("generator spec '" + spec + "' has a non-numeric field");
  }
  throw GraphError("unknown generator '" + parts[0] + "'");
}

Graph with_random_ids(const Graph& g, int id_bits, uint64_t seed) {
  if (id_bits < 1 || id_bits > kMaxIdBits) {
    throw GraphError("with_random_ids: id_bits out of range");
  }
  if (id_bits < 64 && (uint64_t{1} << (id_bits - 1)) < static_cast<uint64_t>(g.size())) {
    throw GraphError("with_random_ids: id space too small");
  }
  std::mt19937_64 rng(seed);
  std::set<Identifier> used;
  std::vector<Identifier> ids;
  while (static_cast<int>(ids.size()) < g.size()) {
    std::string hex = "0x";
    const int digits = (id_bits + 3) / 4;
    for (int i = 0; i < digits; ++i) {
      hex.push_back("0123456789abcdef"[uniform_below(rng, 16)]);
    }
    // Trim to id_bits and force the top bit.
    Identifier raw = Identifier::parse(hex);
    BitString bits;
    raw.write(bits, digits * 4);
    BitString trimmed;
    trimmed.append_range(bits, 0, id_bits - 1);
    trimmed.push(1, 1);
    BitReader reader(trimmed);
    Identifier id = Identifier::read(reader, id_bits);
    if (used.insert(id).second) ids.push_back(id);
  }
  std::vector<Edge> edges = g.edges();
  return Graph::from_edges(g.size(), edges, std::move(ids), id_bits);
}

}  // namespace congestlab
