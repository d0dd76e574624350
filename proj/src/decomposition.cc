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

#include <algorithm>
#include <numeric>

namespace congestlab {
namespace {

std::vector<int> target_set(const Graph& g, const std::vector<int>& targets) {
  std::vector<int> s = targets;
  if (s.empty()) {
    s.resize(g.size());
    std::iota(s.begin(), s.end(), 0);
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

ClassStats class_stats(const Graph& g, const ClusterCollection& cc,
                       int64_t before, int64_t after) {
  ClassStats st;
  st.residue_before = before;
  st.residue_after = after;
  st.clusters = static_cast<int>(cc.clusters.size());
  const CollectionStats cs = validate_collection(g, cc);
  st.steiner_radius = cs.steiner_radius;
  st.edge_congestion = cs.edge_congestion;
  st.min_distance = cs.min_cluster_distance;
  return st;
}

}  // namespace

NetworkDecomposition decompose_logn(const Graph& g, int k, const SimConfig& cfg,
                                    const std::vector<int>& targets) {
  if (k < 1) throw std::invalid_argument("decompose: k must be >= 1");
  NetworkDecomposition nd;
  nd.k = k;
  std::vector<int> remaining = target_set(g, targets);
  const int limit = log2_ceil(static_cast<uint64_t>(g.size())) + 1;
  const auto params = CarveParamsE::from(g.size(), 2, k);
  while (!remaining.empty()) {
    if (static_cast<int>(nd.classes.size()) == limit) {
      throw DecompositionError("decompose: " + std::to_string(remaining.size()) +
                               " nodes left after " + std::to_string(limit) +
                               " classes");
    }
    CarveResult r = carve_distance_k(g, remaining, k, 2, cfg, g.size());
    const auto before = static_cast<int64_t>(remaining.size());
    const auto after = static_cast<int64_t>(r.dead.size());
    if (after * 2 > before) {
      throw DecompositionError("decompose: class " + std::to_string(nd.classes.size()) +
                               " clustered only " + std::to_string(before - after) +
                               " of " + std::to_string(before) + " nodes");
    }
    ClassStats st = class_stats(g, r.clusters, before, after);
    st.x = 2;
    st.beta_bound = params.beta_bound;
    st.kappa_bound = params.kappa_bound;
    st.rounds = r.metrics.rounds;
    nd.metrics.absorb(r.metrics);
    nd.stats.push_back(st);
    nd.classes.push_back(std::move(r.clusters));
    remaining = std::move(r.dead);
  }
  return nd;
}

int64_t root_ceil(int64_t n, int lambda) {
  if (lambda < 1) throw std::invalid_argument("root_ceil: lambda must be >= 1");
  if (n <= 1) return 1;
  auto reaches = [&](int64_t x) {
    __int128 p = 1;
    for (int i = 0; i < lambda; ++i) {
      p *= x;
      if (p >= n) return true;
    }
    return p >= n;
  };
  int64_t lo = 1, hi = n;  // reaches(hi) holds
  while (lo < hi) {
    const int64_t mid = lo + (hi - lo) / 2;
    if (reaches(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

NetworkDecomposition decompose_few_colors(const Graph& g, int lambda, int k,
                                          const SimConfig& cfg,
                                          const std::vector<int>& targets) {
  if (k < 1) throw std::invalid_argument("decompose: k must be >= 1");
  const int max_lambda = std::max(1, log2_ceil(static_cast<uint64_t>(g.size())));
  if (lambda < 1 || lambda > max_lambda) {
    throw std::invalid_argument("decompose: lambda must be in [1, " +
                                std::to_string(max_lambda) + "]");
  }
  NetworkDecomposition nd;
  nd.k = k;
  const int64_t x = std::max<int64_t>(2, root_ceil(g.size(), lambda));
  std::vector<int> remaining = target_set(g, targets);
  for (int i = 0; i < lambda && !remaining.empty(); ++i) {
    const bool fast = k == 1;
    CarveResult r = fast ? carve_fast(g, remaining, static_cast<int>(x), cfg, g.size())
                         : carve_distance_k(g, remaining, k, static_cast<int>(x), cfg,
                                            g.size());
    const auto before = static_cast<int64_t>(remaining.size());
    const auto after = static_cast<int64_t>(r.dead.size());
    ClassStats st = class_stats(g, r.clusters, before, after);
    st.x = x;
    st.fast = fast;
    if (fast) {
      const auto p = CarveParamsC::from(g.size(), x, before);
      st.beta_bound = p.beta_bound;
      st.kappa_bound = p.kappa_bound;
    } else {
      const auto p = CarveParamsE::from(g.size(), x, k);
      st.beta_bound = p.beta_bound;
      st.kappa_bound = p.kappa_bound;
    }
    st.rounds = r.metrics.rounds;
    nd.metrics.absorb(r.metrics);
    nd.stats.push_back(st);
    nd.classes.push_back(std::move(r.clusters));
    remaining = std::move(r.dead);
    if (after * x > before) {
      throw DecompositionError("decompose: class " + std::to_string(i) + " left " +
                               std::to_string(after) + " of " +
                               std::to_string(before) + " nodes with x=" +
                               std::to_string(x));
    }
  }
  if (!remaining.empty()) {
    throw DecompositionError("decompose: " + std::to_string(remaining.size()) +
                             " nodes left after " + std::to_string(lambda) +
                             " classes");
  }
  return nd;
}

DecompositionReport validate_decomposition(const Graph& g,
                                           const NetworkDecomposition& nd,
                                           const std::vector<int>& targets) {
  DecompositionReport rep;
  rep.colors = static_cast<int>(nd.classes.size());
  auto fail = [&](const std::string& msg) {
    if (rep.ok) {
      rep.ok = false;
      rep.violation = msg;
    }
  };
  std::vector<int> where(g.size(), -1);
  for (int c = 0; c < rep.colors && rep.ok; ++c) {
    const ClusterCollection& cc = nd.classes[c];
    try {
      const CollectionStats st = validate_collection(g, cc);
      rep.max_beta = std::max(rep.max_beta, st.steiner_radius);
      rep.max_kappa = std::max(rep.max_kappa, st.edge_congestion);
      rep.min_distance = std::min(rep.min_distance, st.min_cluster_distance);
      if (st.min_cluster_distance <= nd.k) {
        fail("class " + std::to_string(c) + ": clusters at distance " +
             std::to_string(st.min_cluster_distance) + ", need more than " +
             std::to_string(nd.k));
      }
    } catch (const CollectionError& e) {
      fail("class " + std::to_string(c) + ": " + e.what());
    }
    for (const auto& cl : cc.clusters) {
      for (int v : cl.members) {
        if (v < 0 || v >= g.size()) {
          fail("class " + std::to_string(c) + ": node " + std::to_string(v) +
               " out of range");
          continue;
        }
        if (where[v] >= 0) {
          fail("partition: node " + std::to_string(v) + " in classes " +
               std::to_string(where[v]) + " and " + std::to_string(c));
        }
        where[v] = c;
      }
    }
  }
  if (!rep.ok) return rep;
  const std::vector<int> s = target_set(g, targets);
  std::vector<char> wanted(g.size(), 0);
  for (int v : s) wanted[v] = 1;
  for (int v = 0; v < g.size(); ++v) {
    if (wanted[v] && where[v] < 0) {
      fail("partition: node " + std::to_string(v) + " not clustered");
      break;
    }
    if (!wanted[v] && where[v] >= 0) {
      fail("partition: node " + std::to_string(v) + " is not a target");
      break;
    }
  }
  return rep;
}

nlohmann::json decomposition_to_json(const NetworkDecomposition& nd) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& cc : nd.classes) classes.push_back(collection_to_json(cc));
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : nd.stats) {
    stats.push_back({{"residue_before", s.residue_before},
                     {"residue_after", s.residue_after},
                     {"clusters", s.clusters},
                     {"steiner_radius", s.steiner_radius},
                     {"edge_congestion", s.edge_congestion},
                     {"min_distance", s.min_distance},
                     {"x", s.x},
                     {"beta_bound", s.beta_bound},
                     {"kappa_bound", s.kappa_bound},
                     {"fast", s.fast},
                     {"rounds", s.rounds}});
  }
  return {{"k", nd.k}, {"classes", classes}, {"stats", stats},
          {"rounds", nd.metrics.rounds}};
}

NetworkDecomposition decomposition_from_json(const nlohmann::json& j) {
  NetworkDecomposition nd;
  nd.k = j.at("k").get<int>();
  for (const auto& c : j.at("classes")) nd.classes.push_back(collection_from_json(c));
  return nd;
}

}  // namespace congestlab
