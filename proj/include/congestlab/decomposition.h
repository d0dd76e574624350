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


#ifndef CONGESTLAB_DECOMPOSITION_H_
#define CONGESTLAB_DECOMPOSITION_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/carving.h"
#include "congestlab/cluster.h"
#include "congestlab/engine.h"
#include "json.hpp"

namespace congestlab {

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassStats {
  int64_t residue_before = 0;
  int64_t residue_after = 0;
  int clusters = 0;
  int steiner_radius = 0;
  int edge_congestion = 0;
  int min_distance = kUnreachable;
  int64_t x = 0;
  int64_t beta_bound = 0;
  int64_t kappa_bound = 0;
  bool fast = false;  // levels variant used
  int64_t rounds = 0;
};

struct NetworkDecomposition {
  int k = 1;
  std::vector<ClusterCollection> classes;
  std::vector<ClassStats> stats;
  RoundMetrics metrics;
};

// Carves the target set (all nodes when empty) with x=2 until nothing is
// left. At most ceil(log2 n)+1 classes.
NetworkDecomposition decompose_logn(const Graph& g, int k, const SimConfig& cfg,
                                    const std::vector<int>& targets = {});

// Smallest x with x^lambda >= n.
int64_t root_ceil(int64_t n, int lambda);

// lambda carvings with x = ceil(n^(1/lambda)).
NetworkDecomposition decompose_few_colors(const Graph& g, int lambda, int k,
                                          const SimConfig& cfg,
                                          const std::vector<int>& targets = {});

struct DecompositionReport {
  bool ok = true;
  std::string violation;
  int colors = 0;
  int max_beta = 0;
  int max_kappa = 0;
  int min_distance = kUnreachable;  // over all classes
};

// Every target node (all nodes when empty) in exactly one cluster of exactly
// one class, each class a valid collection with cluster distance > k.
DecompositionReport validate_decomposition(const Graph& g,
                                           const NetworkDecomposition& nd,
                                           const std::vector<int>& targets = {});

nlohmann::json decomposition_to_json(const NetworkDecomposition& nd);
NetworkDecomposition decomposition_from_json(const nlohmann::json& j);

}  // namespace congestlab

#endif  // CONGESTLAB_DECOMPOSITION_H_
