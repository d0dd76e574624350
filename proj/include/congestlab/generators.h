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

#ifndef CONGESTLAB_GENERATORS_H_
#define CONGESTLAB_GENERATORS_H_

#include <cstdint>
#include <random>
#include <string>

#include "congestlab/graph.h"

namespace congestlab {

// Uniform integer in [0, bound) from a 64-bit engine. Unlike
// std::uniform_int_distribution the result is identical on every platform.
uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound);

Graph random_regular(int n, int d, uint64_t seed);
Graph torus(int w, int h);
Graph path_graph(int n);
// G(n, p) where an edge is kept only if both endpoints are below degree_cap.
Graph bounded_er(int n, double p, int degree_cap, uint64_t seed);
Graph complete_graph(int n);

// Parses "regular:n:d:seed", "torus:w:h", "path:n", "er:n:p:cap:seed",
// "complete:n".
Graph generate_graph(const std::string& spec);

// Replaces identifiers with distinct random values of exactly `id_bits` width
// (top bit set), for exercising exponential identifier spaces.
Graph with_random_ids(const Graph& g, int id_bits, uint64_t seed);

}  // namespace congestlab

#endif  // CONGESTLAB_GENERATORS_H_
