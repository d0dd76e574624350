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

#ifndef CONGESTLAB_ENGINE_H_
#define CONGESTLAB_ENGINE_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestlab/bits.h"
#include "congestlab/graph.h"

namespace congestlab {

enum class Mode { kCongest, kLocal };

struct SimConfig {
  Mode mode = Mode::kCongest;
  int64_t bandwidth_bits = 32;
  int64_t max_rounds = 1000000;
  uint64_t seed = 0;
  // Cap h on the number of draws per node.
  int64_t tape_cap = int64_t{1} << 24;
  // When set, one JSON line per (round, directed edge) carrying a message.
  std::ostream* trace = nullptr;

  int64_t bandwidth() const {
    return mode == Mode::kLocal ? std::numeric_limits<int64_t>::max()
                                : bandwidth_bits;
  }
  static SimConfig local(uint64_t seed = 0) {
    SimConfig cfg;
    cfg.mode = Mode::kLocal;
    cfg.seed = seed;
    return cfg;
  }
  static SimConfig congest(int64_t b, uint64_t seed = 0) {
    SimConfig cfg;
    cfg.bandwidth_bits = b;
    cfg.seed = seed;
    return cfg;
  }
};

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BandwidthExceeded : public EngineError {
 public:
  BandwidthExceeded(int from, int to, int64_t round, int64_t bits,
                    int64_t budget);
  int from, to;
  int64_t round, bits;
};

class TapeExhausted : public EngineError {
 public:
  TapeExhausted(int node, int64_t index);
  int node;
  int64_t index;
};

class RoundLimitExceeded : public EngineError {
 public:
  explicit RoundLimitExceeded(int64_t limit);
  int64_t limit;
};

// Source of per-node random values. Implementations must be deterministic
// functions of (node, index, range) for the lifetime of one run.
class TapeSource {
 public:
  virtual ~TapeSource() = default;
  virtual uint64_t value(int node, int64_t index, uint64_t range) = 0;
};

// Counter-based generator: value = f(seed, node, index), uniform on [range).
class SeededTape : public TapeSource {
 public:
  SeededTape(uint64_t seed, int64_t cap) : seed_(seed), cap_(cap) {}
  uint64_t value(int node, int64_t index, uint64_t range) override;

 private:
  uint64_t seed_;
  int64_t cap_;
};

// Reads values from explicitly supplied per-node tapes.
class FixedTape : public TapeSource {
 public:
  explicit FixedTape(const std::vector<std::vector<uint64_t>>& tapes)
      : tapes_(&tapes) {}
  uint64_t value(int node, int64_t index, uint64_t range) override;

 private:
  const std::vector<std::vector<uint64_t>>* tapes_;
};

uint64_t counter_draw(uint64_t seed, uint64_t node, uint64_t index,
                      uint64_t range);

class NodeContext {
 public:
  NodeContext(const Graph& g, int node, TapeSource& tape)
      : g_(&g), node_(node), tape_(&tape) {}

  int node() const { return node_; }
  int degree() const { return g_->degree(node_); }
  const Identifier& id() const { return g_->id(node_); }
  const Identifier& neighbor_id(int port) const {
    return g_->id(g_->neighbors(node_)[port]);
  }
  int id_bits() const { return g_->id_bits(); }
  int network_size() const { return g_->size(); }

  // Next value from this node's tape, uniform over [0, range).
  uint64_t draw(uint64_t range);
  int64_t draws() const { return draws_; }

 private:
  const Graph* g_;
  int node_;
  TapeSource* tape_;
  int64_t draws_ = 0;
};

// Messages received this round, addressed by port. An empty bit string means
// no message arrived on that port.
class Inbox {
 public:
  Inbox(const std::vector<BitString>* slots, int begin, int degree)
      : slots_(slots), begin_(begin), degree_(degree) {}
  int degree() const { return degree_; }
  bool has(int port) const { return !(*slots_)[begin_ + port].empty(); }
  const BitString& from(int port) const { return (*slots_)[begin_ + port]; }
  bool empty() const;

 private:
  const std::vector<BitString>* slots_;
  int begin_;
  int degree_;
};

class Outbox {
 public:
  Outbox(const Graph& g, int node, std::vector<BitString>* slots,
         std::vector<int>* dirty)
      : g_(&g), node_(node), slots_(slots), dirty_(dirty) {}
  // Buffer for the message to the neighbor on `port`; append bits to it.
  BitString& send(int port);

 private:
  const Graph* g_;
  int node_;
  std::vector<BitString>* slots_;
  std::vector<int>* dirty_;
};

// One node's algorithm. on_round(ctx, 0, empty inbox, out) is the
// initialization call; messages written in round t arrive in round t+1.
// A finished program is called again only when a message reaches it, so it
// keeps relaying; a halted program is never called again and messages to it
// are dropped.
class NodeProgram {
 public:
  virtual ~NodeProgram() = default;
  virtual void on_round(NodeContext& ctx, int64_t round, const Inbox& in,
                        Outbox& out) = 0;
  virtual bool finished() const = 0;
  virtual bool halted() const { return false; }
  virtual BitString output() const { return {}; }
};

using ProgramFactory = std::function<std::unique_ptr<NodeProgram>(int node)>;

struct RoundMetrics {
  int64_t rounds = 0;
  int64_t runs = 0;
  // Cumulative bits per directed edge, indexed by Graph slot of the sender.
  std::vector<int64_t> slot_bits;
  int64_t max_round_bits = 0;
  std::vector<int64_t> messages_per_round;
  int64_t total_bits = 0;
  int64_t total_messages = 0;

  // Sequential composition: rounds add up, counters merge.
  void absorb(const RoundMetrics& later);
  int64_t edge_bits(const Graph& g, int edge) const;
};

struct RunResult {
  std::vector<std::unique_ptr<NodeProgram>> programs;
  std::vector<BitString> outputs;
  std::vector<int64_t> draws;
  RoundMetrics metrics;

  template <class P>
  P& program(int v) {
    return static_cast<P&>(*programs[v]);
  }
  template <class P>
  const P& program(int v) const {
    return static_cast<const P&>(*programs[v]);
  }
};

RunResult run(const Graph& g, const ProgramFactory& factory,
              const SimConfig& cfg);
RunResult run_with_tape(const Graph& g, const ProgramFactory& factory,
                        const SimConfig& cfg,
                        const std::vector<std::vector<uint64_t>>& tapes);
RunResult run_with_source(const Graph& g, const ProgramFactory& factory,
                          const SimConfig& cfg, TapeSource& tape);

}  // namespace congestlab

#endif  // CONGESTLAB_ENGINE_H_
