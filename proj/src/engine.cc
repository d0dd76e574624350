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

#include "congestlab/engine.h"

#include <algorithm>
#include <ostream>

#include "json.hpp"

namespace congestlab {

BandwidthExceeded::BandwidthExceeded(int from, int to, int64_t round,
                                     int64_t bits, int64_t budget)
    : EngineError("BandwidthExceeded: edge " + std::to_string(from) + "->" +
                  std::to_string(to) + " round " + std::to_string(round) +
                  ": " + std::to_string(bits) + " bits > b=" +
                  std::to_string(budget)),
      from(from),
      to(to),
      round(round),
      bits(bits) {}

TapeExhausted::TapeExhausted(int node, int64_t index)
    : EngineError("TapeExhausted: node " + std::to_string(node) +
                  " has no tape value at index " + std::to_string(index)),
      node(node),
      index(index) {}

RoundLimitExceeded::RoundLimitExceeded(int64_t limit)
    : EngineError("RoundLimitExceeded: not finished after " +
                  std::to_string(limit) + " rounds"),
      limit(limit) {}

namespace {

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t counter_draw(uint64_t seed, uint64_t node, uint64_t index,
                      uint64_t range) {
  if (range == 0) throw std::invalid_argument("draw: range must be >= 1");
  if (range == 1) return 0;
  const uint64_t base = splitmix(splitmix(splitmix(seed) ^ node) ^ index);
  // Lemire's multiply-shift with rejection; each retry hashes a new attempt.
  const uint64_t threshold = (0 - range) % range;
  for (uint64_t attempt = 0;; ++attempt) {
    const uint64_t x = attempt == 0 ? base : splitmix(base ^ attempt);
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * range;
    if (static_cast<uint64_t>(m) >= threshold) {
      return static_cast<uint64_t>(m >> 64);
    }
  }
}

uint64_t SeededTape::value(int node, int64_t index, uint64_t range) {
  if (index >= cap_) throw TapeExhausted(node, index);
  return counter_draw(seed_, static_cast<uint64_t>(node),
                      static_cast<uint64_t>(index), range);
}

uint64_t FixedTape::value(int node, int64_t index, uint64_t range) {
  if (node >= static_cast<int>(tapes_->size()) ||
      index >= static_cast<int64_t>((*tapes_)[node].size())) {
    throw TapeExhausted(node, index);
  }
  const uint64_t v = (*tapes_)[node][index];
  if (v >= range) {
    throw EngineError("tape value " + std::to_string(v) + " at node " +
                      std::to_string(node) + " index " + std::to_string(index) +
                      " outside range " + std::to_string(range));
  }
  return v;
}

uint64_t NodeContext::draw(uint64_t range) {
  if (range == 0) throw std::invalid_argument("draw: range must be >= 1");
  return tape_->value(node_, draws_++, range);
}

bool Inbox::empty() const {
  for (int p = 0; p < degree_; ++p) {
    if (has(p)) return false;
  }
  return true;
}

BitString& Outbox::send(int port) {
  const int target = g_->reverse_slot(g_->slot_begin(node_) + port);
  if ((*slots_)[target].empty()) dirty_->push_back(target);
  return (*slots_)[target];
}

void RoundMetrics::absorb(const RoundMetrics& later) {
  rounds += later.rounds;
  runs += later.runs;
  if (slot_bits.size() < later.slot_bits.size()) {
    slot_bits.resize(later.slot_bits.size(), 0);
  }
  for (size_t s = 0; s < later.slot_bits.size(); ++s) {
    slot_bits[s] += later.slot_bits[s];
  }
  max_round_bits = std::max(max_round_bits, later.max_round_bits);
  messages_per_round.insert(messages_per_round.end(),
                            later.messages_per_round.begin(),
                            later.messages_per_round.end());
  total_bits += later.total_bits;
  total_messages += later.total_messages;
}

int64_t RoundMetrics::edge_bits(const Graph& g, int edge) const {
  if (slot_bits.empty()) return 0;
  const auto [u, v] = g.edge(edge);
  const int s = g.slot_begin(u) + g.port_of(u, v);
  return slot_bits[s] + slot_bits[g.reverse_slot(s)];
}

RunResult run_with_source(const Graph& g, const ProgramFactory& factory,
                          const SimConfig& cfg, TapeSource& tape) {
  if (cfg.mode == Mode::kCongest && cfg.bandwidth_bits < 1) {
    throw std::invalid_argument("CONGEST mode requires bandwidth_bits >= 1");
  }
  if (cfg.max_rounds < 0) throw std::invalid_argument("max_rounds < 0");
  const int n = g.size();
  const int64_t budget = cfg.bandwidth();

  RunResult result;
  result.programs.reserve(n);
  std::vector<NodeContext> ctx;
  ctx.reserve(n);
  for (int v = 0; v < n; ++v) {
    result.programs.push_back(factory(v));
    if (!result.programs.back()) {
      throw std::invalid_argument("program factory returned null for node " +
                                  std::to_string(v));
    }
    ctx.emplace_back(g, v, tape);
  }
  RoundMetrics& m = result.metrics;
  m.runs = 1;
  m.slot_bits.assign(g.slot_count(), 0);

  // Double-buffered per-slot messages, indexed by the receiver's slot.
  std::vector<BitString> inbox(g.slot_count()), outbox(g.slot_count());
  std::vector<int> in_dirty, out_dirty;
  std::vector<char> done(n, 0), halted(n, 0), queued(n, 0);
  int64_t unfinished = 0;
  std::vector<int> awake, next_awake;

  auto call = [&](int v, int64_t round) {
    Inbox in(&inbox, g.slot_begin(v), g.degree(v));
    Outbox out(g, v, &outbox, &out_dirty);
    const size_t mark = out_dirty.size();
    result.programs[v]->on_round(ctx[v], round, in, out);
    for (size_t i = mark; i < out_dirty.size(); ++i) {
      const int target = out_dirty[i];
      const int64_t bits = static_cast<int64_t>(outbox[target].size());
      if (bits > budget) {
        throw BandwidthExceeded(v, g.slot_target(g.reverse_slot(target)), round + 1, bits,
                                budget);
      }
    }
    const bool was_done = done[v];
    halted[v] = result.programs[v]->halted();
    done[v] = halted[v] || result.programs[v]->finished();
    unfinished += (was_done ? 1 : 0) - (done[v] ? 1 : 0);
    if (!done[v] && !queued[v]) {
      queued[v] = 1;
      next_awake.push_back(v);
    }
  };

  // Round 0: initialization.
  for (int v = 0; v < n; ++v) {
    done[v] = 1;
    call(v, 0);
  }
  unfinished = 0;
  for (int v = 0; v < n; ++v) unfinished += done[v] ? 0 : 1;

  int64_t round = 0;
  while (true) {
    // Drop empty buffers that were touched but never written.
    out_dirty.erase(std::remove_if(out_dirty.begin(), out_dirty.end(),
                                   [&](int s) { return outbox[s].empty(); }),
                    out_dirty.end());
    if (out_dirty.empty() && unfinished == 0) break;
    ++round;
    if (round > cfg.max_rounds) throw RoundLimitExceeded(cfg.max_rounds);

    for (int s : in_dirty) inbox[s].clear();
    in_dirty.clear();
    std::swap(inbox, outbox);
    std::swap(in_dirty, out_dirty);
    std::sort(in_dirty.begin(), in_dirty.end());
    in_dirty.erase(std::unique(in_dirty.begin(), in_dirty.end()),
                   in_dirty.end());

    int64_t count = 0;
    for (int s : in_dirty) {
      const int64_t bits = static_cast<int64_t>(inbox[s].size());
      const int sender_slot = g.reverse_slot(s);
      m.slot_bits[sender_slot] += bits;
      m.max_round_bits = std::max(m.max_round_bits, bits);
      m.total_bits += bits;
      ++count;
      const int receiver = g.slot_target(sender_slot);
      if (cfg.trace != nullptr) {
        nlohmann::json rec = {{"round", round},
                              {"from", g.slot_target(s)},
                              {"to", receiver},
                              {"bits", bits}};
        *cfg.trace << rec.dump() << '\n';
      }
      if (!halted[receiver] && !queued[receiver]) {
        queued[receiver] = 1;
        next_awake.push_back(receiver);
      }
    }
    m.messages_per_round.push_back(count);
    m.total_messages += count;

    awake.swap(next_awake);
    next_awake.clear();
    std::sort(awake.begin(), awake.end());
    for (int v : awake) queued[v] = 0;
    for (int v : awake) {
      if (!halted[v]) call(v, round);
    }
  }
  m.rounds = round;
  result.outputs.reserve(n);
  result.draws.reserve(n);
  for (int v = 0; v < n; ++v) {
    result.outputs.push_back(result.programs[v]->output());
    result.draws.push_back(ctx[v].draws());
  }
  return result;
}

RunResult run(const Graph& g, const ProgramFactory& factory,
              const SimConfig& cfg) {
  SeededTape tape(cfg.seed, cfg.tape_cap);
  return run_with_source(g, factory, cfg, tape);
}

RunResult run_with_tape(const Graph& g, const ProgramFactory& factory,
                        const SimConfig& cfg,
                        const std::vector<std::vector<uint64_t>>& tapes) {
  FixedTape tape(tapes);
  return run_with_source(g, factory, cfg, tape);
}

}  // namespace congestlab
