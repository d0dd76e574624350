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


#include "congestlab/cps.h"

#include <algorithm>
#include <deque>
#include <memory>
#include <numeric>

#include "congestlab/links.h"

namespace congestlab {
namespace {

struct NodeLayout {
  std::vector<std::vector<int>> send_vars;  // per port: owned vars the neighbor's event reads
  std::vector<std::vector<int>> recv_pos;   // per port: vbl positions owned by the neighbor
  std::vector<char> dep;                    // per port
  std::vector<int> own_pos;                 // per owned var: position in own vbl or -1
  std::vector<std::vector<int>> own_users;  // per owned var: ports whose event reads it
  int64_t range = 1;
};

struct Shared {
  const LllInstance* inst;
  const std::vector<int64_t>* priority;
  std::vector<NodeLayout> layout;
  int64_t cap;
  int prefix;
  int64_t budget;

  bool before(int a, int b) const {
    if (!priority->empty()) return (*priority)[a] < (*priority)[b];
    return inst->graph.id(a) < inst->graph.id(b);
  }
};

int value_bits(const LllInstance& inst, int x) { return bits_for(inst.variables[x].range); }

Shared build_shared(const LllInstance& inst, const std::vector<int64_t>& priority, int64_t cap,
                    int64_t budget) {
  Shared s{&inst, &priority, {}, cap, 1, budget};
  const Graph& g = inst.graph;
  s.layout.resize(g.size());
  int64_t widest = 1;
  for (int v = 0; v < g.size(); ++v) {
    NodeLayout& L = s.layout[v];
    const auto nb = g.neighbors(v);
    L.send_vars.resize(nb.size());
    L.recv_pos.resize(nb.size());
    L.dep.assign(nb.size(), 0);
    L.range = tape_range(inst, v);
    const auto& own_vbl = inst.events[v].vbl;
    for (size_t p = 0; p < nb.size(); ++p) {
      const int u = nb[p];
      const auto& vbl = inst.events[u].vbl;
      int64_t bits = 0;
      for (int x : inst.owned[v]) {
        if (std::binary_search(vbl.begin(), vbl.end(), x)) {
          L.send_vars[p].push_back(x);
          bits += value_bits(inst, x);
        }
      }
      widest = std::max(widest, bits);
      for (size_t i = 0; i < own_vbl.size(); ++i) {
        if (inst.variables[own_vbl[i]].owner == u) L.recv_pos[p].push_back(static_cast<int>(i));
      }
      const auto& dep = inst.dependency[v];
      L.dep[p] = std::binary_search(dep.begin(), dep.end(), u);
    }
    for (int x : inst.owned[v]) {
      auto it = std::lower_bound(own_vbl.begin(), own_vbl.end(), x);
      L.own_pos.push_back(it != own_vbl.end() && *it == x ? static_cast<int>(it - own_vbl.begin())
                                                          : -1);
      std::vector<int> users;
      for (size_t p = 0; p < nb.size(); ++p) {
        if (std::find(L.send_vars[p].begin(), L.send_vars[p].end(), x) != L.send_vars[p].end()) {
          users.push_back(static_cast<int>(p));
        }
      }
      L.own_users.push_back(std::move(users));
    }
  }
  s.prefix = bits_for(static_cast<uint64_t>(widest) + 1);
  return s;
}

class CpsProgram : public NodeProgram {
 public:
  CpsProgram(const Shared& s, int v) : s_(&s), v_(v) {}

  void on_round(NodeContext& ctx, int64_t round, const Inbox& in, Outbox& out) override {
    const NodeLayout& L = s_->layout[v_];
    if (round == 0) {
      link_ = LinkLayer(std::vector<int>(ctx.degree(), 1),
                        FrameFormat::length_prefixed(s_->prefix));
      queues_.resize(ctx.degree());
      ev_vals_.assign(s_->inst->events[v_].vbl.size(), 0);
      own_vals_.assign(L.own_pos.size(), 0);
      resample_all(ctx, nullptr);
    }
    link_.receive(in, [&](int port, int, BitString& frame) { queues_[port].push_back(frame); });
    advance(ctx);
    link_.flush(out, s_->budget);
  }
  bool finished() const override { return done_ && link_.idle(); }

  const std::vector<int>& own_values() const { return own_vals_; }
  const std::vector<char>& violated_history() const { return vhist_; }
  const std::vector<char>& resampled_history() const { return ihist_; }

 private:
  enum class State { kSendValues, kWaitValues, kWaitViolated, kWaitResample, kDone };

  void resample_all(NodeContext& ctx, const std::vector<char>* hit) {
    const auto& vars = s_->inst->owned[v_];
    for (size_t i = 0; i < vars.size(); ++i) {
      if (hit && !(*hit)[i]) continue;
      own_vals_[i] = static_cast<int>(ctx.draw(s_->layout[v_].range) %
                                      s_->inst->variables[vars[i]].range);
    }
  }

  bool ready(const std::vector<char>& need) const {
    for (size_t p = 0; p < need.size(); ++p) {
      if (need[p] && queues_[p].empty()) return false;
    }
    return true;
  }

  BitString pop(int port) {
    BitString f = std::move(queues_[port].front());
    queues_[port].pop_front();
    return f;
  }

  void send_bit(int port, bool b) {
    BitString f;
    f.push_bool(b);
    link_.enqueue(port, 0, f);
  }

  void advance(NodeContext& ctx) {
    const NodeLayout& L = s_->layout[v_];
    const LllInstance& inst = *s_->inst;
    const int deg = ctx.degree();
    const auto nb = inst.graph.neighbors(v_);
    while (true) {
      if (state_ == State::kSendValues) {
        for (int p = 0; p < deg; ++p) {
          if (L.send_vars[p].empty()) continue;
          BitString f;
          for (int x : L.send_vars[p]) {
            const auto& owned = inst.owned[v_];
            const size_t i = std::lower_bound(owned.begin(), owned.end(), x) - owned.begin();
            f.push(own_vals_[i], value_bits(inst, x));
          }
          link_.enqueue(p, 0, f);
        }
        state_ = State::kWaitValues;
      } else if (state_ == State::kWaitValues) {
        std::vector<char> need(deg);
        for (int p = 0; p < deg; ++p) need[p] = !L.recv_pos[p].empty();
        if (!ready(need)) return;
        for (int p = 0; p < deg; ++p) {
          if (!need[p]) continue;
          const BitString f = pop(p);
          BitReader r(f);
          for (int pos : L.recv_pos[p]) {
            ev_vals_[pos] = static_cast<int>(
                r.take(value_bits(inst, inst.events[v_].vbl[pos])));
          }
        }
        for (size_t i = 0; i < L.own_pos.size(); ++i) {
          if (L.own_pos[i] >= 0) ev_vals_[L.own_pos[i]] = own_vals_[i];
        }
        violated_ = inst.holds_on(v_, ev_vals_);
        vhist_.push_back(violated_);
        if (t_ == s_->cap) {
          done_ = true;
          state_ = State::kDone;
          return;
        }
        for (int p = 0; p < deg; ++p) {
          if (L.dep[p]) send_bit(p, violated_);
        }
        state_ = State::kWaitViolated;
      } else if (state_ == State::kWaitViolated) {
        std::vector<char> need(L.dep.begin(), L.dep.end());
        if (!ready(need)) return;
        in_i_ = violated_;
        for (int p = 0; p < deg; ++p) {
          if (!need[p]) continue;
          if (pop(p).bit(0) && s_->before(nb[p], v_)) in_i_ = false;
        }
        ihist_.push_back(in_i_);
        for (int p = 0; p < deg; ++p) {
          if (!L.recv_pos[p].empty()) send_bit(p, in_i_);
        }
        state_ = State::kWaitResample;
      } else if (state_ == State::kWaitResample) {
        std::vector<char> need(deg);
        for (int p = 0; p < deg; ++p) need[p] = !L.send_vars[p].empty();
        if (!ready(need)) return;
        std::vector<char> port_in_i(deg, 0);
        for (int p = 0; p < deg; ++p) {
          if (need[p]) port_in_i[p] = pop(p).bit(0);
        }
        std::vector<char> hit(L.own_pos.size(), 0);
        for (size_t i = 0; i < hit.size(); ++i) {
          hit[i] = L.own_pos[i] >= 0 && in_i_;
          for (int p : L.own_users[i]) hit[i] |= port_in_i[p];
        }
        resample_all(ctx, &hit);
        ++t_;
        state_ = State::kSendValues;
      } else {
        return;
      }
    }
  }

  const Shared* s_;
  int v_;
  LinkLayer link_;
  std::vector<std::deque<BitString>> queues_;
  std::vector<int> ev_vals_, own_vals_;
  std::vector<char> vhist_, ihist_;
  State state_ = State::kSendValues;
  int64_t t_ = 0;
  bool violated_ = false, in_i_ = false, done_ = false;
};

int64_t default_cap(const LllInstance& inst) {
  return 10 * log2_ceil(std::max(2, inst.size())) + 10;
}

CpsResult run_cps(const LllInstance& inst, const SimConfig& cfg, const CpsOptions& opts,
                  const std::vector<std::vector<uint64_t>>* tapes) {
  if (cfg.mode == Mode::kCongest && !inst.range_bounded()) {
    throw InstanceError("resampling in CONGEST needs a range-bounded instance; use LOCAL mode");
  }
  if (!opts.priority.empty() && static_cast<int>(opts.priority.size()) != inst.size()) {
    throw std::invalid_argument("priority vector size does not match the instance");
  }
  const int64_t cap = opts.iteration_cap >= 0 ? opts.iteration_cap : default_cap(inst);
  const Shared shared = build_shared(inst, opts.priority, cap, cfg.bandwidth());
  const ProgramFactory factory = [&](int v) { return std::make_unique<CpsProgram>(shared, v); };
  RunResult run = tapes ? run_with_tape(inst.graph, factory, cfg, *tapes)
                        : congestlab::run(inst.graph, factory, cfg);

  CpsResult r;
  r.assignment = Assignment::unset(inst);
  for (int v = 0; v < inst.size(); ++v) {
    const auto& p = run.program<CpsProgram>(v);
    const auto& vals = p.own_values();
    for (size_t i = 0; i < vals.size(); ++i) r.assignment.value[inst.owned[v][i]] = vals[i];
  }
  r.iterations = cap;
  for (int64_t t = 0; t <= cap; ++t) {
    CpsIteration it;
    for (int v = 0; v < inst.size(); ++v) {
      const auto& p = run.program<CpsProgram>(v);
      if (p.violated_history()[t]) it.violated.push_back(v);
      if (t < cap && p.resampled_history()[t]) it.resampled.push_back(v);
    }
    if (it.violated.empty()) {
      r.iterations = t;
      break;
    }
    if (t == cap) {
      r.violated = it.violated;
      break;
    }
    r.trace.push_back(std::move(it));
  }
  r.success = r.violated.empty();
  r.draws = std::move(run.draws);
  r.metrics = std::move(run.metrics);
  return r;
}

}  // namespace

int64_t tape_range(const LllInstance& inst, int v) {
  int64_t l = 1;
  for (int x : inst.owned[v]) {
    l = std::lcm(l, static_cast<int64_t>(inst.variables[x].range));
    if (l > (int64_t{1} << 31)) throw InstanceError("tape range of a node exceeds 2^31");
  }
  return l;
}

CpsResult cps_solve(const LllInstance& inst, const SimConfig& cfg, const CpsOptions& opts) {
  return run_cps(inst, cfg, opts, nullptr);
}

CpsResult cps_solve_with_tape(const LllInstance& inst, const SimConfig& cfg,
                              const CpsOptions& opts,
                              const std::vector<std::vector<uint64_t>>& tapes) {
  return run_cps(inst, cfg, opts, &tapes);
}

CpsSimulation simulate_cps(const LllInstance& inst, int64_t iterations, const TapeFn& draw,
                           const std::vector<int64_t>& priority) {
  const int n = inst.size();
  auto before = [&](int a, int b) {
    if (!priority.empty()) return priority[a] < priority[b];
    return inst.graph.id(a) < inst.graph.id(b);
  };
  CpsSimulation s;
  s.values.assign(inst.variables.size(), 0);
  s.draws.assign(n, 0);
  std::vector<int64_t> range(n);
  for (int v = 0; v < n; ++v) {
    range[v] = tape_range(inst, v);
    for (int x : inst.owned[v]) {
      s.values[x] = static_cast<int>(draw(v, s.draws[v]++) % inst.variables[x].range);
    }
  }
  std::vector<char> bad(n), in_i(n);
  std::vector<int> vals;
  auto evaluate = [&] {
    s.violated.clear();
    for (int e = 0; e < n; ++e) {
      const auto& vbl = inst.events[e].vbl;
      vals.resize(vbl.size());
      for (size_t i = 0; i < vbl.size(); ++i) vals[i] = s.values[vbl[i]];
      bad[e] = inst.holds_on(e, vals);
      if (bad[e]) s.violated.push_back(e);
    }
  };
  evaluate();
  for (int64_t t = 0; t < iterations && !s.violated.empty(); ++t) {
    ++s.iterations;
    for (int e = 0; e < n; ++e) {
      in_i[e] = bad[e];
      for (int f : inst.dependency[e]) {
        if (bad[f] && before(f, e)) in_i[e] = 0;
      }
    }
    for (int v = 0; v < n; ++v) {
      for (int x : inst.owned[v]) {
        bool hit = false;
        for (int e : inst.var_events[x]) hit |= in_i[e] != 0;
        if (hit) s.values[x] = static_cast<int>(draw(v, s.draws[v]++) % inst.variables[x].range);
      }
    }
    evaluate();
  }
  return s;
}

bool trace_consistent(const LllInstance& inst, const CpsResult& r,
                      const std::vector<int64_t>& priority) {
  auto before = [&](int a, int b) {
    if (!priority.empty()) return priority[a] < priority[b];
    return inst.graph.id(a) < inst.graph.id(b);
  };
  for (const auto& it : r.trace) {
    std::vector<char> bad(inst.size(), 0);
    for (int e : it.violated) bad[e] = 1;
    std::vector<int> expect;
    for (int e : it.violated) {
      bool min = true;
      for (int f : inst.dependency[e]) min &= !(bad[f] && before(f, e));
      if (min) expect.push_back(e);
    }
    if (expect != it.resampled) return false;
  }
  return true;
}

}  // namespace congestlab
