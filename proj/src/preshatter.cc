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


#include "congestlab/preshatter.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <numeric>

#include <gmpxx.h>

#include "congestlab/links.h"

namespace congestlab {
namespace {

// ---- distance-2 coloring ----

struct ColorStep {
  enum class Kind { kIds, kLinial, kAdditive } kind;
  uint64_t q = 0;
  int k = 0;
  int cbits = 0;  // width of a color announced in this step
};

bool is_prime(uint64_t x) {
  if (x < 2) return false;
  for (uint64_t f = 2; f * f <= x; ++f) {
    if (x % f == 0) return false;
  }
  return true;
}

uint64_t next_prime(uint64_t x) {
  while (!is_prime(x)) ++x;
  return x;
}

// Smallest r with r^e >= m.
uint64_t int_root_ceil(const mpz_class& m, int e) {
  mpz_class r;
  mpz_root(r.get_mpz_t(), m.get_mpz_t(), e);
  mpz_class pw;
  mpz_pow_ui(pw.get_mpz_t(), r.get_mpz_t(), e);
  if (pw < m) r += 1;
  return r.get_ui();
}

// Linial steps while they shrink the palette, then q additive steps where
// q is a prime above 2D with q^2 covering the palette. Colors (a, b) with
// a != 0 move b += a until b is free in the h²-neighborhood; a = 0 is final.
std::vector<ColorStep> color_schedule(int id_bits, int64_t degree_bound) {
  std::vector<ColorStep> steps;
  steps.push_back({ColorStep::Kind::kIds, 0, 0, id_bits});
  mpz_class m = mpz_class(1) << id_bits;
  while (true) {
    uint64_t best_q = 0;
    int best_k = 0;
    for (int k = 1; k <= 64; ++k) {
      const uint64_t floor_q = static_cast<uint64_t>(k) * degree_bound + 1;
      const uint64_t q = next_prime(std::max(floor_q, int_root_ceil(m, k + 1)));
      if (best_q == 0 || q < best_q) {
        best_q = q;
        best_k = k;
      }
      if (floor_q > best_q) break;
    }
    const mpz_class next = mpz_class(best_q) * best_q;
    if (next >= m) break;
    m = next;
    steps.push_back({ColorStep::Kind::kLinial, best_q, best_k, bits_for(m.get_ui())});
  }
  const uint64_t q = next_prime(std::max<uint64_t>(2 * degree_bound + 1, int_root_ceil(m, 2)));
  for (uint64_t i = 0; i < q; ++i) steps.push_back({ColorStep::Kind::kAdditive, q, 0, 1});
  return steps;
}

struct ColorShared {
  std::vector<ColorStep> steps;
  std::vector<int64_t> phase_rounds;  // two entries per step
  int max_deg;
  int jbits;
};

std::vector<uint64_t> poly_digits(const Identifier& color, uint64_t q, int k) {
  Identifier c = color;
  std::vector<uint64_t> digits(k + 1);
  for (auto& d : digits) d = c.divmod_small(q);
  return digits;
}

uint64_t poly_eval(const std::vector<uint64_t>& digits, uint64_t q, uint64_t a) {
  uint64_t v = 0;
  for (size_t i = digits.size(); i-- > 0;) v = (v * a + digits[i]) % q;
  return v;
}

// Every step has two phases of precomputed length: announce the own change,
// then relay the neighbors' changes as (port, payload) entries.
class Distance2Program : public NodeProgram {
 public:
  explicit Distance2Program(const ColorShared& s) : s_(&s) {}

  void on_round(NodeContext& ctx, int64_t round, const Inbox& in, Outbox& out) override {
    if (round == 0) {
      deg_ = ctx.degree();
      one_.resize(deg_);
      two_.resize(deg_);
      self_.assign(deg_, -1);
      own_id_ = ctx.id();
      begin_phase();
    } else {
      link_->receive(in, [&](int port, int, BitString& f) { frames_[port].push_back(f); });
      if (--left_ == 0) end_phase();
    }
    if (link_) link_->flush(out, budget_);
  }
  bool finished() const override { return step_ == s_->steps.size(); }
  int color() const { return static_cast<int>(b_); }

  void set_budget(int64_t b) { budget_ = b; }

 private:
  struct Pair {
    uint64_t a = 0, b = 0;
  };

  const ColorStep& step() const { return s_->steps[step_]; }
  int payload_bits() const { return step().kind == ColorStep::Kind::kAdditive ? 0 : step().cbits; }

  template <class F>
  void for_each_h2(F&& f) const {
    for (int p = 0; p < deg_; ++p) {
      f(one_[p]);
      for (size_t j = 0; j < two_[p].size(); ++j) {
        if (static_cast<int>(j) != self_[p]) f(two_[p][j]);
      }
    }
  }

  // Returns whether this node announces a change in the current step.
  bool decide() {
    const ColorStep& st = step();
    switch (st.kind) {
      case ColorStep::Kind::kIds:
        color_ = own_id_;
        return true;
      case ColorStep::Kind::kLinial: {
        std::vector<char> blocked(st.q, 0);
        std::vector<uint64_t> mine(st.q);
        const auto own = poly_digits(color_, st.q, st.k);
        for (uint64_t a = 0; a < st.q; ++a) mine[a] = poly_eval(own, st.q, a);
        for_each_h2([&](const Identifier& c) {
          const auto digits = poly_digits(c, st.q, st.k);
          for (uint64_t a = 0; a < st.q; ++a) {
            if (!blocked[a] && poly_eval(digits, st.q, a) == mine[a]) blocked[a] = 1;
          }
        });
        for (uint64_t a = 0; a < st.q; ++a) {
          if (!blocked[a]) {
            color_ = Identifier(a * st.q + mine[a]);
            return true;
          }
        }
        throw EngineError("distance-2 coloring: no free evaluation point");
      }
      case ColorStep::Kind::kAdditive: {
        if (a_ == 0) return false;
        bool free = true;
        for (const Pair& u : pairs_) free &= u.b != b_;
        return free;
      }
    }
    return false;
  }

  // Links are idle between phases, so one per frame width is reused.
  void use_link(int width) {
    auto it = links_.find(width);
    if (it == links_.end()) {
      it = links_.emplace(width, LinkLayer(std::vector<int>(deg_, 1),
                                           FrameFormat::fixed_width(width))).first;
    }
    link_ = &it->second;
  }

  void begin_phase() {
    if (step_ == s_->steps.size()) return;
    left_ = s_->phase_rounds[2 * step_ + phase_];
    for (auto& f : frames_) f.clear();
    frames_.resize(deg_);
    if (phase_ == 0) {
      if (step_ > 0 && s_->steps[step_ - 1].kind != ColorStep::Kind::kAdditive &&
          step().kind == ColorStep::Kind::kAdditive) {
        to_pairs();
      }
      changed_ = decide();
      use_link(std::max(1, payload_bits()));
      if (changed_) {
        for (int p = 0; p < deg_; ++p) {
          BitString f;
          if (payload_bits() > 0) {
            color_.write(f, payload_bits());
          } else {
            f.push_bool(true);
          }
          link_->enqueue(p, 0, f);
        }
      }
    } else {
      use_link(s_->jbits + payload_bits());
      for (int p = 0; p < deg_; ++p) {
        for (int c : one_changed_) {
          BitString f;
          f.push(c, s_->jbits);
          if (payload_bits() > 0) one_[c].write(f, payload_bits());
          link_->enqueue(p, 0, f);
        }
      }
    }
  }

  void end_phase() {
    const ColorStep& st = step();
    const bool additive = st.kind == ColorStep::Kind::kAdditive;
    if (phase_ == 0) {
      one_changed_.clear();
      for (int p = 0; p < deg_; ++p) {
        if (frames_[p].empty()) continue;
        one_changed_.push_back(p);
        if (!additive) {
          BitReader r(frames_[p].front());
          one_[p] = Identifier::read(r, payload_bits());
        }
      }
      phase_ = 1;
      begin_phase();
      return;
    }
    std::vector<std::vector<char>> two_changed(deg_);
    for (int p = 0; p < deg_; ++p) {
      two_changed[p].assign(two_[p].size(), 0);
      for (const BitString& f : frames_[p]) {
        BitReader r(f);
        const int j = static_cast<int>(r.take(s_->jbits));
        if (additive) {
          if (j < static_cast<int>(two_changed[p].size())) two_changed[p][j] = 1;
          continue;
        }
        const Identifier c = Identifier::read(r, payload_bits());
        if (j >= static_cast<int>(two_[p].size())) two_[p].resize(j + 1);
        two_[p][j] = c;
        if (st.kind == ColorStep::Kind::kIds && c == own_id_) self_[p] = j;
      }
    }
    if (additive) advance_pairs(two_changed);
    phase_ = 0;
    ++step_;
    begin_phase();
  }

  // Switches from Linial colors to (a, b) pairs, flattening the h²
  // neighborhood into pairs_ (slot order: port, then relayed entries).
  void to_pairs() {
    const uint64_t q = step().q;
    auto split = [q](const Identifier& c) { return Pair{c.low64() / q, c.low64() % q}; };
    a_ = color_.low64() / q;
    b_ = color_.low64() % q;
    pairs_.clear();
    slot_.assign(deg_, {});
    for (int p = 0; p < deg_; ++p) {
      one_slot_.push_back(static_cast<int>(pairs_.size()));
      pairs_.push_back(split(one_[p]));
      slot_[p].assign(two_[p].size(), -1);
      for (size_t j = 0; j < two_[p].size(); ++j) {
        if (static_cast<int>(j) == self_[p]) continue;
        slot_[p][j] = static_cast<int>(pairs_.size());
        pairs_.push_back(split(two_[p][j]));
      }
    }
  }

  void advance_pairs(const std::vector<std::vector<char>>& two_changed) {
    const uint64_t q = step().q;
    std::vector<char> fin(pairs_.size(), 0);
    for (int p : one_changed_) fin[one_slot_[p]] = 1;
    for (int p = 0; p < deg_; ++p) {
      for (size_t j = 0; j < two_changed[p].size(); ++j) {
        if (two_changed[p][j] && slot_[p][j] >= 0) fin[slot_[p][j]] = 1;
      }
    }
    for (size_t i = 0; i < pairs_.size(); ++i) {
      Pair& u = pairs_[i];
      if (fin[i]) {
        u.a = 0;
      } else if (u.a != 0) {
        u.b = (u.b + u.a) % q;
      }
    }
    if (changed_) {
      a_ = 0;
    } else if (a_ != 0) {
      b_ = (b_ + a_) % q;
    }
  }

  const ColorShared* s_;
  int64_t budget_ = 0;
  int deg_ = 0;
  std::map<int, LinkLayer> links_;
  LinkLayer* link_ = nullptr;
  std::vector<std::vector<BitString>> frames_;
  std::vector<Identifier> one_;
  std::vector<std::vector<Identifier>> two_;
  std::vector<int> self_;
  std::vector<int> one_changed_;
  Identifier own_id_, color_;
  std::vector<Pair> pairs_;
  std::vector<int> one_slot_;
  std::vector<std::vector<int>> slot_;
  uint64_t a_ = 0, b_ = 0;
  bool changed_ = false;
  size_t step_ = 0;
  int phase_ = 0;
  int64_t left_ = 0;
};

// ---- pre-shattering ----

bool reaches_threshold(const Rational& q, const Rational& p) { return q > 0 && q * q >= p; }

std::vector<int> event_values(const LllInstance& inst, int e, const Assignment& a) {
  std::vector<int> vals;
  for (int x : inst.events[e].vbl) vals.push_back(a.value[x]);
  return vals;
}

bool has_unset(const LllInstance& inst, int e, const Assignment& a) {
  for (int x : inst.events[e].vbl) {
    if (a.value[x] == kUnset) return true;
  }
  return false;
}

ResidualComponent build_residual(const LllInstance& inst, const Assignment& a,
                                 std::vector<int> events, int64_t budget) {
  ResidualComponent rc;
  std::sort(events.begin(), events.end());
  rc.events = events;
  std::vector<int> local(inst.size(), -1);
  for (size_t i = 0; i < events.size(); ++i) local[events[i]] = static_cast<int>(i);
  for (int e : events) {
    for (int x : inst.events[e].vbl) {
      if (a.value[x] == kUnset) rc.variables.push_back(x);
    }
  }
  std::sort(rc.variables.begin(), rc.variables.end());
  rc.variables.erase(std::unique(rc.variables.begin(), rc.variables.end()), rc.variables.end());
  std::vector<int> var_local(inst.variables.size(), -1);
  for (size_t i = 0; i < rc.variables.size(); ++i) var_local[rc.variables[i]] = static_cast<int>(i);

  LllInstance& sub = rc.instance;
  sub.graph = inst.graph.induced(events);
  for (int x : rc.variables) {
    int owner = local[inst.variables[x].owner];
    if (owner < 0) owner = local[inst.var_events[x].front()];
    sub.variables.push_back({owner, inst.variables[x].range});
  }
  sub.events.resize(events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    const int e = events[i];
    Event& ev = sub.events[i];
    std::vector<int> vals = event_values(inst, e, a);
    std::vector<int> free_pos;
    for (size_t j = 0; j < vals.size(); ++j) {
      if (vals[j] == kUnset) {
        free_pos.push_back(static_cast<int>(j));
        ev.vbl.push_back(var_local[inst.events[e].vbl[j]]);
      }
    }
    double size = 1;
    for (int j : free_pos) size *= inst.variables[inst.events[e].vbl[j]].range;
    if (size > static_cast<double>(budget)) {
      throw BudgetExceeded("residual event " + std::to_string(e), size, budget);
    }
    for (int j : free_pos) vals[j] = 0;
    while (true) {
      ev.table.push_back(inst.holds_on(e, vals));
      size_t j = 0;
      for (; j < free_pos.size(); ++j) {
        int& v = vals[free_pos[j]];
        if (++v < inst.variables[inst.events[e].vbl[free_pos[j]]].range) break;
        v = 0;
      }
      if (j == free_pos.size()) break;
    }
  }
  sub.finalize();
  return rc;
}

}  // namespace

Graph dependency_graph(const LllInstance& inst) {
  std::vector<Edge> edges;
  for (int e = 0; e < inst.size(); ++e) {
    for (int f : inst.dependency[e]) {
      if (e < f) edges.emplace_back(e, f);
    }
  }
  return Graph::from_edges(inst.size(), edges, inst.graph.ids(), inst.graph.id_bits());
}

Distance2Coloring distance2_coloring(const Graph& h, const SimConfig& cfg) {
  const int64_t bound = static_cast<int64_t>(h.max_degree()) * h.max_degree();
  ColorShared s;
  s.steps = color_schedule(h.id_bits(), bound);
  s.max_deg = h.max_degree();
  s.jbits = std::max(1, bits_for(s.max_deg));
  const int64_t b = cfg.bandwidth();
  auto rounds_for = [&](int64_t bits) { return std::max<int64_t>(1, (bits + b - 1) / b); };
  for (const auto& st : s.steps) {
    const int payload = st.kind == ColorStep::Kind::kAdditive ? 0 : st.cbits;
    s.phase_rounds.push_back(rounds_for(std::max(1, payload)));
    s.phase_rounds.push_back(rounds_for(int64_t{s.max_deg} * (s.jbits + payload)));
  }
  RunResult run = congestlab::run(
      h,
      [&](int) {
        auto p = std::make_unique<Distance2Program>(s);
        p->set_budget(b);
        return p;
      },
      cfg);
  Distance2Coloring out;
  for (const auto& st : s.steps) {
    out.linial_steps += st.kind == ColorStep::Kind::kLinial;
    if (st.kind == ColorStep::Kind::kAdditive) {
      ++out.reduction_steps;
      out.palette = static_cast<int>(st.q);
    }
  }
  for (int v = 0; v < h.size(); ++v) out.color.push_back(run.program<Distance2Program>(v).color());
  out.metrics = std::move(run.metrics);
  return out;
}

bool is_distance2_coloring(const Graph& h, const std::vector<int>& color) {
  for (int v = 0; v < h.size(); ++v) {
    std::vector<int> seen = {color[v]};
    for (int u : h.neighbors(v)) seen.push_back(color[u]);
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return false;
  }
  return true;
}

PreshatterResult preshatter(const LllInstance& inst, const SimConfig& cfg, int64_t budget) {
  PreshatterResult r;
  const int n = inst.size();
  r.assignment = Assignment::unset(inst);
  r.p = 0;
  for (int e = 0; e < n; ++e) r.p = std::max(r.p, event_probability(inst, e, budget));

  const Graph h = dependency_graph(inst);
  r.coloring = distance2_coloring(h, cfg);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return r.coloring.color[a] < r.coloring.color[b]; });

  Assignment& a = r.assignment;
  std::vector<int64_t> drawn(n, 0);
  for (int e : order) {
    std::vector<int> sampled;
    for (int x : inst.events[e].vbl) {
      if (a.value[x] != kUnset || a.frozen[x]) continue;
      a.value[x] = static_cast<int>(
          counter_draw(cfg.seed, e, drawn[e]++, inst.variables[x].range));
      sampled.push_back(x);
    }
    if (sampled.empty()) continue;
    std::vector<int> triggered;
    std::vector<int> around = inst.dependency[e];
    around.insert(std::lower_bound(around.begin(), around.end(), e), e);
    for (int f : around) {
      Rational q = event_probability(inst, f, a, budget);
      if (reaches_threshold(q, r.p)) {
        triggered.push_back(f);
        r.freezes.push_back({e, f, q});
      }
    }
    if (triggered.empty()) continue;
    for (int x : sampled) a.value[x] = kUnset;
    for (int f : triggered) {
      for (int x : inst.events[f].vbl) {
        if (a.value[x] == kUnset) a.frozen[x] = 1;
      }
    }
  }
  r.class_rounds = int64_t{kRoundsPerClass} * r.coloring.palette;
  r.rounds = r.coloring.metrics.rounds + r.class_rounds;

  const auto comps = components_under(h, [&](int e) { return has_unset(inst, e, a); }, 1);
  r.residual_p = 0;
  for (const auto& comp : comps) {
    r.residual.push_back(build_residual(inst, a, comp, budget));
    const LllInstance& sub = r.residual.back().instance;
    r.residual_d = std::max(r.residual_d, sub.d);
    for (int e = 0; e < sub.size(); ++e) {
      r.residual_p = std::max(r.residual_p, event_probability(sub, e, budget));
    }
  }
  const Rational d1 = inst.d + 1;
  const bool below = r.residual.empty() || (r.p == 0 ? r.residual_p == 0
                                                     : r.residual_p * r.residual_p < r.p);
  r.residual_ok = below && r.p * d1 * d1 < 1;
  return r;
}

std::string audit_preshatter(const LllInstance& inst, const PreshatterResult& r, int64_t budget) {
  const Assignment& a = r.assignment;
  for (const auto& f : r.freezes) {
    if (!reaches_threshold(f.q, r.p)) {
      return "freeze of event " + std::to_string(f.event) + " below the threshold";
    }
  }
  for (size_t x = 0; x < a.value.size(); ++x) {
    if (a.frozen[x] && a.value[x] != kUnset) {
      return "variable " + std::to_string(x) + " is frozen but set";
    }
  }
  std::vector<char> bad(inst.size(), 0);
  for (int e = 0; e < inst.size(); ++e) {
    const Rational q = event_probability(inst, e, a, budget);
    if (has_unset(inst, e, a)) {
      bad[e] = 1;
      if (reaches_threshold(q, r.p)) {
        return "event " + std::to_string(e) + " has unset variables at or above the threshold";
      }
    } else if (q != 0) {
      return "fully set event " + std::to_string(e) + " holds";
    }
  }
  const auto comps = components_under(dependency_graph(inst), [&](int e) { return bad[e]; }, 1);
  if (comps.size() != r.residual.size()) return "residual component count mismatch";
  for (size_t i = 0; i < comps.size(); ++i) {
    std::vector<int> c = comps[i];
    std::sort(c.begin(), c.end());
    if (c != r.residual[i].events) return "residual component " + std::to_string(i) + " differs";
  }
  return "";
}

ShatteringReport shattering_diagnostics(const LllInstance& inst, const PreshatterResult& r,
                                        int c2) {
  ShatteringReport rep;
  const Graph h = dependency_graph(inst);
  const int n = inst.size();
  std::vector<char> in_b(n, 0);
  std::vector<int> members;
  for (const auto& rc : r.residual) {
    rep.max_h_component = std::max(rep.max_h_component, static_cast<int>(rc.events.size()));
    for (int e : rc.events) {
      in_b[e] = 1;
      members.push_back(e);
    }
  }
  rep.bad = static_cast<int>(members.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const int lo = 2 * c2 + 1, hi = 4 * c2 + 2;
  for (int b : members) {
    const int src[] = {b};
    const auto dist = bounded_bfs(h, src, hi);
    for (int u : members) {
      if (dist[u] >= lo && dist[u] <= hi) parent[find(u)] = find(b);
    }
  }
  std::vector<int> size(n, 0);
  for (int b : members) rep.max_z_component = std::max(rep.max_z_component, ++size[find(b)]);
  const double delta = std::max(2, h.max_degree());
  rep.log_delta_n = std::log(std::max(n, 1)) / std::log(delta);
  rep.p2_bound = rep.log_delta_n * std::pow(delta, 2 * c2);
  rep.p1_ok = rep.max_z_component == 0 || rep.max_z_component < rep.log_delta_n;
  rep.p2_ok = rep.max_h_component <= rep.p2_bound;
  return rep;
}

}  // namespace congestlab
