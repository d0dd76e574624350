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


#include "congestlab/carving.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>

#include "congestlab/aggregate.h"
#include "congestlab/coloring.h"
#include "congestlab/links.h"

namespace congestlab {

int log43_ceil(int64_t n) {
  if (n <= 1) return 0;
  // (4/3)^L is never an integer for L >= 1, so rounding cannot land on a tie.
  long double r = static_cast<long double>(n);
  int l = 0;
  while (r > 1.0L) {
    r = r * 3.0L / 4.0L;
    ++l;
  }
  return l;
}

CarveParamsE CarveParamsE::from(int64_t n, int64_t x, int k) {
  if (x < 1 || k < 1) throw std::invalid_argument("carve: x and k must be >= 1");
  CarveParamsE p;
  p.phases = log43_ceil(n) + 1;
  p.proposal_parameter = x * p.phases;
  p.steps = (p.proposal_parameter + 1) * std::max(1, log2_ceil(n));
  p.beta_bound = int64_t{k} * p.phases * p.steps;
  p.kappa_bound = 2 * int64_t{p.phases} * std::min<int64_t>(k, p.steps);
  return p;
}

CarveParamsC CarveParamsC::from(int64_t n, int64_t x, int64_t s_size) {
  if (x < 1) throw std::invalid_argument("carve: x must be >= 1");
  CarveParamsC p;
  p.levels = log43_ceil(n) + 1;
  p.phases = 2 * p.levels + 2 * std::max(1, log2_ceil(n));
  p.pay_per_kill = 4 * int64_t{p.phases} * x;
  p.steps = 2 * p.pay_per_kill;
  p.total_tokens_bound = 4 * int64_t{p.phases} * s_size;
  p.beta_bound = int64_t{p.phases} * p.steps;
  p.kappa_bound = 4 * int64_t{p.phases};
  return p;
}

bool component_bound_holds(int64_t comp, int phase, int64_t s) {
  if (comp <= 1) return true;
  // comp * 4^phase <= 3^phase * s, stopping once 3^phase * s < 4^phase.
  __int128 lhs = comp, rhs = s;
  for (int i = 0; i < phase; ++i) {
    lhs *= 4;
    rhs *= 3;
    if (lhs > rhs) return false;
  }
  return lhs <= rhs;
}

nlohmann::json phase_stats_to_json(const PhaseStats& s) {
  return {{"phase", s.phase},
          {"clusters", s.clusters},
          {"max_component", s.max_component},
          {"component_bound_ok", s.component_bound_ok},
          {"dead", s.dead},
          {"steiner_radius", s.steiner_radius},
          {"steiner_depth", s.steiner_depth},
          {"max_depth_growth", s.max_depth_growth},
          {"edge_congestion", s.edge_congestion},
          {"steps_run", s.steps_run},
          {"steps_skipped", s.steps_skipped},
          {"rounds", s.rounds},
          {"tokens_created", s.tokens_created},
          {"top_level_clusters", s.top_level_clusters},
          {"potential_violations", s.potential_violations}};
}

namespace {

// Mutable cluster state shared by both carving variants. Node membership and
// trees live in `cc`; per-cluster attributes are kept by the callers and
// remapped through compact().
struct Carver {
  Carver(const Graph& graph, const std::vector<int>& s, const SimConfig& c)
      : g(graph), cfg(c), owner(graph.size(), -1), dead(graph.size(), 0) {
    std::vector<int> nodes = s;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (int v : nodes) {
      if (v < 0 || v >= g.size()) throw std::invalid_argument("carve: node out of range");
    }
    s_size = static_cast<int64_t>(nodes.size());
    cc = ClusterCollection::singletons(g, nodes);
    owner = cc.owner(g.size());
  }

  void leave(int v) {
    auto& m = cc.clusters[owner[v]].members;
    m.erase(std::lower_bound(m.begin(), m.end(), v));
    owner[v] = -1;
  }
  void kill(int v) {
    leave(v);
    dead[v] = 1;
  }
  void join(int v, int c, int parent) {
    auto& m = cc.clusters[c].members;
    m.insert(std::lower_bound(m.begin(), m.end(), v), v);
    if (parent >= 0) cc.clusters[c].tree.push_back({v, parent});
    owner[v] = c;
  }

  // Drops tree branches without members and clusters without members.
  // Returns the old-to-new cluster index map (-1 for dropped clusters).
  std::vector<int> compact() {
    const ClusterViews views = build_views(g, cc);
    TreeIndexing idx = assign_cluster_indices(g, cc, cfg, &views);
    metrics.absorb(idx.metrics);
    const int p = static_cast<int>(cc.clusters.size());
    for (int v = 0; v < g.size(); ++v) {
      for (size_t mi = 0; mi < views.at[v].size(); ++mi) {
        const auto& tm = views.at[v][mi];
        if (tm.parent_port >= 0 && idx.local[v][mi].subtree == 0) {
          pruned.push_back({tm.cluster, v});
        }
      }
    }
    std::sort(pruned.begin(), pruned.end());
    std::vector<int> remap(p, -1);
    ClusterCollection next;
    next.id_bits = cc.id_bits;
    for (int c = 0; c < p; ++c) {
      Cluster& cl = cc.clusters[c];
      if (cl.members.empty()) continue;
      auto& t = cl.tree;
      t.erase(std::remove_if(t.begin(), t.end(),
                             [&](const SteinerEdge& e) {
                               return std::binary_search(
                                   pruned.begin(), pruned.end(),
                                   std::pair<int, int>{c, e.child});
                             }),
              t.end());
      remap[c] = static_cast<int>(next.clusters.size());
      next.clusters.push_back(std::move(cl));
    }
    pruned.clear();
    cc = std::move(next);
    owner = cc.owner(g.size());
    return remap;
  }

  int64_t dead_count() const {
    return std::count(dead.begin(), dead.end(), 1);
  }

  std::vector<int> dead_list() const {
    std::vector<int> out;
    for (int v = 0; v < g.size(); ++v) {
      if (dead[v]) out.push_back(v);
    }
    return out;
  }

  void fill_stats(PhaseStats& st, int phase, int k) const {
    st.phase = phase;
    st.clusters = static_cast<int>(cc.clusters.size());
    st.max_component = 0;
    for (const auto& comp : cluster_components(g, cc, k)) {
      st.max_component = std::max(st.max_component, static_cast<int>(comp.size()));
    }
    st.component_bound_ok = component_bound_holds(st.max_component, phase, s_size);
    st.dead = dead_count();
    st.steiner_radius = 0;
    st.steiner_depth = 0;
    for (const auto& c : cc.clusters) {
      st.steiner_radius = std::max(st.steiner_radius, steiner_diameter(c));
      st.steiner_depth = std::max(st.steiner_depth, steiner_depth(c));
    }
    st.edge_congestion = build_views(g, cc).max_edge_trees;
    st.rounds = metrics.rounds;
  }

  const Graph& g;
  SimConfig cfg;
  ClusterCollection cc;
  std::vector<int> owner;
  std::vector<char> dead;
  int64_t s_size = 0;
  RoundMetrics metrics;
  std::vector<std::pair<int, int>> pruned;  // (cluster, child) edges to drop
};

template <class T>
void remap_vector(std::vector<T>& v, const std::vector<int>& remap, int size) {
  std::vector<T> out(size);
  for (size_t c = 0; c < remap.size(); ++c) {
    if (remap[c] >= 0) out[remap[c]] = v[c];
  }
  v = std::move(out);
}

// ---------------------------------------------------------------------------
// Distance-k carving.

enum class Role { kRoot, kBlocked, kForwarder };

// One growth step: members of active blue clusters flood tokens up to k hops,
// non-blue nodes adopt the first token they see (ties by cluster id, then the
// sender's id) and echo back the number of red proposers below them together
// with a flag telling whether the branch must be attached to the tree.
class GrowProgram : public NodeProgram {
 public:
  GrowProgram(int degree, Role role, bool proposer,
              std::optional<Identifier> own, std::vector<Identifier> on_tree,
              int k, int id_bits, int counter_bits, int count_bits,
              int64_t budget)
      : role_(role),
        proposer_(proposer),
        own_(std::move(own)),
        on_tree_(std::move(on_tree)),
        k_(k),
        id_bits_(id_bits),
        counter_bits_(counter_bits),
        count_bits_(count_bits),
        budget_(budget),
        link_(std::vector<int>(degree, 1),
              FrameFormat::fixed_width(
                  1 + std::max(id_bits + counter_bits, 2 + count_bits))) {}

  void on_round(NodeContext& ctx, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0 && role_ == Role::kRoot) {
      for (int p = 0; p < ctx.degree(); ++p) send_token(p, *own_, k_ - 1);
      pending_ = ctx.degree();
    }
    struct Arrival {
      int port;
      Identifier id;
      int remaining;
    };
    std::vector<Arrival> arrivals;
    link_.receive(in, [&](int port, int, BitString& f) {
      BitReader r(f);
      if (!r.take_bool()) {
        const Identifier id = Identifier::read(r, id_bits_);
        const int rem = counter_bits_ > 0 ? static_cast<int>(r.take(counter_bits_)) : 0;
        arrivals.push_back({port, id, rem});
        return;
      }
      const bool adopted = r.take_bool();
      const int64_t count = count_bits_ > 0 ? static_cast<int64_t>(r.take(count_bits_)) : 0;
      const bool need = r.take_bool();
      --pending_;
      if (adopted) {
        count_ += count;
        child_need_ = child_need_ || need;
        children_.push_back(port);
      }
    });
    if (!arrivals.empty()) {
      int best = -1;
      if (role_ == Role::kForwarder && !adopted_) {
        for (int i = 0; i < static_cast<int>(arrivals.size()); ++i) {
          const auto& a = arrivals[i];
          if (best < 0 || a.id < arrivals[best].id ||
              (a.id == arrivals[best].id &&
               ctx.neighbor_id(a.port) < ctx.neighbor_id(arrivals[best].port))) {
            best = i;
          }
        }
      }
      for (int i = 0; i < static_cast<int>(arrivals.size()); ++i) {
        if (i != best) send_reply(arrivals[i].port, false, 0, false);
      }
      if (best >= 0) {
        adopted_ = true;
        token_ = arrivals[best].id;
        parent_port_ = arrivals[best].port;
        if (arrivals[best].remaining > 0) {
          for (int p = 0; p < ctx.degree(); ++p) {
            if (p == parent_port_) continue;
            send_token(p, token_, arrivals[best].remaining - 1);
            ++pending_;
          }
        }
      }
    }
    if (adopted_ && !replied_ && pending_ == 0) {
      replied_ = true;
      need_ = (proposer_ || child_need_) && !on_tree(token_);
      send_reply(parent_port_, true, count_ + (proposer_ ? 1 : 0), need_);
    }
    link_.flush(out, budget_);
  }

  bool finished() const override {
    return pending_ == 0 && (!adopted_ || replied_) && link_.idle();
  }

  bool adopted() const { return adopted_; }
  const Identifier& token() const { return token_; }
  int parent_port() const { return parent_port_; }
  bool need() const { return need_; }
  int64_t count() const { return count_; }  // subtree proposers, roots only
  const std::vector<int>& children() const { return children_; }

 private:
  bool on_tree(const Identifier& id) const {
    return std::binary_search(on_tree_.begin(), on_tree_.end(), id);
  }
  void send_token(int port, const Identifier& id, int remaining) {
    BitString f;
    f.push_bool(false);
    id.write(f, id_bits_);
    if (counter_bits_ > 0) f.push(static_cast<uint64_t>(remaining), counter_bits_);
    pad(f);
    link_.enqueue(port, 0, f);
  }
  void send_reply(int port, bool adopted, int64_t count, bool need) {
    BitString f;
    f.push_bool(true);
    f.push_bool(adopted);
    if (count_bits_ > 0) f.push(static_cast<uint64_t>(count), count_bits_);
    f.push_bool(need);
    pad(f);
    link_.enqueue(port, 0, f);
  }
  void pad(BitString& f) const {
    const size_t w = 1 + std::max(id_bits_ + counter_bits_, 2 + count_bits_);
    while (f.size() < w) f.push_bool(false);
  }

  Role role_;
  bool proposer_;
  std::optional<Identifier> own_;
  std::vector<Identifier> on_tree_;  // sorted
  int k_, id_bits_, counter_bits_, count_bits_;
  int64_t budget_;
  LinkLayer link_;
  int pending_ = 0;
  bool adopted_ = false, replied_ = false, need_ = false, child_need_ = false;
  Identifier token_;
  int parent_port_ = -1;
  int64_t count_ = 0;
  std::vector<int> children_;
};

// Pushes each root's accept bit down the adoption trees of a GrowProgram run.
class DecisionProgram : public NodeProgram {
 public:
  DecisionProgram(const GrowProgram& grow, std::optional<bool> root_decision)
      : grow_(&grow), root_decision_(root_decision) {}

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0 && root_decision_) {
      decision_ = root_decision_;
      forward(out);
    }
    const int p = grow_->parent_port();
    if (grow_->adopted() && p >= 0 && in.has(p) && !decision_) {
      decision_ = in.from(p).bit(0);
      forward(out);
    }
  }
  bool finished() const override { return true; }
  std::optional<bool> decision() const { return decision_; }

 private:
  void forward(Outbox& out) {
    for (int c : grow_->children()) out.send(c).push_bool(*decision_);
  }
  const GrowProgram* grow_;
  std::optional<bool> root_decision_;
  std::optional<bool> decision_;
};

std::vector<Identifier> tree_ids(const ClusterViews& views,
                                 const ClusterCollection& cc, int v) {
  std::vector<Identifier> out;
  for (const auto& tm : views.at[v]) out.push_back(cc.clusters[tm.cluster].id);
  std::sort(out.begin(), out.end());
  return out;
}

int find_cluster(const ClusterCollection& cc, const Identifier& id) {
  for (int c = 0; c < static_cast<int>(cc.clusters.size()); ++c) {
    if (cc.clusters[c].id == id) return c;
  }
  throw std::logic_error("carve: unknown cluster " + id.to_string());
}

// ---------------------------------------------------------------------------
// Levels variant.

struct Key {
  Identifier id;
  int level = 0;
  int rank = 0;  // 0 blue, 1 red: red clusters propose to blue ones
  friend auto operator<=>(const Key& a, const Key& b) {
    if (a.level != b.level) return a.level <=> b.level;
    if (a.rank != b.rank) return a.rank <=> b.rank;
    return a.id <=> b.id;
  }
  friend bool operator==(const Key&, const Key&) = default;
  // Proposals only go to strictly smaller (level, color); the identifier
  // only breaks ties among eligible targets.
  bool below(const Key& o) const {
    return level != o.level ? level < o.level : rank < o.rank;
  }
};

// Every clustered node tells its neighbors its cluster key, then proposes to
// the neighboring cluster with the smallest key below its own (ties by port).
class ProposeProgram : public NodeProgram {
 public:
  ProposeProgram(int degree, std::optional<Key> own, int id_bits,
                 int level_bits, int64_t budget)
      : own_(std::move(own)),
        id_bits_(id_bits),
        level_bits_(level_bits),
        budget_(budget),
        width_(2 + id_bits + level_bits + 1),
        link_(std::vector<int>(degree, 1), FrameFormat::fixed_width(width_)),
        keys_(degree) {}

  void on_round(NodeContext& ctx, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0) {
      for (int p = 0; p < ctx.degree(); ++p) {
        BitString f;
        f.push_bool(false);
        f.push_bool(own_.has_value());
        if (own_) {
          own_->id.write(f, id_bits_);
          if (level_bits_ > 0) f.push(static_cast<uint64_t>(own_->level), level_bits_);
          f.push(static_cast<uint64_t>(own_->rank), 1);
        }
        while (f.size() < static_cast<size_t>(width_)) f.push_bool(false);
        link_.enqueue(p, 0, f);
      }
    }
    link_.receive(in, [&](int port, int, BitString& f) {
      BitReader r(f);
      if (r.take_bool()) {
        proposers_.push_back(port);
        return;
      }
      ++keys_seen_;
      if (!r.take_bool()) return;
      Key key;
      key.id = Identifier::read(r, id_bits_);
      key.level = level_bits_ > 0 ? static_cast<int>(r.take(level_bits_)) : 0;
      key.rank = static_cast<int>(r.take(1));
      keys_[port] = key;
    });
    if (!decided_ && keys_seen_ == ctx.degree()) {
      decided_ = true;
      if (own_) {
        for (int p = 0; p < ctx.degree(); ++p) {
          if (keys_[p] && keys_[p]->below(*own_) && (target_ < 0 || *keys_[p] < *keys_[target_])) {
            target_ = p;
          }
        }
      }
      if (target_ >= 0) {
        BitString f;
        f.push_bool(true);
        while (f.size() < static_cast<size_t>(width_)) f.push_bool(false);
        link_.enqueue(target_, 0, f);
      }
    }
    link_.flush(out, budget_);
  }

  bool finished() const override { return decided_ && link_.idle(); }

  int target_port() const { return target_; }
  const Key& target_key() const { return *keys_[target_]; }
  int64_t received() const { return static_cast<int64_t>(proposers_.size()); }
  const std::vector<int>& proposer_ports() const { return proposers_; }

 private:
  std::optional<Key> own_;
  int id_bits_, level_bits_;
  int64_t budget_;
  int width_;
  LinkLayer link_;
  std::vector<std::optional<Key>> keys_;
  int keys_seen_ = 0;
  bool decided_ = false;
  int target_ = -1;
  std::vector<int> proposers_;
};

// Members that received proposals answer each proposer with one bit.
class AnswerProgram : public NodeProgram {
 public:
  AnswerProgram(const ProposeProgram& prop, std::optional<bool> decision)
      : prop_(&prop), decision_(decision) {}

  void on_round(NodeContext& ctx, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0 && decision_) {
      for (int p : prop_->proposer_ports()) out.send(p).push_bool(*decision_);
    }
    const int t = prop_->target_port();
    if (t >= 0 && t < ctx.degree() && in.has(t)) answer_ = in.from(t).bit(0);
  }
  bool finished() const override { return true; }
  std::optional<bool> answer() const { return answer_; }

 private:
  const ProposeProgram* prop_;
  std::optional<bool> decision_;
  std::optional<bool> answer_;
};

}  // namespace

CarveResult carve_distance_k(const Graph& g, const std::vector<int>& s, int k,
                             int x, const SimConfig& cfg, int64_t n_bound) {
  const CarveParamsE params = CarveParamsE::from(n_bound > 0 ? n_bound : g.size(), x, k);
  Carver st(g, s, cfg);
  const int id_bits = st.cc.id_bits;
  const int counter_bits = bits_for(static_cast<uint64_t>(k));
  const int count_bits = std::max(1, bits_for(static_cast<uint64_t>(g.size()) + 1));
  std::vector<int64_t> size(st.cc.clusters.size(), 1);
  CarveResult result;

  for (int phase = 1; phase <= params.phases; ++phase) {
    PhaseStats ps;
    const int p = static_cast<int>(st.cc.clusters.size());
    std::vector<char> blue(p, 0), stalled(p, 0);
    if (p > 0) {
      ColoringResult col = color_red_blue(g, st.cc, k, cfg);
      st.metrics.absorb(col.metrics);
      std::vector<BitString> payload(p);
      for (int c = 0; c < p; ++c) {
        blue[c] = col.color[c] == Color::kBlue;
        payload[c].push_bool(blue[c]);
      }
      st.metrics.absorb(tree_broadcast(g, st.cc, cfg, payload, 1).metrics);
    }

    for (int64_t step = 1; step <= params.steps; ++step) {
      bool active = false;
      for (int c = 0; c < p; ++c) active = active || (blue[c] && !stalled[c]);
      if (!active) {
        ps.steps_skipped = params.steps - step + 1;
        break;
      }
      ++ps.steps_run;
      std::vector<int> depth_before(p);
      for (int c = 0; c < p; ++c) depth_before[c] = steiner_depth(st.cc.clusters[c]);

      const ClusterViews views = build_views(g, st.cc);
      auto role_of = [&](int v) {
        const int c = st.owner[v];
        if (c < 0 || !blue[c]) return Role::kForwarder;
        return stalled[c] ? Role::kBlocked : Role::kRoot;
      };
      RunResult grow = run(
          g,
          [&](int v) -> std::unique_ptr<NodeProgram> {
            const Role role = role_of(v);
            const int c = st.owner[v];
            std::optional<Identifier> own;
            if (role == Role::kRoot) own = st.cc.clusters[c].id;
            const bool proposer = c >= 0 && !blue[c];
            return std::make_unique<GrowProgram>(
                g.degree(v), role, proposer, own, tree_ids(views, st.cc, v), k,
                id_bits, counter_bits, count_bits, cfg.bandwidth());
          },
          cfg);
      st.metrics.absorb(grow.metrics);

      AggregateResult sum = tree_aggregate_at(
          g, st.cc, cfg, AggregateKind::kSumMod,
          [&](int v, int c) -> std::optional<uint64_t> {
            if (st.owner[v] != c || role_of(v) != Role::kRoot) return std::nullopt;
            return static_cast<uint64_t>(grow.program<GrowProgram>(v).count());
          },
          count_bits, 0, &views);
      st.metrics.absorb(sum.metrics);

      std::vector<char> accept(p, 0), active_at_start(p, 0);
      std::vector<BitString> payload(p);
      for (int c = 0; c < p; ++c) {
        if (blue[c] && !stalled[c]) {
          active_at_start[c] = 1;
          const auto proposals = static_cast<int64_t>(sum.value[c]);
          accept[c] = proposals > 0 && proposals * params.proposal_parameter >= size[c];
          if (accept[c]) {
            size[c] += proposals;
          } else {
            stalled[c] = 1;
          }
        }
        payload[c].push_bool(accept[c]);
      }
      st.metrics.absorb(tree_broadcast(g, st.cc, cfg, payload, 1, &views).metrics);

      RunResult down = run(
          g,
          [&](int v) -> std::unique_ptr<NodeProgram> {
            std::optional<bool> d;
            if (st.owner[v] >= 0 && active_at_start[st.owner[v]]) {
              d = accept[st.owner[v]] != 0;
            }
            return std::make_unique<DecisionProgram>(grow.program<GrowProgram>(v), d);
          },
          cfg);
      st.metrics.absorb(down.metrics);

      for (int v = 0; v < g.size(); ++v) {
        const auto& gp = grow.program<GrowProgram>(v);
        if (!gp.adopted()) continue;
        const auto d = down.program<DecisionProgram>(v).decision();
        if (!d) throw std::logic_error("carve: decision did not reach node");
        const int target = find_cluster(st.cc, gp.token());
        const int parent = g.neighbors(v)[gp.parent_port()];
        const int c = st.owner[v];
        const bool proposer = c >= 0 && !blue[c];
        if (*d) {
          if (gp.need()) st.cc.clusters[target].tree.push_back({v, parent});
          if (proposer) {
            st.leave(v);
            st.join(v, target, -1);
          }
        } else if (proposer) {
          st.kill(v);
        }
      }
      for (int c = 0; c < p; ++c) {
        ps.max_depth_growth = std::max(
            ps.max_depth_growth, steiner_depth(st.cc.clusters[c]) - depth_before[c]);
      }
    }

    const std::vector<int> remap = st.compact();
    remap_vector(size, remap, static_cast<int>(st.cc.clusters.size()));
    for (size_t c = 0; c < st.cc.clusters.size(); ++c) {
      size[c] = static_cast<int64_t>(st.cc.clusters[c].members.size());
    }
    st.fill_stats(ps, phase, k);
    result.phases.push_back(ps);
  }

  result.clusters = std::move(st.cc);
  result.dead = st.dead_list();
  result.metrics = std::move(st.metrics);
  return result;
}

CarveResult carve_fast(const Graph& g, const std::vector<int>& s, int x,
                       const SimConfig& cfg, int64_t n_bound) {
  Carver st(g, s, cfg);
  const CarveParamsC params =
      CarveParamsC::from(n_bound > 0 ? n_bound : g.size(), x, st.s_size);
  const int top = params.levels;
  const int id_bits = st.cc.id_bits;
  const int level_bits = bits_for(static_cast<uint64_t>(top) + 1);
  const int count_bits = std::max(1, bits_for(static_cast<uint64_t>(g.size()) + 1));
  const int n = g.size();

  int p = static_cast<int>(st.cc.clusters.size());
  std::vector<int> level(p, 0);
  std::vector<char> blue(p, 0), changed(p, 1);
  std::vector<int64_t> tokens(p, 1);
  int64_t created = st.s_size;
  int violations = 0;
  std::vector<int64_t> last_potential(n, -1);

  CarveResult result;
  result.top_level = top;
  for (int phase = 1; phase <= params.phases; ++phase) {
    PhaseStats ps;
    p = static_cast<int>(st.cc.clusters.size());
    auto potential = [&](int c) -> int64_t {
      return 3 * int64_t{phase} - 2 * int64_t{level[c]} + (blue[c] ? 1 : 0);
    };

    // Clusters that changed level are recolored among the clusters that
    // entered the same level.
    for (int l = 0; l <= top; ++l) {
      ClusterCollection sub;
      sub.id_bits = st.cc.id_bits;
      std::vector<int> back;
      for (int c = 0; c < p; ++c) {
        if (changed[c] && level[c] == l) {
          sub.clusters.push_back(st.cc.clusters[c]);
          back.push_back(c);
        }
      }
      if (back.empty()) continue;
      ColoringResult col = color_red_blue(g, sub, 1, cfg);
      st.metrics.absorb(col.metrics);
      for (size_t i = 0; i < back.size(); ++i) {
        blue[back[i]] = col.color[i] == Color::kBlue;
      }
    }
    std::fill(changed.begin(), changed.end(), 0);
    if (p > 0) {
      std::vector<BitString> payload(p);
      for (int c = 0; c < p; ++c) {
        if (level_bits > 0) payload[c].push(static_cast<uint64_t>(level[c]), level_bits);
        payload[c].push_bool(blue[c]);
      }
      st.metrics.absorb(
          tree_broadcast(g, st.cc, cfg, payload, level_bits + 1).metrics);
    }

    std::vector<int64_t> start(n, -1);
    for (int v = 0; v < n; ++v) {
      if (st.owner[v] < 0) continue;
      start[v] = potential(st.owner[v]);
      if (last_potential[v] >= 0 && start[v] < last_potential[v]) ++violations;
    }
    result.potential_start.push_back(start);

    std::vector<char> stalled(p, 0);
    for (int64_t step = 1; step <= params.steps; ++step) {
      const ClusterViews views = build_views(g, st.cc);
      RunResult prop = run(
          g,
          [&](int v) -> std::unique_ptr<NodeProgram> {
            std::optional<Key> key;
            if (const int c = st.owner[v]; c >= 0) {
              key = Key{st.cc.clusters[c].id, level[c], blue[c] ? 0 : 1};
            }
            return std::make_unique<ProposeProgram>(g.degree(v), key, id_bits,
                                                    level_bits, cfg.bandwidth());
          },
          cfg);
      st.metrics.absorb(prop.metrics);
      int64_t total = 0;
      for (int v = 0; v < n; ++v) total += prop.program<ProposeProgram>(v).received();
      if (total == 0) {
        // Nothing changes from here on: every cluster sees no proposals.
        std::fill(stalled.begin(), stalled.end(), 1);
        ps.steps_skipped = params.steps - step + 1;
        break;
      }
      ++ps.steps_run;
      std::vector<int> depth_before(p);
      for (int c = 0; c < p; ++c) depth_before[c] = steiner_depth(st.cc.clusters[c]);

      AggregateResult sum = tree_aggregate_at(
          g, st.cc, cfg, AggregateKind::kSumMod,
          [&](int v, int c) -> std::optional<uint64_t> {
            if (st.owner[v] != c) return std::nullopt;
            return static_cast<uint64_t>(prop.program<ProposeProgram>(v).received());
          },
          count_bits, 0, &views);
      st.metrics.absorb(sum.metrics);

      std::vector<char> accept(p, 0);
      std::vector<BitString> payload(p);
      for (int c = 0; c < p; ++c) {
        const auto proposals = static_cast<int64_t>(sum.value[c]);
        if (proposals == 0) {
          stalled[c] = 1;
        } else if (proposals * 2 * params.pay_per_kill >= tokens[c]) {
          accept[c] = 1;
          tokens[c] += proposals;
          created += proposals;
        } else {
          tokens[c] -= params.pay_per_kill * proposals;
          stalled[c] = 1;
        }
        payload[c].push_bool(accept[c]);
      }
      st.metrics.absorb(tree_broadcast(g, st.cc, cfg, payload, 1, &views).metrics);

      RunResult answers = run(
          g,
          [&](int v) -> std::unique_ptr<NodeProgram> {
            std::optional<bool> d;
            if (st.owner[v] >= 0) d = accept[st.owner[v]] != 0;
            return std::make_unique<AnswerProgram>(prop.program<ProposeProgram>(v), d);
          },
          cfg);
      st.metrics.absorb(answers.metrics);

      struct Move {
        int v, via, target;
        bool accepted;
      };
      std::vector<Move> moves;
      for (int v = 0; v < n; ++v) {
        const auto& pp = prop.program<ProposeProgram>(v);
        if (pp.target_port() < 0) continue;
        const auto a = answers.program<AnswerProgram>(v).answer();
        if (!a) throw std::logic_error("carve: proposal left unanswered");
        const int via = g.neighbors(v)[pp.target_port()];
        moves.push_back({v, via, st.owner[via], *a});
      }
      for (const Move& m : moves) {
        if (!m.accepted) {
          st.kill(m.v);
          continue;
        }
        if (potential(m.target) <= potential(st.owner[m.v])) ++violations;
        bool on_tree = false;
        for (const auto& tm : views.at[m.v]) on_tree = on_tree || tm.cluster == m.target;
        st.leave(m.v);
        st.join(m.v, m.target, on_tree ? -1 : m.via);
      }
      for (int c = 0; c < p; ++c) {
        ps.max_depth_growth = std::max(
            ps.max_depth_growth, steiner_depth(st.cc.clusters[c]) - depth_before[c]);
      }
    }

    std::vector<int64_t> end(n, -1);
    for (int v = 0; v < n; ++v) {
      if (st.owner[v] >= 0) end[v] = potential(st.owner[v]);
    }
    result.potential_end.push_back(end);
    last_potential = std::move(end);

    for (int c = 0; c < p; ++c) {
      if (!stalled[c]) continue;
      const int next = std::min(level[c] + 1, top);
      changed[c] = next != level[c];
      level[c] = next;
    }
    const std::vector<int> remap = st.compact();
    const int q = static_cast<int>(st.cc.clusters.size());
    remap_vector(level, remap, q);
    remap_vector(blue, remap, q);
    remap_vector(changed, remap, q);
    remap_vector(tokens, remap, q);

    st.fill_stats(ps, phase, 1);
    ps.tokens_created = created;
    ps.top_level_clusters = static_cast<int>(std::count(level.begin(), level.end(), top));
    ps.potential_violations = violations;
    result.phases.push_back(ps);
  }

  result.level = level;
  result.tokens_created = created;
  result.clusters = std::move(st.cc);
  result.dead = st.dead_list();
  result.metrics = std::move(st.metrics);
  return result;
}

}  // namespace congestlab
