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


#include "congestlab/coloring.h"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "congestlab/aggregate.h"
#include "congestlab/links.h"

namespace congestlab {
namespace {

// ---------------------------------------------------------------------------
// Token forwarding.

struct Token {
  Identifier id;
  int counter = 0;
  int parent_port = -1;  // -1 for the node's own token
  int64_t round = 0;
  std::vector<char> via;  // ports the token arrived on
};

class TokenProgram : public NodeProgram {
 public:
  TokenProgram(int degree, const Identifier* own, int k, int id_bits,
               int counter_bits, int64_t iteration_rounds, int64_t budget)
      : own_(own),
        k_(k),
        id_bits_(id_bits),
        counter_bits_(counter_bits),
        iteration_rounds_(iteration_rounds),
        budget_(budget),
        link_(std::vector<int>(degree, 1),
              FrameFormat::fixed_width(id_bits + counter_bits)),
        sent_(degree) {
    if (own != nullptr) {
      tokens_.push_back({*own, k, -1, 0, std::vector<char>(degree, 0)});
    }
  }

  void on_round(NodeContext& ctx, int64_t round, const Inbox& in,
                Outbox& out) override {
    link_.receive(in, [&](int port, int, BitString& f) {
      BitReader r(f);
      const Identifier id = Identifier::read(r, id_bits_);
      const int c = counter_bits_ > 0 ? static_cast<int>(r.take(counter_bits_)) : 0;
      accept(ctx.degree(), port, id, c, round);
    });
    if (round % iteration_rounds_ == 0 && started_ < k_) {
      ++started_;
      send_iteration(ctx.degree());
    }
    link_.flush(out, budget_);
  }

  bool finished() const override { return started_ == k_ && link_.idle(); }

  const std::vector<Token>& tokens() const { return tokens_; }

  // Lowest foreign token seen, or nullptr.
  const Token* lowest_foreign() const {
    for (const auto& t : tokens_) {
      if (t.parent_port >= 0) return &t;
    }
    return nullptr;
  }
  const Token* find(const Identifier& id) const {
    auto it = std::lower_bound(
        tokens_.begin(), tokens_.end(), id,
        [](const Token& t, const Identifier& x) { return t.id < x; });
    return it != tokens_.end() && it->id == id ? &*it : nullptr;
  }

 private:
  void accept(int degree, int port, const Identifier& id, int counter,
              int64_t round) {
    if (own_ != nullptr && id == *own_) return;
    auto it = std::lower_bound(
        tokens_.begin(), tokens_.end(), id,
        [](const Token& t, const Identifier& x) { return t.id < x; });
    if (it == tokens_.end() || it->id != id) {
      Token t{id, counter, port, round, std::vector<char>(degree, 0)};
      t.via[port] = 1;
      tokens_.insert(it, std::move(t));
      return;
    }
    it->via[port] = 1;
    if (it->round == round && counter > it->counter) {
      it->counter = counter;
      it->parent_port = port;
    }
  }

  void send_iteration(int degree) {
    for (int p = 0; p < degree; ++p) {
      auto& sent = sent_[p];
      for (const auto& t : tokens_) {
        if (sent.size() >= 2) break;
        if (t.counter <= 0 || t.via[p]) continue;
        if (std::find(sent.begin(), sent.end(), t.id) != sent.end()) continue;
        sent.push_back(t.id);
        BitString f;
        t.id.write(f, id_bits_);
        if (counter_bits_ > 0) f.push(static_cast<uint64_t>(t.counter - 1), counter_bits_);
        link_.enqueue(p, 0, f);
      }
    }
  }

  const Identifier* own_;
  int k_;
  int id_bits_;
  int counter_bits_;
  int64_t iteration_rounds_;
  int64_t budget_;
  LinkLayer link_;
  std::vector<std::vector<Identifier>> sent_;
  std::vector<Token> tokens_;  // sorted by id
  int started_ = 0;
};

// ---------------------------------------------------------------------------
// Route back from each leaf toward the origin of its chosen token, stopping
// at the first node on the target's Steiner tree.

class PathProgram : public NodeProgram {
 public:
  PathProgram(int degree, const TokenProgram& tokens, bool leaf,
              std::vector<Identifier> on_tree, int id_bits, int64_t budget)
      : tokens_(&tokens),
        leaf_(leaf),
        on_tree_(std::move(on_tree)),
        id_bits_(id_bits),
        budget_(budget),
        link_(std::vector<int>(degree, 1), FrameFormat::fixed_width(id_bits)) {}

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0 && leaf_) {
      const Token* t = tokens_->lowest_foreign();
      if (t == nullptr) throw EngineError("path: leaf without foreign token");
      selected_ = t->id;
      route(t->id);
    }
    link_.receive(in, [&](int, int, BitString& f) {
      BitReader r(f);
      route(Identifier::read(r, id_bits_));
    });
    link_.flush(out, budget_);
  }
  bool finished() const override { return link_.idle(); }

  const Identifier& selected() const { return selected_; }
  // (token id, parent port) for every prefix this node extended.
  const std::vector<std::pair<Identifier, int>>& forwarded() const {
    return forwarded_;
  }

 private:
  void route(const Identifier& id) {
    if (std::binary_search(on_tree_.begin(), on_tree_.end(), id)) return;
    for (const auto& [x, p] : forwarded_) {
      if (x == id) return;
    }
    const Token* t = tokens_->find(id);
    if (t == nullptr || t->parent_port < 0) {
      throw EngineError("path: no parent for token " + id.to_string());
    }
    forwarded_.emplace_back(id, t->parent_port);
    BitString f;
    id.write(f, id_bits_);
    link_.enqueue(t->parent_port, 0, f);
  }

  const TokenProgram* tokens_;
  bool leaf_;
  std::vector<Identifier> on_tree_;  // sorted
  int id_bits_;
  int64_t budget_;
  LinkLayer link_;
  Identifier selected_;
  std::vector<std::pair<Identifier, int>> forwarded_;
};

int cluster_id_bits(const ClusterCollection& cc) {
  int bits = std::max(1, cc.id_bits);
  for (const auto& c : cc.clusters) bits = std::max(bits, c.id.bit_length());
  return bits;
}

// ---------------------------------------------------------------------------
// One round of the cluster graph in which every cluster talks to the cluster
// it selected and to the clusters that selected it. Each cluster broadcasts a
// payload over its extended tree, so its leaf knows both its own payload and
// the target's. The leaf then reports upward inside its own cluster (`up`)
// and into the target's extended tree (`down`, a convergecast of items).

using LeafFn = std::function<std::optional<uint64_t>(
    int c, const BitString& own, const BitString& target)>;

struct Exchanged {
  std::vector<std::optional<uint64_t>> up;
  std::vector<std::vector<uint64_t>> down;
};

class ClusterNet {
 public:
  ClusterNet(const Graph& g, const ClusterCollection& cc,
             const ConnectingStructure& cs, const SimConfig& cfg,
             RoundMetrics& metrics)
      : g_(g),
        cc_(cc),
        cs_(cs),
        cfg_(cfg),
        metrics_(metrics),
        views_(build_views(g, cc)),
        ext_views_(build_views(g, cs.extended)),
        owner_(cc.owner(g.size())) {
    for (const auto& c : cs.extended.clusters) {
      max_children_ = std::max(max_children_, static_cast<int>(c.members.size()));
    }
  }

  const ClusterViews& ext_views() const { return ext_views_; }

  Exchanged exchange(const std::vector<BitString>& payload, int width,
                     const LeafFn& f, int f_width, const LeafFn& down,
                     int down_width) {
    const int p = static_cast<int>(cc_.clusters.size());
    std::vector<BitString> own(p), tgt(p);
    if (width > 0) {
      auto bc = tree_broadcast(g_, cs_.extended, cfg_, payload, width, &ext_views_);
      metrics_.absorb(bc.metrics);
      for (int c = 0; c < p; ++c) {
        if (cs_.isolated(c)) continue;
        for (const auto& [x, value] : bc.at[cs_.leaf[c]]) {
          if (x == c) own[c] = value;
          if (x == cs_.target[c]) tgt[c] = value;
        }
      }
    }
    Exchanged out;
    out.up.assign(p, std::nullopt);
    out.down.assign(p, {});
    if (f) {
      std::vector<std::optional<uint64_t>> val(p);
      for (int c = 0; c < p; ++c) {
        if (!cs_.isolated(c)) val[c] = f(c, own[c], tgt[c]);
      }
      const uint64_t none = (uint64_t{1} << (f_width + 1)) - 1;
      auto r = tree_aggregate_at(
          g_, cc_, cfg_, AggregateKind::kMin,
          [&](int v, int c) -> std::optional<uint64_t> {
            if (cs_.leaf[c] != v) return std::nullopt;
            return val[c];
          },
          f_width + 1, 0, &views_);
      metrics_.absorb(r.metrics);
      for (int c = 0; c < p; ++c) {
        if (r.value[c] != none) out.up[c] = r.value[c];
      }
    }
    if (down) {
      std::vector<std::optional<uint64_t>> val(p);
      for (int c = 0; c < p; ++c) {
        if (!cs_.isolated(c)) val[c] = down(c, own[c], tgt[c]);
      }
      auto r = tree_aggregate_at(
          g_, cs_.extended, cfg_, AggregateKind::kConvergecast,
          [&](int v, int t) -> std::optional<uint64_t> {
            const int c = owner_[v];
            if (c < 0 || cs_.leaf[c] != v || cs_.target[c] != t) return std::nullopt;
            return val[c];
          },
          down_width, std::max(1, max_children_), &ext_views_);
      metrics_.absorb(r.metrics);
      out.down = std::move(r.items);
    }
    return out;
  }

 private:
  const Graph& g_;
  const ClusterCollection& cc_;
  const ConnectingStructure& cs_;
  const SimConfig& cfg_;
  RoundMetrics& metrics_;
  ClusterViews views_;
  ClusterViews ext_views_;
  std::vector<int> owner_;
  int max_children_ = 0;
};

BitString bits_of(uint64_t v, int width) {
  BitString b;
  b.push(v, width);
  return b;
}

int first_free(std::initializer_list<int> used) {
  for (int c = 0; c < 3; ++c) {
    if (std::find(used.begin(), used.end(), c) == used.end()) return c;
  }
  return -1;
}

}  // namespace

ConnectingStructure build_connecting_structure(const Graph& g,
                                               const ClusterCollection& cc,
                                               int k, const SimConfig& cfg) {
  if (k < 1) throw std::invalid_argument("connecting structure: k must be >= 1");
  const int n = g.size();
  const int p = static_cast<int>(cc.clusters.size());
  const std::vector<int> owner = cc.owner(n);
  const int id_bits = cluster_id_bits(cc);
  const int counter_bits = bits_for(static_cast<uint64_t>(k));
  const int64_t budget = cfg.bandwidth();
  const int64_t frame = id_bits + counter_bits;
  const int64_t iteration_rounds =
      cfg.mode == Mode::kLocal ? 1 : std::max<int64_t>(1, (2 * frame + budget - 1) / budget);

  ConnectingStructure cs;
  cs.k = k;
  cs.target.assign(p, -1);
  cs.leaf.assign(p, -1);
  cs.path.assign(p, {});
  cs.edge_trees.assign(g.edge_count(), 0);

  auto tokens = run(g,
                    [&](int v) {
                      const Identifier* own =
                          owner[v] >= 0 ? &cc.clusters[owner[v]].id : nullptr;
                      return std::make_unique<TokenProgram>(
                          g.degree(v), own, k, id_bits, counter_bits,
                          iteration_rounds, budget);
                    },
                    cfg);
  cs.metrics = tokens.metrics;
  auto token_at = [&](int v) -> const TokenProgram& {
    return tokens.program<TokenProgram>(v);
  };

  // Leaf selection: the candidate with the smallest in-cluster index.
  const ClusterViews views = build_views(g, cc);
  const TreeIndexing idx = assign_cluster_indices(g, cc, cfg, &views);
  cs.metrics.absorb(idx.metrics);
  int max_size = 1;
  for (const auto& c : cc.clusters) max_size = std::max(max_size, static_cast<int>(c.members.size()));
  const int iw = bits_for(static_cast<uint64_t>(max_size) + 1);
  auto lowest = tree_aggregate_at(
      g, cc, cfg, AggregateKind::kMin,
      [&](int v, int c) -> std::optional<uint64_t> {
        if (owner[v] != c || token_at(v).lowest_foreign() == nullptr) return std::nullopt;
        return static_cast<uint64_t>(idx.index[v]);
      },
      iw, 0, &views);
  cs.metrics.absorb(lowest.metrics);
  std::vector<BitString> choice(p);
  for (int c = 0; c < p; ++c) choice[c] = bits_of(lowest.value[c], iw);
  auto told = tree_broadcast(g, cc, cfg, choice, iw, &views);
  cs.metrics.absorb(told.metrics);
  std::vector<char> is_leaf(n, 0);
  for (int v = 0; v < n; ++v) {
    if (owner[v] < 0) continue;
    const BitString mine = told.member_value(cc, v);
    if (static_cast<int>(mine.read(0, iw)) == idx.index[v]) {
      is_leaf[v] = 1;
      cs.leaf[owner[v]] = v;
    }
  }

  std::map<Identifier, int> by_id;
  for (int c = 0; c < p; ++c) by_id[cc.clusters[c].id] = c;
  auto paths = run(g,
                   [&](int v) {
                     std::vector<Identifier> on_tree;
                     for (const auto& m : views.at[v]) on_tree.push_back(cc.clusters[m.cluster].id);
                     std::sort(on_tree.begin(), on_tree.end());
                     return std::make_unique<PathProgram>(g.degree(v), token_at(v),
                                                          is_leaf[v] != 0,
                                                          std::move(on_tree),
                                                          id_bits, budget);
                   },
                   cfg);
  cs.metrics.absorb(paths.metrics);

  cs.extended = cc;
  for (auto& c : cs.extended.clusters) c.members.clear();
  for (int v = 0; v < n; ++v) {
    const auto& prog = paths.program<PathProgram>(v);
    for (const auto& [id, port] : prog.forwarded()) {
      cs.extended.clusters[by_id.at(id)].tree.push_back({v, g.neighbors(v)[port]});
    }
    if (!is_leaf[v]) continue;
    const int c = owner[v];
    const int t = by_id.at(prog.selected());
    cs.target[c] = t;
    cs.extended.clusters[t].members.push_back(v);
    // The full selected path, read off the remembered ports.
    std::vector<int>& path = cs.path[c];
    path.push_back(v);
    int u = v;
    while (owner[u] != t) {
      const Token* tok = token_at(u).find(prog.selected());
      u = g.neighbors(u)[tok->parent_port];
      path.push_back(u);
    }
  }
  for (auto& c : cs.extended.clusters) std::sort(c.members.begin(), c.members.end());

  std::vector<std::set<int>> per_edge(g.edge_count());
  for (int c = 0; c < p; ++c) {
    const auto& path = cs.path[c];
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      per_edge[g.edge_index(path[i], path[i + 1])].insert(cs.target[c]);
    }
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    cs.edge_trees[e] = static_cast<int>(per_edge[e].size());
  }
  return cs;
}

void validate_connecting_structure(const Graph& g, const ClusterCollection& cc,
                                   const ConnectingStructure& cs) {
  const int p = static_cast<int>(cc.clusters.size());
  const std::vector<int> owner = cc.owner(g.size());
  if (static_cast<int>(cs.target.size()) != p || static_cast<int>(cs.leaf.size()) != p ||
      static_cast<int>(cs.path.size()) != p) {
    throw StructureError("structure does not match the collection");
  }
  for (int c = 0; c < p; ++c) {
    const std::string name = "cluster " + cc.clusters[c].id.to_string();
    const auto dist = bounded_bfs(g, cc.clusters[c].members, cs.k);
    bool near = false;
    for (int v = 0; v < g.size() && !near; ++v) {
      near = dist[v] <= cs.k && owner[v] >= 0 && owner[v] != c;
    }
    if (near == cs.isolated(c)) {
      throw StructureError(name + (near ? ": has a cluster within distance k but selected nothing"
                                        : ": is isolated but selected a path"));
    }
    if (cs.isolated(c)) continue;
    const auto& path = cs.path[c];
    const int t = cs.target[c];
    if (t == c) throw StructureError(name + ": selected itself");
    if (path.empty() || path.front() != cs.leaf[c] || owner[cs.leaf[c]] != c) {
      throw StructureError(name + ": leaf is not a member");
    }
    if (owner[path.back()] != t) throw StructureError(name + ": root is not a member of the target");
    if (static_cast<int>(path.size()) - 1 > cs.k) throw StructureError(name + ": path longer than k");
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      if (g.edge_index(path[i], path[i + 1]) < 0) throw StructureError(name + ": path leaves G");
    }
    const auto& leaves = cs.extended.clusters[t].members;
    if (!std::binary_search(leaves.begin(), leaves.end(), cs.leaf[c])) {
      throw StructureError(name + ": leaf missing from the target's extended tree");
    }
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    if (cs.edge_trees[e] > 4) {
      throw StructureError("edge " + std::to_string(g.edge(e).first) + "-" +
                           std::to_string(g.edge(e).second) + " lies in " +
                           std::to_string(cs.edge_trees[e]) + " BFS trees");
    }
  }
}

ColoringResult color_red_blue(const Graph& g, const ClusterCollection& cc,
                              int k, const SimConfig& cfg) {
  const int p = static_cast<int>(cc.clusters.size());
  ColoringResult res;
  res.color.assign(p, Color::kRed);
  res.step.assign(p, ColoringStep::kIsolated);
  res.heavy.assign(p, 0);
  res.group.assign(p, -1);
  res.structure = build_connecting_structure(g, cc, k, cfg);
  const ConnectingStructure& cs = res.structure;
  res.metrics = cs.metrics;
  RoundMetrics& metrics = res.metrics;
  if (p == 0) return res;

  ClusterNet net(g, cc, cs, cfg, metrics);
  const std::vector<int>& tgt = cs.target;
  auto selected = [&](int c) { return !cs.isolated(c); };

  // Step 2: count incoming paths by indexing the leaves of each extended tree.
  const TreeIndexing leaves =
      assign_cluster_indices(g, cs.extended, cfg, &net.ext_views());
  metrics.absorb(leaves.metrics);
  std::vector<int> leaf_index(p, -1);
  for (int c = 0; c < p; ++c) {
    if (selected(c)) leaf_index[c] = leaves.index[cs.leaf[c]];
    res.heavy[c] = leaves.size[c] >= kHeavyThreshold ? 1 : 0;
  }
  int max_children = 1;
  for (int c = 0; c < p; ++c) max_children = std::max(max_children, leaves.size[c]);
  const int iw = bits_for(static_cast<uint64_t>(max_children) + 1);

  std::vector<BitString> payload(p);
  auto one_bit = [&](auto&& bit) {
    for (int c = 0; c < p; ++c) payload[c] = bits_of(bit(c) ? 1 : 0, 1);
  };

  // Every cluster learns whether its target is heavy.
  one_bit([&](int c) { return res.heavy[c] != 0; });
  auto e1 = net.exchange(
      payload, 1,
      [](int, const BitString&, const BitString& t) -> std::optional<uint64_t> {
        return t.read(0, 1);
      },
      1, nullptr, 0);
  std::vector<char> step3(p, 0), remaining(p, 0);
  for (int c = 0; c < p; ++c) {
    if (!selected(c)) continue;
    step3[c] = *e1.up[c] != 0;
    remaining[c] = !res.heavy[c] && !step3[c];
  }

  // Light clusters whose target is light form the graph R. A cluster of R
  // with no R-neighbour joins the heavy group two levels up.
  one_bit([&](int c) { return remaining[c] != 0; });
  auto e2 = net.exchange(
      payload, 1,
      [](int, const BitString&, const BitString& t) -> std::optional<uint64_t> {
        return t.read(0, 1);
      },
      1,
      [&](int c, const BitString& own, const BitString&) -> std::optional<uint64_t> {
        if (!own.bit(0)) return std::nullopt;
        return static_cast<uint64_t>(leaf_index[c]);
      },
      iw);
  std::vector<char> r_parent(p, 0), in_r(p, 0), lonely(p, 0);
  std::vector<std::vector<uint64_t>> r_children(p);
  for (int c = 0; c < p; ++c) {
    if (!remaining[c]) continue;
    r_parent[c] = *e2.up[c] != 0;
    r_children[c] = e2.down[c];
    in_r[c] = r_parent[c] || !r_children[c].empty();
    lonely[c] = !in_r[c];
  }

  bool any_step3 = false;
  for (int c = 0; c < p; ++c) any_step3 = any_step3 || step3[c];
  if (any_step3) {
    one_bit([&](int c) { return lonely[c] != 0; });
    auto e3 = net.exchange(
        payload, 1, nullptr, 0,
        [](int, const BitString& own, const BitString&) -> std::optional<uint64_t> {
          if (!own.bit(0)) return std::nullopt;
          return 1;
        },
        1);
    // Step 3: a heavy cluster's group is its children, each followed by the
    // lonely clusters that selected that child; the group is colored by
    // alternating along consecutive indices, starting with blue.
    std::vector<int> weight(g.size(), 0);
    for (int c = 0; c < p; ++c) {
      if (step3[c]) weight[cs.leaf[c]] = 1 + static_cast<int>(e3.down[c].size());
      if (lonely[c]) weight[cs.leaf[c]] = 1;
    }
    const TreeIndexing blocks =
        assign_cluster_indices(g, cs.extended, cfg, &net.ext_views(), &weight);
    metrics.absorb(blocks.metrics);
    // The leaf knows its block start; it reports the parity upward.
    auto e4 = net.exchange(
        payload, 0,
        [&](int c, const BitString&, const BitString&) -> std::optional<uint64_t> {
          return static_cast<uint64_t>(blocks.index[cs.leaf[c]] & 1);
        },
        1, nullptr, 0);
    for (int c = 0; c < p; ++c) {
      if (!step3[c]) continue;
      res.color[c] = *e4.up[c] == 0 ? Color::kBlue : Color::kRed;
      res.step[c] = ColoringStep::kHeavyChild;
      res.group[c] = tgt[c];
    }
    for (int c = 0; c < p; ++c) payload[c] = bits_of(step3[c] ? *e4.up[c] : 0, 1);
    auto e5 = net.exchange(
        payload, 1,
        [&](int c, const BitString&, const BitString& t) -> std::optional<uint64_t> {
          const uint64_t start = t.read(0, 1);
          return (start + 1 + static_cast<uint64_t>(blocks.index[cs.leaf[c]])) & 1;
        },
        1, nullptr, 0);
    for (int c = 0; c < p; ++c) {
      if (!lonely[c]) continue;
      res.color[c] = *e5.up[c] == 0 ? Color::kBlue : Color::kRed;
      res.step[c] = ColoringStep::kHeavyChild;
      res.group[c] = tgt[tgt[c]];
    }
  }

  // Step 4.
  for (int c = 0; c < p; ++c) {
    if (res.heavy[c] && !step3[c]) {
      res.color[c] = Color::kBlue;
      res.step[c] = ColoringStep::kHeavy;
    }
  }

  bool any_r = false;
  for (int c = 0; c < p; ++c) any_r = any_r || in_r[c];
  if (!any_r) return res;

  // Step 5. R is a pseudoforest whose parent edges point at the selected
  // cluster, so Cole-Vishkin colour reduction applies.
  const int id_bits = cluster_id_bits(cc);
  std::vector<BitString> cv(p);
  for (int c = 0; c < p; ++c) cc.clusters[c].id.write(cv[c], id_bits);
  int width = id_bits;
  uint64_t colors = id_bits >= 63 ? ~uint64_t{0} : (uint64_t{1} << id_bits);
  while (colors > 6) {
    const int next_width = bits_for(2 * static_cast<uint64_t>(width));
    for (int c = 0; c < p; ++c) payload[c] = in_r[c] ? cv[c] : bits_of(0, width);
    auto step = [&](const BitString& own, const BitString& parent) {
      int i = 0;
      while (i < width - 1 && own.bit(i) == parent.bit(i)) ++i;
      return static_cast<uint64_t>(2 * i + (own.bit(i) ? 1 : 0));
    };
    auto ex = net.exchange(
        payload, width,
        [&](int, const BitString& own, const BitString& t) -> std::optional<uint64_t> {
          return step(own, t);
        },
        next_width, nullptr, 0);
    for (int c = 0; c < p; ++c) {
      if (!in_r[c]) continue;
      const uint64_t v = r_parent[c] ? *ex.up[c] : (cv[c].bit(0) ? 1 : 0);
      cv[c] = bits_of(v, next_width);
    }
    colors = 2 * static_cast<uint64_t>(width);
    width = next_width;
  }
  std::vector<int> col(p, -1);
  for (int c = 0; c < p; ++c) {
    if (in_r[c]) col[c] = static_cast<int>(cv[c].read(0, width));
  }

  auto parent_value = [&](const std::vector<int>& value, int w) {
    for (int c = 0; c < p; ++c) payload[c] = bits_of(in_r[c] ? static_cast<uint64_t>(value[c]) : 0, w);
    auto ex = net.exchange(
        payload, w,
        [&](int, const BitString&, const BitString& t) -> std::optional<uint64_t> {
          return t.read(0, w);
        },
        w, nullptr, 0);
    std::vector<int> out(p, -1);
    for (int c = 0; c < p; ++c) {
      if (in_r[c] && r_parent[c]) out[c] = static_cast<int>(*ex.up[c]);
    }
    return out;
  };

  // Six colours down to three: shift down, then recolour one class.
  for (int drop = 5; drop >= 3; --drop) {
    const std::vector<int> old = col;
    const std::vector<int> above = parent_value(col, 3);
    for (int c = 0; c < p; ++c) {
      if (!in_r[c]) continue;
      col[c] = r_parent[c] ? above[c] : first_free({old[c]});
    }
    const std::vector<int> above2 = parent_value(col, 3);
    for (int c = 0; c < p; ++c) {
      if (!in_r[c] || col[c] != drop) continue;
      col[c] = first_free({r_parent[c] ? above2[c] : -1, old[c]});
    }
  }

  // Maximal matching on R, one colour class of proposers at a time.
  std::vector<char> matched(p, 0), to_parent(p, 0);
  std::vector<int> partner_child(p, -1);  // leaf index of the accepted child
  for (int round = 0; round < 3; ++round) {
    std::vector<int> m(p);
    for (int c = 0; c < p; ++c) m[c] = matched[c];
    const std::vector<int> parent_matched = parent_value(m, 1);
    std::vector<char> proposing(p, 0);
    for (int c = 0; c < p; ++c) {
      proposing[c] = in_r[c] && r_parent[c] && !matched[c] && col[c] == round &&
                     parent_matched[c] == 0;
    }
    one_bit([&](int c) { return proposing[c] != 0; });
    auto props = net.exchange(
        payload, 1, nullptr, 0,
        [&](int c, const BitString& own, const BitString&) -> std::optional<uint64_t> {
          if (!own.bit(0)) return std::nullopt;
          return static_cast<uint64_t>(leaf_index[c]);
        },
        iw);
    std::vector<int> accepted(p, 0);
    for (int c = 0; c < p; ++c) {
      if (!in_r[c] || matched[c] || props.down[c].empty()) continue;
      accepted[c] = static_cast<int>(props.down[c].front()) + 1;
      matched[c] = 1;
      partner_child[c] = accepted[c] - 1;
    }
    for (int c = 0; c < p; ++c) payload[c] = bits_of(static_cast<uint64_t>(accepted[c]), iw + 1);
    auto answers = net.exchange(
        payload, iw + 1,
        [&](int c, const BitString&, const BitString& t) -> std::optional<uint64_t> {
          return t.read(0, iw + 1) == static_cast<uint64_t>(leaf_index[c]) + 1 ? 1 : 0;
        },
        1, nullptr, 0);
    for (int c = 0; c < p; ++c) {
      if (proposing[c] && *answers.up[c] == 1) {
        matched[c] = 1;
        to_parent[c] = 1;
      }
    }
  }

  // Unmatched clusters attach to their parent, or else to their first
  // R-child; maximality makes that neighbour matched.
  std::vector<int> attach_down(p, 0);  // leaf index + 1 of the chosen child
  std::vector<char> attach_up(p, 0);
  for (int c = 0; c < p; ++c) {
    if (!in_r[c] || matched[c]) continue;
    if (r_parent[c]) {
      attach_up[c] = 1;
    } else {
      attach_down[c] = static_cast<int>(r_children[c].front()) + 1;
    }
  }
  for (int c = 0; c < p; ++c) {
    BitString b = bits_of(static_cast<uint64_t>(attach_down[c]), iw + 1);
    b.push_bool(attach_up[c] != 0);
    payload[c] = b;
  }
  auto att = net.exchange(
      payload, iw + 2,
      [&](int c, const BitString&, const BitString& t) -> std::optional<uint64_t> {
        return t.read(0, iw + 1) == static_cast<uint64_t>(leaf_index[c]) + 1 ? 1 : 0;
      },
      1,
      [&](int c, const BitString& own, const BitString&) -> std::optional<uint64_t> {
        if (!own.bit(iw + 1)) return std::nullopt;
        return static_cast<uint64_t>(leaf_index[c]);
      },
      iw);
  std::vector<char> parent_attached(p, 0);
  std::vector<std::vector<uint64_t>> children_attached(p);
  std::vector<int> block(p, 0);
  for (int c = 0; c < p; ++c) {
    if (!in_r[c] || !matched[c]) continue;
    parent_attached[c] = att.up[c] && *att.up[c] == 1;
    children_attached[c] = att.down[c];
    block[c] = 1 + parent_attached[c] + static_cast<int>(children_attached[c].size());
  }

  // The proposer's block starts blue; its partner's block compensates an
  // odd proposer block by starting red.
  for (int c = 0; c < p; ++c) {
    BitString b = bits_of(to_parent[c] ? 1 : 0, 1);
    b.push(static_cast<uint64_t>(block[c] & 1), 1);
    payload[c] = b;
  }
  auto parity = net.exchange(
      payload, 2, nullptr, 0,
      [](int, const BitString& own, const BitString&) -> std::optional<uint64_t> {
        if (!own.bit(0)) return std::nullopt;
        return own.read(1, 1);
      },
      1);
  std::vector<int> start_blue(p, 1);
  for (int c = 0; c < p; ++c) {
    if (!in_r[c] || !matched[c] || to_parent[c]) continue;
    if (parity.down[c].size() != 1) throw EngineError("coloring: partner parity missing");
    start_blue[c] = parity.down[c].front() == 0 ? 1 : 0;
  }
  // Within a block: the matched cluster, then its attached parent, then its
  // attached children by leaf index. Payload: parent-attached flag, the
  // parent's colour, one colour bit per child leaf index.
  const int bw = max_children;
  for (int c = 0; c < p; ++c) {
    BitString map;
    std::vector<int> child_color(bw, 0);
    int parent_color = 0;
    if (in_r[c] && matched[c]) {
      auto color_at = [&](int pos) {
        return (pos % 2 == 0) == (start_blue[c] == 1) ? 1 : 0;
      };
      res.color[c] = color_at(0) ? Color::kBlue : Color::kRed;
      res.step[c] = ColoringStep::kLight;
      res.group[c] = to_parent[c] ? tgt[c] : c;
      int pos = 1;
      if (parent_attached[c]) parent_color = color_at(pos++);
      for (uint64_t li : children_attached[c]) child_color[li] = color_at(pos++);
    }
    map.push_bool(parent_attached[c] != 0);
    map.push_bool(parent_color != 0);
    for (int i = 0; i < bw; ++i) map.push_bool(child_color[i] != 0);
    payload[c] = map;
  }
  auto told = net.exchange(
      payload, bw + 2,
      [&](int c, const BitString&, const BitString& t) -> std::optional<uint64_t> {
        return t.read(2 + leaf_index[c], 1);
      },
      1,
      [](int, const BitString& own, const BitString&) -> std::optional<uint64_t> {
        if (!own.bit(0)) return std::nullopt;
        return own.read(1, 1);
      },
      1);
  for (int c = 0; c < p; ++c) {
    if (!in_r[c] || matched[c]) continue;
    int color;
    if (attach_up[c]) {
      color = static_cast<int>(*told.up[c]);
      res.group[c] = to_parent[tgt[c]] ? tgt[tgt[c]] : tgt[c];
    } else {
      if (told.down[c].size() != 1) throw EngineError("coloring: attached colour missing");
      color = static_cast<int>(told.down[c].front());
      res.group[c] = -2;  // resolved below
    }
    res.color[c] = color ? Color::kBlue : Color::kRed;
    res.step[c] = ColoringStep::kLight;
  }
  // Bookkeeping only: a cluster attached to a child shares that child's group.
  for (int c = 0; c < p; ++c) {
    if (res.group[c] != -2) continue;
    for (int x = 0; x < p; ++x) {
      if (in_r[x] && matched[x] && tgt[x] == c && leaf_index[x] + 1 == attach_down[c]) {
        res.group[c] = res.group[x];
      }
    }
  }
  return res;
}

BalanceReport check_balance(const Graph& g, const ClusterCollection& cc, int k,
                            const std::vector<Color>& color) {
  if (color.size() != cc.clusters.size()) {
    throw std::invalid_argument("check_balance: one colour per cluster required");
  }
  BalanceReport report;
  for (auto& comp : cluster_components(g, cc, k)) {
    if (comp.size() < 2) continue;
    BalanceComponent bc;
    for (int c : comp) bc.blue += color[c] == Color::kBlue ? 1 : 0;
    const int64_t size = static_cast<int64_t>(comp.size());
    bc.ok = 2 * bc.blue >= size && 4 * bc.blue <= 3 * size;
    if (!bc.ok && report.ok) {
      report.ok = false;
      std::string ids;
      for (size_t i = 0; i < comp.size() && i < 8; ++i) {
        ids += (i ? "," : "") + cc.clusters[comp[i]].id.to_string();
      }
      if (comp.size() > 8) ids += ",...";
      report.violation = "component {" + ids + "}: " + std::to_string(bc.blue) +
                         " of " + std::to_string(size) +
                         " clusters blue, outside [1/2, 3/4]";
    }
    bc.clusters = std::move(comp);
    report.components.push_back(std::move(bc));
  }
  return report;
}

nlohmann::json coloring_to_json(const ClusterCollection& cc,
                                const std::vector<Color>& color) {
  nlohmann::json j = nlohmann::json::object();
  for (size_t c = 0; c < cc.clusters.size(); ++c) {
    j[cc.clusters[c].id.to_string()] = color[c] == Color::kBlue ? "blue" : "red";
  }
  return j;
}

std::vector<Color> coloring_from_json(const ClusterCollection& cc,
                                      const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("coloring must be a JSON object");
  std::vector<Color> out(cc.clusters.size());
  for (size_t c = 0; c < cc.clusters.size(); ++c) {
    const std::string key = cc.clusters[c].id.to_string();
    if (!j.contains(key)) throw std::invalid_argument("coloring misses cluster " + key);
    const std::string v = j.at(key).get<std::string>();
    if (v == "blue") {
      out[c] = Color::kBlue;
    } else if (v == "red") {
      out[c] = Color::kRed;
    } else {
      throw std::invalid_argument("cluster " + key + ": colour must be red or blue");
    }
  }
  if (j.size() != cc.clusters.size()) {
    throw std::invalid_argument("coloring names clusters not in the collection");
  }
  return out;
}

}  // namespace congestlab
