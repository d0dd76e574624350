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

#include "congestlab/aggregate.h"

#include <algorithm>
#include <memory>

#include "congestlab/links.h"

namespace congestlab {

int64_t tree_round_bound(int beta, int kappa, int64_t b) {
  const int64_t factor = std::max<int64_t>(1, (kappa + b - 1) / b);
  return kBoundConstant * factor * (beta + kappa);
}

int64_t token_round_bound(int beta, int kappa, int64_t n_max, int64_t x,
                          int64_t b) {
  return kBoundConstant * std::max(1, kappa) *
         (beta + (n_max * x + b - 1) / b);
}

namespace {

uint64_t low_mask(int width) {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

// Shared plumbing: one LinkLayer stream per tree on each edge, and a table
// from (port, stream) back to this node's membership.
class TreeProgram : public NodeProgram {
 public:
  TreeProgram(const Graph& g, const ClusterViews& views, int node,
              FrameFormat format, int64_t budget)
      : node_(node),
        mem_(&views.at[node]),
        link_(views.streams_per_port[node], format),
        budget_(budget) {
    route_.resize(g.degree(node));
    for (int p = 0; p < g.degree(node); ++p) {
      route_[p].assign(views.streams_per_port[node][p], -1);
    }
    for (int i = 0; i < static_cast<int>(mem_->size()); ++i) {
      const TreeMembership& m = (*mem_)[i];
      if (m.parent_port >= 0) route_[m.parent_port][m.parent_stream] = i;
      for (size_t j = 0; j < m.child_ports.size(); ++j) {
        route_[m.child_ports[j]][m.child_streams[j]] = i;
      }
    }
  }

  bool finished() const override { return done() && link_.idle(); }

 protected:
  virtual bool done() const = 0;
  // A frame for membership `mi`; `child` is the child slot (index into
  // child_ports) or -1 when the frame came from the parent.
  virtual void on_frame(int mi, int child, BitString& frame) = 0;

  void pump(const Inbox& in) {
    link_.receive(in, [&](int port, int stream, BitString& frame) {
      const int mi = route_[port][stream];
      const TreeMembership& m = (*mem_)[mi];
      int child = -1;
      if (m.parent_port != port) {
        child = static_cast<int>(
            std::lower_bound(m.child_ports.begin(), m.child_ports.end(), port) -
            m.child_ports.begin());
      }
      on_frame(mi, child, frame);
    });
  }
  void flush(Outbox& out) { link_.flush(out, budget_); }
  void to_parent(int mi, const BitString& frame) {
    const TreeMembership& m = (*mem_)[mi];
    link_.enqueue(m.parent_port, m.parent_stream, frame);
  }
  void to_child(int mi, int child, const BitString& frame) {
    const TreeMembership& m = (*mem_)[mi];
    link_.enqueue(m.child_ports[child], m.child_streams[child], frame);
  }
  const std::vector<TreeMembership>& mem() const { return *mem_; }

  int node_;

 private:
  const std::vector<TreeMembership>* mem_;
  LinkLayer link_;
  int64_t budget_;
  std::vector<std::vector<int>> route_;
};

class BroadcastProgram : public TreeProgram {
 public:
  BroadcastProgram(const Graph& g, const ClusterViews& views, int node,
                   int64_t budget, const std::vector<BitString>& payload,
                   int width)
      : TreeProgram(g, views, node, FrameFormat::fixed_width(width), budget),
        payload_(&payload) {
    value_.resize(mem().size());
    have_.assign(mem().size(), 0);
  }

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0) {
      for (int i = 0; i < static_cast<int>(mem().size()); ++i) {
        if (mem()[i].parent_port < 0) deliver(i, (*payload_)[mem()[i].cluster]);
      }
    }
    pump(in);
    flush(out);
  }

  std::vector<std::pair<int, BitString>> values() const {
    std::vector<std::pair<int, BitString>> out;
    for (size_t i = 0; i < mem().size(); ++i) {
      out.emplace_back(mem()[i].cluster, value_[i]);
    }
    return out;
  }

 protected:
  bool done() const override { return received_ == mem().size(); }
  void on_frame(int mi, int child, BitString& frame) override {
    if (child >= 0) throw EngineError("broadcast: frame from a child");
    deliver(mi, frame);
  }

 private:
  void deliver(int mi, const BitString& v) {
    if (have_[mi]) throw EngineError("broadcast: duplicate payload");
    have_[mi] = 1;
    ++received_;
    value_[mi] = v;
    for (size_t c = 0; c < mem()[mi].child_ports.size(); ++c) {
      to_child(mi, static_cast<int>(c), v);
    }
  }

  const std::vector<BitString>* payload_;
  std::vector<BitString> value_;
  std::vector<char> have_;
  size_t received_ = 0;
};

class AggregateProgram : public TreeProgram {
 public:
  AggregateProgram(const Graph& g, const ClusterViews& views, int node,
                   int64_t budget, AggregateKind kind, const TreeInput& input,
                   int width)
      : TreeProgram(g, views, node,
                    FrameFormat::fixed_width(
                        kind == AggregateKind::kConvergecast ? width + 1 : width),
                    budget),
        kind_(kind),
        width_(width) {
    const size_t k = mem().size();
    acc_.assign(k, kind == AggregateKind::kMin ? low_mask(width) : 0);
    pending_.resize(k);
    sent_.assign(k, 0);
    for (size_t i = 0; i < k; ++i) {
      pending_[i] = static_cast<int>(mem()[i].child_ports.size());
      const auto own = input(node, mem()[i].cluster);
      if (!own) continue;
      if (width < 64 && (*own >> width) != 0) {
        throw EngineError("aggregate input does not fit in " +
                          std::to_string(width) + " bits");
      }
      own_.emplace_back(static_cast<int>(i), *own);
    }
    items_.resize(k);
  }

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0) {
      for (const auto& [mi, v] : own_) absorb(mi, v);
    }
    pump(in);
    for (size_t i = 0; i < mem().size(); ++i) maybe_finish(static_cast<int>(i));
    flush(out);
  }

  uint64_t result(int mi) const { return acc_[mi]; }
  const std::vector<uint64_t>& items(int mi) const { return items_[mi]; }
  bool is_root(int mi) const { return mem()[mi].parent_port < 0; }
  int cluster(int mi) const { return mem()[mi].cluster; }
  size_t memberships() const { return mem().size(); }

 protected:
  bool done() const override { return finished_ == mem().size(); }
  void on_frame(int mi, int child, BitString& frame) override {
    if (child < 0) throw EngineError("aggregate: frame from the parent");
    if (kind_ == AggregateKind::kConvergecast) {
      if (frame.bit(0)) {
        absorb(mi, frame.read(1, width_));
      } else {
        --pending_[mi];
      }
      return;
    }
    absorb(mi, frame.read(0, width_));
    --pending_[mi];
  }

 private:
  void absorb(int mi, uint64_t v) {
    switch (kind_) {
      case AggregateKind::kMin:
        acc_[mi] = std::min(acc_[mi], v);
        break;
      case AggregateKind::kSumMod:
        acc_[mi] = (acc_[mi] + v) & low_mask(width_);
        break;
      case AggregateKind::kConvergecast:
        if (is_root(mi)) {
          items_[mi].push_back(v);
        } else {
          BitString f;
          f.push_bool(true);
          f.push(v, width_);
          to_parent(mi, f);
        }
        break;
    }
  }

  void maybe_finish(int mi) {
    if (sent_[mi] || pending_[mi] > 0) return;
    sent_[mi] = 1;
    ++finished_;
    if (is_root(mi)) return;
    BitString f;
    if (kind_ == AggregateKind::kConvergecast) {
      f.push_bool(false);
      f.push(0, width_);
    } else {
      f.push(acc_[mi], width_);
    }
    to_parent(mi, f);
  }

  AggregateKind kind_;
  int width_;
  std::vector<uint64_t> acc_;
  std::vector<int> pending_;
  std::vector<char> sent_;
  std::vector<std::pair<int, uint64_t>> own_;
  std::vector<std::vector<uint64_t>> items_;
  size_t finished_ = 0;
};

class IndexProgram : public TreeProgram {
 public:
  IndexProgram(const Graph& g, const ClusterViews& views, int node,
               int64_t budget, int width, int own_weight)
      : TreeProgram(g, views, node, FrameFormat::fixed_width(width), budget),
        width_(width),
        own_weight_(own_weight) {
    const size_t k = mem().size();
    local_.resize(k);
    pending_.resize(k);
    got_offset_.assign(k, 0);
    for (size_t i = 0; i < k; ++i) {
      const auto& m = mem()[i];
      local_[i].subtree = m.member ? own_weight : 0;
      local_[i].child_count.assign(m.child_ports.size(), 0);
      local_[i].child_offset.assign(m.child_ports.size(), 0);
      pending_[i] = static_cast<int>(m.child_ports.size());
    }
  }

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0) {
      for (size_t i = 0; i < mem().size(); ++i) {
        if (pending_[i] == 0) counted(static_cast<int>(i));
      }
    }
    pump(in);
    flush(out);
  }

  const std::vector<TreeIndexing::Local>& local() const { return local_; }
  int own_index() const { return own_index_; }

 protected:
  bool done() const override { return offsets_ == mem().size(); }
  void on_frame(int mi, int child, BitString& frame) override {
    const int v = static_cast<int>(frame.read(0, width_));
    if (child >= 0) {
      local_[mi].child_count[child] = v;
      local_[mi].subtree += v;
      if (--pending_[mi] == 0) counted(mi);
    } else {
      assign(mi, v);
    }
  }

 private:
  void counted(int mi) {
    if (mem()[mi].parent_port < 0) {
      assign(mi, 0);
      return;
    }
    BitString f;
    f.push(static_cast<uint64_t>(local_[mi].subtree), width_);
    to_parent(mi, f);
  }
  void assign(int mi, int offset) {
    if (got_offset_[mi]) throw EngineError("index: duplicate offset");
    got_offset_[mi] = 1;
    ++offsets_;
    local_[mi].offset = offset;
    int next = offset;
    if (mem()[mi].member) {
      own_index_ = next;
      next += own_weight_;
    }
    for (size_t c = 0; c < mem()[mi].child_ports.size(); ++c) {
      local_[mi].child_offset[c] = next;
      BitString f;
      f.push(static_cast<uint64_t>(next), width_);
      to_child(mi, static_cast<int>(c), f);
      next += local_[mi].child_count[c];
    }
  }

  int width_;
  int own_weight_;
  std::vector<TreeIndexing::Local> local_;
  std::vector<int> pending_;
  std::vector<char> got_offset_;
  size_t offsets_ = 0;
  int own_index_ = -1;
};

// Items are (index, length, payload padded to x bits).
struct ItemCodec {
  int index_bits;
  int length_bits;
  int x;
  int width() const { return index_bits + length_bits + x; }
  BitString encode(int index, const BitString& payload) const {
    if (static_cast<int64_t>(payload.size()) > x) {
      throw std::invalid_argument("token info exceeds x=" + std::to_string(x) +
                                  " bits");
    }
    BitString f;
    f.push(static_cast<uint64_t>(index), index_bits);
    f.push(payload.size(), length_bits);
    f.append(payload);
    size_t pad = x - payload.size();
    while (pad > 0) {
      const int w = pad >= 64 ? 64 : static_cast<int>(pad);
      f.push(0, w);
      pad -= w;
    }
    return f;
  }
  int index_of(const BitString& f) const {
    return static_cast<int>(f.read(0, index_bits));
  }
  BitString payload_of(const BitString& f) const {
    const size_t len = f.read(index_bits, length_bits);
    BitString p;
    p.append_range(f, index_bits + length_bits, len);
    return p;
  }
};

class GatherProgram : public TreeProgram {
 public:
  GatherProgram(const Graph& g, const ClusterViews& views, int node,
                int64_t budget, const ItemCodec& codec,
                const std::vector<TreeIndexing::Local>& local, int own_index,
                const BitString* own_info)
      : TreeProgram(g, views, node, FrameFormat::fixed_width(codec.width()),
                    budget),
        codec_(codec),
        local_(&local),
        own_index_(own_index),
        own_info_(own_info) {
    collected_.resize(mem().size());
    forwarded_.assign(mem().size(), 0);
  }

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0) {
      for (size_t i = 0; i < mem().size(); ++i) {
        if (mem()[i].member) {
          handle(static_cast<int>(i), codec_.encode(own_index_, *own_info_));
        }
      }
    }
    pump(in);
    flush(out);
  }

  const std::vector<BitString>& collected(int mi) const { return collected_[mi]; }
  int cluster(int mi) const { return mem()[mi].cluster; }
  bool is_root(int mi) const { return mem()[mi].parent_port < 0; }
  size_t memberships() const { return mem().size(); }

 protected:
  bool done() const override {
    for (size_t i = 0; i < mem().size(); ++i) {
      if (forwarded_[i] < (*local_)[i].subtree) return false;
    }
    return true;
  }
  void on_frame(int mi, int child, BitString& frame) override {
    if (child < 0) throw EngineError("gather: frame from the parent");
    handle(mi, frame);
  }

 private:
  void handle(int mi, const BitString& frame) {
    ++forwarded_[mi];
    if (mem()[mi].parent_port < 0) {
      collected_[mi].push_back(frame);
    } else {
      to_parent(mi, frame);
    }
  }

  ItemCodec codec_;
  const std::vector<TreeIndexing::Local>* local_;
  int own_index_;
  const BitString* own_info_;
  std::vector<std::vector<BitString>> collected_;
  std::vector<int> forwarded_;
};

class DisseminateProgram : public TreeProgram {
 public:
  DisseminateProgram(const Graph& g, const ClusterViews& views, int node,
                     int64_t budget, const ItemCodec& codec,
                     const std::vector<TreeIndexing::Local>& local,
                     int own_index,
                     const std::vector<std::vector<BitString>>& payload)
      : TreeProgram(g, views, node, FrameFormat::fixed_width(codec.width()),
                    budget),
        codec_(codec),
        local_(&local),
        own_index_(own_index),
        payload_(&payload) {
    seen_.assign(mem().size(), 0);
  }

  void on_round(NodeContext&, int64_t round, const Inbox& in,
                Outbox& out) override {
    if (round == 0) {
      for (size_t i = 0; i < mem().size(); ++i) {
        if (mem()[i].parent_port >= 0) continue;
        const auto& items = (*payload_)[mem()[i].cluster];
        if (static_cast<int>(items.size()) != (*local_)[i].subtree) {
          throw std::invalid_argument(
              "disseminate: payload count differs from cluster size");
        }
        for (int idx = 0; idx < static_cast<int>(items.size()); ++idx) {
          handle(static_cast<int>(i), codec_.encode(idx, items[idx]));
        }
      }
    }
    pump(in);
    flush(out);
  }

  const BitString& received() const { return received_; }

 protected:
  bool done() const override {
    for (size_t i = 0; i < mem().size(); ++i) {
      if (seen_[i] < (*local_)[i].subtree) return false;
    }
    return true;
  }
  void on_frame(int mi, int child, BitString& frame) override {
    if (child >= 0) throw EngineError("disseminate: frame from a child");
    handle(mi, frame);
  }

 private:
  void handle(int mi, const BitString& frame) {
    ++seen_[mi];
    const int idx = codec_.index_of(frame);
    if (mem()[mi].member && idx == own_index_) {
      received_ = codec_.payload_of(frame);
      return;
    }
    const auto& loc = (*local_)[mi];
    for (size_t c = 0; c < loc.child_offset.size(); ++c) {
      if (idx >= loc.child_offset[c] &&
          idx < loc.child_offset[c] + loc.child_count[c]) {
        to_child(mi, static_cast<int>(c), frame);
        return;
      }
    }
    throw EngineError("disseminate: no route for index " + std::to_string(idx));
  }

  ItemCodec codec_;
  const std::vector<TreeIndexing::Local>* local_;
  int own_index_;
  const std::vector<std::vector<BitString>>* payload_;
  std::vector<int> seen_;
  BitString received_;
};

const ClusterViews& ensure_views(const Graph& g, const ClusterCollection& cc,
                                 const ClusterViews* views,
                                 std::unique_ptr<ClusterViews>& holder) {
  if (views != nullptr) return *views;
  holder = std::make_unique<ClusterViews>(build_views(g, cc));
  return *holder;
}

int max_cluster_size(const ClusterCollection& cc) {
  int m = 1;
  for (const auto& c : cc.clusters) m = std::max(m, static_cast<int>(c.members.size()));
  return m;
}

}  // namespace

BitString BroadcastResult::member_value(const ClusterCollection& cc,
                                        int v) const {
  for (const auto& [c, value] : at[v]) {
    const auto& mem = cc.clusters[c].members;
    if (std::binary_search(mem.begin(), mem.end(), v)) return value;
  }
  return {};
}

BroadcastResult tree_broadcast(const Graph& g, const ClusterCollection& cc,
                               const SimConfig& cfg,
                               const std::vector<BitString>& payload,
                               int width, const ClusterViews* views) {
  if (width < 1) throw std::invalid_argument("broadcast width must be >= 1");
  if (payload.size() != cc.clusters.size()) {
    throw std::invalid_argument("broadcast: one payload per cluster required");
  }
  for (const auto& p : payload) {
    if (static_cast<int64_t>(p.size()) != width) {
      throw std::invalid_argument("broadcast payload is not " +
                                  std::to_string(width) + " bits");
    }
  }
  std::unique_ptr<ClusterViews> holder;
  const ClusterViews& v = ensure_views(g, cc, views, holder);
  const int64_t budget = cfg.bandwidth();
  auto r = run(g,
               [&](int node) {
                 return std::make_unique<BroadcastProgram>(g, v, node, budget,
                                                           payload, width);
               },
               cfg);
  BroadcastResult out;
  out.at.resize(g.size());
  for (int node = 0; node < g.size(); ++node) {
    out.at[node] = r.program<BroadcastProgram>(node).values();
  }
  out.metrics = std::move(r.metrics);
  return out;
}

AggregateResult tree_aggregate_at(const Graph& g, const ClusterCollection& cc,
                                  const SimConfig& cfg, AggregateKind kind,
                                  const TreeInput& input, int width,
                                  int max_special, const ClusterViews* views) {
  if (width < 1 || width > 64) {
    throw std::invalid_argument("aggregate width must be in [1, 64]");
  }
  std::unique_ptr<ClusterViews> holder;
  const ClusterViews& v = ensure_views(g, cc, views, holder);
  if (kind == AggregateKind::kConvergecast && max_special > 0) {
    std::vector<int> count(cc.clusters.size(), 0);
    for (int node = 0; node < g.size(); ++node) {
      for (const auto& m : v.at[node]) {
        if (input(node, m.cluster) && ++count[m.cluster] > max_special) {
          throw std::invalid_argument(
              "convergecast: cluster " + cc.clusters[m.cluster].id.to_string() +
              " has more than " + std::to_string(max_special) +
              " special nodes");
        }
      }
    }
  }
  const int64_t budget = cfg.bandwidth();
  auto r = run(g,
               [&](int node) {
                 return std::make_unique<AggregateProgram>(g, v, node, budget,
                                                           kind, input, width);
               },
               cfg);
  AggregateResult out;
  out.value.assign(cc.clusters.size(), 0);
  out.items.assign(cc.clusters.size(), {});
  for (int node = 0; node < g.size(); ++node) {
    const auto& p = r.program<AggregateProgram>(node);
    for (size_t i = 0; i < p.memberships(); ++i) {
      if (!p.is_root(static_cast<int>(i))) continue;
      const int c = p.cluster(static_cast<int>(i));
      out.value[c] = p.result(static_cast<int>(i));
      out.items[c] = p.items(static_cast<int>(i));
      std::sort(out.items[c].begin(), out.items[c].end());
    }
  }
  out.metrics = std::move(r.metrics);
  return out;
}

AggregateResult tree_aggregate(const Graph& g, const ClusterCollection& cc,
                               const SimConfig& cfg, AggregateKind kind,
                               const std::vector<std::optional<uint64_t>>& input,
                               int width, int max_special) {
  if (static_cast<int>(input.size()) != g.size()) {
    throw std::invalid_argument("aggregate: one input slot per node required");
  }
  const std::vector<int> owner = cc.owner(g.size());
  if (kind != AggregateKind::kConvergecast) {
    for (int v = 0; v < g.size(); ++v) {
      if (owner[v] >= 0 && !input[v]) {
        throw std::invalid_argument("aggregate: member " + std::to_string(v) +
                                    " has no input");
      }
    }
  }
  if (kind == AggregateKind::kConvergecast && max_special <= 0) {
    throw std::invalid_argument("convergecast needs a positive special limit");
  }
  return tree_aggregate_at(
      g, cc, cfg, kind,
      [&](int v, int c) -> std::optional<uint64_t> {
        if (owner[v] != c) return std::nullopt;
        return input[v];
      },
      width, max_special);
}

TreeIndexing assign_cluster_indices(const Graph& g,
                                    const ClusterCollection& cc,
                                    const SimConfig& cfg,
                                    const ClusterViews* views,
                                    const std::vector<int>* weight) {
  std::unique_ptr<ClusterViews> holder;
  const ClusterViews& v = ensure_views(g, cc, views, holder);
  int64_t total = max_cluster_size(cc);
  if (weight != nullptr) {
    if (static_cast<int>(weight->size()) != g.size()) {
      throw std::invalid_argument("indexing: one weight per node required");
    }
    std::vector<int64_t> sum(cc.clusters.size(), 0);
    for (int c = 0; c < static_cast<int>(cc.clusters.size()); ++c) {
      for (int m : cc.clusters[c].members) {
        if ((*weight)[m] < 0) throw std::invalid_argument("negative weight");
        sum[c] += (*weight)[m];
      }
    }
    total = std::max<int64_t>(1, *std::max_element(sum.begin(), sum.end()));
  }
  const int width = std::max(1, bits_for(static_cast<uint64_t>(total) + 1));
  const int64_t budget = cfg.bandwidth();
  auto r = run(g,
               [&](int node) {
                 return std::make_unique<IndexProgram>(
                     g, v, node, budget, width,
                     weight == nullptr ? 1 : (*weight)[node]);
               },
               cfg);
  TreeIndexing out;
  out.index.assign(g.size(), -1);
  out.size.assign(cc.clusters.size(), 0);
  out.local.resize(g.size());
  for (int node = 0; node < g.size(); ++node) {
    const auto& p = r.program<IndexProgram>(node);
    out.index[node] = p.own_index();
    out.local[node] = p.local();
    for (size_t i = 0; i < v.at[node].size(); ++i) {
      if (v.at[node][i].parent_port < 0) {
        out.size[v.at[node][i].cluster] = p.local()[i].subtree;
      }
    }
  }
  out.metrics = std::move(r.metrics);
  return out;
}

GatherResult token_learning_gather(const Graph& g, const ClusterCollection& cc,
                                   const SimConfig& cfg,
                                   const std::vector<BitString>& info, int x,
                                   const ClusterViews* views) {
  if (x < 1) throw std::invalid_argument("gather: x must be >= 1");
  if (static_cast<int>(info.size()) != g.size()) {
    throw std::invalid_argument("gather: one info slot per node required");
  }
  const std::vector<int> owner = cc.owner(g.size());
  for (int v = 0; v < g.size(); ++v) {
    if (owner[v] >= 0 && static_cast<int64_t>(info[v].size()) > x) {
      throw std::invalid_argument("gather: info of node " + std::to_string(v) +
                                  " exceeds x=" + std::to_string(x) + " bits");
    }
  }
  std::unique_ptr<ClusterViews> holder;
  const ClusterViews& vw = ensure_views(g, cc, views, holder);
  GatherResult out;
  out.indexing = assign_cluster_indices(g, cc, cfg, &vw);
  const ItemCodec codec{bits_for(static_cast<uint64_t>(max_cluster_size(cc))),
                        bits_for(static_cast<uint64_t>(x) + 1), x};
  const int64_t budget = cfg.bandwidth();
  auto r = run(g,
               [&](int node) {
                 return std::make_unique<GatherProgram>(
                     g, vw, node, budget, codec, out.indexing.local[node],
                     out.indexing.index[node], &info[node]);
               },
               cfg);
  out.info.assign(cc.clusters.size(), {});
  out.member_at.assign(cc.clusters.size(), {});
  for (int c = 0; c < static_cast<int>(cc.clusters.size()); ++c) {
    out.info[c].resize(out.indexing.size[c]);
    out.member_at[c].assign(out.indexing.size[c], -1);
  }
  for (int node = 0; node < g.size(); ++node) {
    if (owner[node] >= 0) out.member_at[owner[node]][out.indexing.index[node]] = node;
    const auto& p = r.program<GatherProgram>(node);
    for (size_t i = 0; i < p.memberships(); ++i) {
      if (!p.is_root(static_cast<int>(i))) continue;
      const int c = p.cluster(static_cast<int>(i));
      for (const auto& f : p.collected(static_cast<int>(i))) {
        out.info[c][codec.index_of(f)] = codec.payload_of(f);
      }
    }
  }
  out.metrics = out.indexing.metrics;
  out.metrics.absorb(r.metrics);
  return out;
}

DisseminateResult token_learning_disseminate(
    const Graph& g, const ClusterCollection& cc, const SimConfig& cfg,
    const std::vector<std::vector<BitString>>& payload, int x,
    const TreeIndexing* indexing, const ClusterViews* views) {
  if (x < 1) throw std::invalid_argument("disseminate: x must be >= 1");
  if (payload.size() != cc.clusters.size()) {
    throw std::invalid_argument("disseminate: one payload list per cluster");
  }
  std::unique_ptr<ClusterViews> holder;
  const ClusterViews& vw = ensure_views(g, cc, views, holder);
  DisseminateResult out;
  TreeIndexing own;
  if (indexing == nullptr) {
    own = assign_cluster_indices(g, cc, cfg, &vw);
    indexing = &own;
    out.metrics = own.metrics;
  }
  const ItemCodec codec{bits_for(static_cast<uint64_t>(max_cluster_size(cc))),
                        bits_for(static_cast<uint64_t>(x) + 1), x};
  const int64_t budget = cfg.bandwidth();
  auto r = run(g,
               [&](int node) {
                 return std::make_unique<DisseminateProgram>(
                     g, vw, node, budget, codec, indexing->local[node],
                     indexing->index[node], payload);
               },
               cfg);
  out.received.resize(g.size());
  for (int node = 0; node < g.size(); ++node) {
    out.received[node] = r.program<DisseminateProgram>(node).received();
  }
  out.metrics.absorb(r.metrics);
  return out;
}

}  // namespace congestlab
