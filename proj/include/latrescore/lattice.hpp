// latrescore/lattice.hpp
//
// Copyright 2026 The latrescore Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "latrescore/common.hpp"
#include "latrescore/vocab.hpp"

namespace latrescore {

/// Weighted arc of a word lattice.  Costs are negative natural logs of the
/// acoustic and language model probabilities.
struct Arc {
  NodeId from = 0;
  NodeId to = 0;
  WordId word = Vocabulary::kEps;
  double am_cost = 0.0;
  double lm_cost = 0.0;

  bool operator==(const Arc&) const = default;
};

/// Directed acyclic word graph.  Nodes are dense ids [0, num_nodes); arcs keep
/// their insertion order, which is the tie-break order used everywhere.
struct Lattice {
  std::string id = "lat";
  int num_nodes = 0;
  NodeId start = 0;
  std::vector<Arc> arcs;
  std::vector<NodeId> finals;

  bool is_final(NodeId n) const {
    return std::find(finals.begin(), finals.end(), n) != finals.end();
  }

  bool operator==(const Lattice&) const = default;
};

/// Adjacency view over a lattice, by arc index.
struct LatticeIndex {
  std::vector<std::vector<int>> out;  // per node, arc indices, ascending
  std::vector<std::vector<int>> in;

  explicit LatticeIndex(const Lattice& lat)
      : out(lat.num_nodes), in(lat.num_nodes) {
    for (int i = 0; i < static_cast<int>(lat.arcs.size()); ++i) {
      const Arc& a = lat.arcs[i];
      LR_CHECK(a.from >= 0 && a.from < lat.num_nodes && a.to >= 0 &&
                   a.to < lat.num_nodes,
               "arc " << i << " references node out of range");
      out[a.from].push_back(i);
      in[a.to].push_back(i);
    }
  }
};

/// Topological order of all nodes, start first, lowest node id first among
/// ready nodes.  Throws if the lattice has a cycle.
inline std::vector<NodeId> topo_sort(const Lattice& lat) {
  LatticeIndex idx(lat);
  std::vector<int> indeg(lat.num_nodes, 0);
  for (const Arc& a : lat.arcs) ++indeg[a.to];

  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId n = 0; n < lat.num_nodes; ++n) {
    if (indeg[n] == 0) ready.push(n);
  }
  std::vector<NodeId> order;
  order.reserve(lat.num_nodes);
  while (!ready.empty()) {
    const NodeId n = ready.top();
    ready.pop();
    order.push_back(n);
    for (int ai : idx.out[n]) {
      if (--indeg[lat.arcs[ai].to] == 0) ready.push(lat.arcs[ai].to);
    }
  }
  LR_CHECK(static_cast<int>(order.size()) == lat.num_nodes,
           "lattice has a cycle");
  // Start must come first; any node sorting before it would be unreachable.
  if (!order.empty() && order.front() != lat.start) {
    auto it = std::find(order.begin(), order.end(), lat.start);
    std::rotate(order.begin(), it, it + 1);
  }
  return order;
}

/// Structural validation: acyclic, start has no incoming arcs, every node
/// reachable from start and co-reachable to a final.
inline void validate(const Lattice& lat) {
  LR_CHECK(lat.num_nodes > 0, "lattice " << lat.id << ": no nodes");
  LR_CHECK(lat.start >= 0 && lat.start < lat.num_nodes,
           "lattice " << lat.id << ": bad start node");
  LR_CHECK(!lat.finals.empty(), "lattice " << lat.id << ": no final node");
  for (NodeId f : lat.finals) {
    LR_CHECK(f >= 0 && f < lat.num_nodes,
             "lattice " << lat.id << ": bad final node " << f);
  }
  LatticeIndex idx(lat);
  LR_CHECK(idx.in[lat.start].empty(),
           "lattice " << lat.id << ": start node has incoming arcs");
  for (const Arc& a : lat.arcs) {
    LR_CHECK(std::isfinite(a.am_cost) && std::isfinite(a.lm_cost),
             "lattice " << lat.id << ": non-finite arc cost");
  }
  topo_sort(lat);  // throws on cycle

  std::vector<char> fwd(lat.num_nodes, 0), bwd(lat.num_nodes, 0);
  std::deque<NodeId> q{lat.start};
  fwd[lat.start] = 1;
  while (!q.empty()) {
    NodeId n = q.front();
    q.pop_front();
    for (int ai : idx.out[n]) {
      if (!fwd[lat.arcs[ai].to]) {
        fwd[lat.arcs[ai].to] = 1;
        q.push_back(lat.arcs[ai].to);
      }
    }
  }
  for (NodeId f : lat.finals) {
    if (!bwd[f]) {
      bwd[f] = 1;
      q.push_back(f);
    }
  }
  while (!q.empty()) {
    NodeId n = q.front();
    q.pop_front();
    for (int ai : idx.in[n]) {
      if (!bwd[lat.arcs[ai].from]) {
        bwd[lat.arcs[ai].from] = 1;
        q.push_back(lat.arcs[ai].from);
      }
    }
  }
  for (NodeId n = 0; n < lat.num_nodes; ++n) {
    LR_CHECK(fwd[n], "lattice " << lat.id << ": node " << n << " unreachable");
    LR_CHECK(bwd[n], "lattice " << lat.id << ": node " << n
                                << " cannot reach a final node");
  }
}

inline double arc_cost(const Arc& a, double lm_scale, double wip) {
  return a.am_cost + lm_scale * a.lm_cost +
         (a.word != Vocabulary::kEps ? wip : 0.0);
}

/// A scored lattice path.
struct LatticePath {
  std::vector<int> arcs;        // arc indices along the path
  std::vector<WordId> words;    // non-epsilon arc words
  double am = 0.0;
  double lm = 0.0;
  double cost = 0.0;            // am + lm_scale*lm + wip*|words|
};

/// Minimum-cost path under cost(a) = am + lm_scale*lm, plus a per-word
/// insertion penalty.  Ties resolved by lowest arc index.
inline LatticePath best_path(const Lattice& lat, double lm_scale = 1.0,
                             double wip = 0.0) {
  LR_CHECK(lm_scale >= 0, "best_path: lm_scale must be >= 0");
  LatticeIndex idx(lat);
  const auto order = topo_sort(lat);
  std::vector<double> cost(lat.num_nodes, kInfCost);
  std::vector<int> back(lat.num_nodes, -1);
  cost[lat.start] = 0.0;
  for (NodeId n : order) {
    if (cost[n] == kInfCost) continue;
    for (int ai : idx.out[n]) {
      const Arc& a = lat.arcs[ai];
      const double c = cost[n] + arc_cost(a, lm_scale, wip);
      if (c < cost[a.to]) {
        cost[a.to] = c;
        back[a.to] = ai;
      }
    }
  }
  // Re-derive backpointers in arc index order so ties go to the lowest arc.
  for (int ai = static_cast<int>(lat.arcs.size()) - 1; ai >= 0; --ai) {
    const Arc& a = lat.arcs[ai];
    if (cost[a.from] != kInfCost &&
        cost[a.from] + arc_cost(a, lm_scale, wip) == cost[a.to]) {
      back[a.to] = ai;
    }
  }
  NodeId best_final = -1;
  for (NodeId f : lat.finals) {
    if (cost[f] < kInfCost &&
        (best_final < 0 || cost[f] < cost[best_final])) {
      best_final = f;
    }
  }
  LR_CHECK(best_final >= 0, "best_path: no final node reachable");

  LatticePath p;
  p.cost = cost[best_final];
  for (NodeId n = best_final; back[n] >= 0; n = lat.arcs[back[n]].from) {
    p.arcs.push_back(back[n]);
  }
  std::reverse(p.arcs.begin(), p.arcs.end());
  for (int ai : p.arcs) {
    const Arc& a = lat.arcs[ai];
    p.am += a.am_cost;
    p.lm += a.lm_cost;
    if (a.word != Vocabulary::kEps) p.words.push_back(a.word);
  }
  return p;
}

/// K cheapest paths, unique by their non-epsilon word sequence, sorted by
/// cost.  Exact A* over partial paths with the backward best cost as the
/// (consistent) heuristic, so paths pop in true cost order.
inline std::vector<LatticePath> kbest_paths(const Lattice& lat, int K,
                                            double lm_scale = 1.0,
                                            double wip = 0.0) {
  LR_CHECK(K >= 1, "kbest_paths: K must be >= 1");
  LatticeIndex idx(lat);
  const auto order = topo_sort(lat);

  // Backward best cost to any final.
  std::vector<double> beta(lat.num_nodes, kInfCost);
  for (NodeId f : lat.finals) beta[f] = 0.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (int ai : idx.out[*it]) {
      const Arc& a = lat.arcs[ai];
      beta[*it] = std::min(beta[*it], arc_cost(a, lm_scale, wip) + beta[a.to]);
    }
  }
  LR_CHECK(beta[lat.start] < kInfCost, "kbest_paths: no final reachable");

  struct Partial {
    double f;                 // g + beta[node]; exact completion lower bound
    double g;
    NodeId node;
    bool complete;
    std::vector<int> arcs;
    bool operator>(const Partial& o) const {
      if (f != o.f) return f > o.f;
      if (complete != o.complete) return !complete;  // complete pops first
      return arcs > o.arcs;   // deterministic: lexicographically lowest first
    }
  };
  // beta is the true minimum suffix cost, so f never decreases along an
  // expansion and complete entries (f == final cost) pop in sorted order,
  // even with negative arc costs.
  std::priority_queue<Partial, std::vector<Partial>, std::greater<>> pq;
  pq.push({beta[lat.start], 0.0, lat.start, false, {}});

  std::vector<LatticePath> out;
  std::set<std::vector<WordId>> seen;
  while (!pq.empty() && static_cast<int>(out.size()) < K) {
    Partial p = pq.top();
    pq.pop();
    if (p.complete) {
      LatticePath lp;
      lp.arcs = std::move(p.arcs);
      lp.cost = p.g;
      for (int ai : lp.arcs) {
        const Arc& a = lat.arcs[ai];
        lp.am += a.am_cost;
        lp.lm += a.lm_cost;
        if (a.word != Vocabulary::kEps) lp.words.push_back(a.word);
      }
      if (seen.insert(lp.words).second) out.push_back(std::move(lp));
      continue;
    }
    if (lat.is_final(p.node)) {
      pq.push({p.g, p.g, p.node, true, p.arcs});
    }
    for (int ai : idx.out[p.node]) {
      const Arc& a = lat.arcs[ai];
      if (beta[a.to] == kInfCost) continue;
      Partial q;
      q.g = p.g + arc_cost(a, lm_scale, wip);
      q.f = q.g + beta[a.to];
      q.node = a.to;
      q.complete = false;
      q.arcs = p.arcs;
      q.arcs.push_back(ai);
      pq.push(std::move(q));
    }
  }
  return out;
}

/// Per-node path weights in the log domain.  max_log[q] is the log
/// probability of the single best path from start to q (negated cost);
/// sum_log[q] is the log of the summed probability of all such paths.
struct NodeWeights {
  std::vector<double> max_log;
  std::vector<double> sum_log;
};

inline NodeWeights forward_weights(const Lattice& lat, double lm_scale = 1.0) {
  LatticeIndex idx(lat);
  const auto order = topo_sort(lat);
  NodeWeights w;
  w.max_log.assign(lat.num_nodes, -kInfCost);
  w.sum_log.assign(lat.num_nodes, -kInfCost);
  w.max_log[lat.start] = 0.0;
  w.sum_log[lat.start] = 0.0;
  for (NodeId n : order) {
    if (w.max_log[n] == -kInfCost) continue;
    for (int ai : idx.out[n]) {
      const Arc& a = lat.arcs[ai];
      const double lp = -arc_cost(a, lm_scale, 0.0);
      w.max_log[a.to] = std::max(w.max_log[a.to], w.max_log[n] + lp);
      w.sum_log[a.to] = log_add(w.sum_log[a.to], w.sum_log[n] + lp);
    }
  }
  return w;
}

/// Mirror image of forward_weights: weights of path suffixes to any final.
inline NodeWeights backward_weights(const Lattice& lat, double lm_scale = 1.0) {
  LatticeIndex idx(lat);
  const auto order = topo_sort(lat);
  NodeWeights w;
  w.max_log.assign(lat.num_nodes, -kInfCost);
  w.sum_log.assign(lat.num_nodes, -kInfCost);
  for (NodeId f : lat.finals) {
    w.max_log[f] = 0.0;
    w.sum_log[f] = 0.0;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (int ai : idx.out[*it]) {
      const Arc& a = lat.arcs[ai];
      if (w.max_log[a.to] == -kInfCost) continue;
      const double lp = -arc_cost(a, lm_scale, 0.0);
      w.max_log[*it] = std::max(w.max_log[*it], lp + w.max_log[a.to]);
      w.sum_log[*it] = log_add(w.sum_log[*it], lp + w.sum_log[a.to]);
    }
  }
  return w;
}

/// Restricts the lattice to the given arc set, dropping nodes that are no
/// longer on a start-to-final path, and renumbering densely.  Keeps relative
/// arc order.
inline Lattice sublattice(const Lattice& lat, const std::vector<char>& keep) {
  // Iterate reachability until stable over the kept arc set.
  std::vector<char> karc = keep;
  std::vector<int> old_of;
  std::vector<NodeId> remap;
  while (true) {
    std::vector<std::vector<int>> out(lat.num_nodes), in(lat.num_nodes);
    for (int i = 0; i < static_cast<int>(lat.arcs.size()); ++i) {
      if (!karc[i]) continue;
      out[lat.arcs[i].from].push_back(i);
      in[lat.arcs[i].to].push_back(i);
    }
    std::vector<char> fwd(lat.num_nodes, 0), bwd(lat.num_nodes, 0);
    std::deque<NodeId> q{lat.start};
    fwd[lat.start] = 1;
    while (!q.empty()) {
      NodeId n = q.front();
      q.pop_front();
      for (int ai : out[n]) {
        if (!fwd[lat.arcs[ai].to]) {
          fwd[lat.arcs[ai].to] = 1;
          q.push_back(lat.arcs[ai].to);
        }
      }
    }
    for (NodeId f : lat.finals) {
      if (fwd[f] && !bwd[f]) {
        bwd[f] = 1;
        q.push_back(f);
      }
    }
    while (!q.empty()) {
      NodeId n = q.front();
      q.pop_front();
      for (int ai : in[n]) {
        if (!bwd[lat.arcs[ai].from]) {
          bwd[lat.arcs[ai].from] = 1;
          q.push_back(lat.arcs[ai].from);
        }
      }
    }
    bool changed = false;
    for (int i = 0; i < static_cast<int>(lat.arcs.size()); ++i) {
      if (karc[i] && (!fwd[lat.arcs[i].from] || !bwd[lat.arcs[i].to] ||
                      !bwd[lat.arcs[i].from] || !fwd[lat.arcs[i].to])) {
        karc[i] = 0;
        changed = true;
      }
    }
    if (!changed) {
      remap.assign(lat.num_nodes, -1);
      NodeId next = 0;
      for (NodeId n = 0; n < lat.num_nodes; ++n) {
        if (fwd[n] && bwd[n]) remap[n] = next++;
      }
      break;
    }
  }
  Lattice out;
  out.id = lat.id;
  out.start = remap[lat.start];
  LR_CHECK(out.start >= 0, "sublattice: start node pruned away");
  NodeId maxn = 0;
  for (NodeId n = 0; n < lat.num_nodes; ++n) {
    maxn = std::max(maxn, remap[n] + 1);
  }
  out.num_nodes = maxn;
  for (int i = 0; i < static_cast<int>(lat.arcs.size()); ++i) {
    if (!karc[i]) continue;
    Arc a = lat.arcs[i];
    a.from = remap[a.from];
    a.to = remap[a.to];
    out.arcs.push_back(a);
  }
  for (NodeId f : lat.finals) {
    if (remap[f] >= 0) out.finals.push_back(remap[f]);
  }
  std::sort(out.finals.begin(), out.finals.end());
  out.finals.erase(std::unique(out.finals.begin(), out.finals.end()),
                   out.finals.end());
  return out;
}

/// Forward-backward density pruning.  Arcs are ranked by the cost of the best
/// full path through them; word-bearing arcs are kept cheapest-first until
/// their count reaches density * reference length (the best path's word count
/// when no reference length is given).  Epsilon arcs do not count against the
/// budget but survive only if they are at least as good as the worst kept
/// word arc.  The best path always survives.
inline Lattice prune_density(const Lattice& lat, double density,
                             int reference_words = 0, double lm_scale = 1.0) {
  LR_CHECK(density > 0, "prune_density: density must be > 0");
  const LatticePath best = best_path(lat, lm_scale, 0.0);
  const int ref = reference_words > 0
                      ? reference_words
                      : std::max<int>(1, static_cast<int>(best.words.size()));
  const auto budget = static_cast<std::size_t>(density * ref);

  const NodeWeights fw = forward_weights(lat, lm_scale);
  const NodeWeights bw = backward_weights(lat, lm_scale);
  const int n_arcs = static_cast<int>(lat.arcs.size());

  std::vector<double> through(n_arcs);
  std::vector<int> word_arcs;
  for (int i = 0; i < n_arcs; ++i) {
    const Arc& a = lat.arcs[i];
    through[i] = -fw.max_log[a.from] + arc_cost(a, lm_scale, 0.0) -
                 bw.max_log[a.to];
    if (a.word != Vocabulary::kEps) word_arcs.push_back(i);
  }
  std::sort(word_arcs.begin(), word_arcs.end(), [&](int x, int y) {
    return through[x] != through[y] ? through[x] < through[y] : x < y;
  });

  std::vector<char> keep(n_arcs, 0);
  double thresh = -kInfCost;
  for (std::size_t r = 0; r < word_arcs.size() && r < budget; ++r) {
    keep[word_arcs[r]] = 1;
    thresh = std::max(thresh, through[word_arcs[r]]);
  }
  if (word_arcs.size() <= budget) thresh = kInfCost;
  for (int i = 0; i < n_arcs; ++i) {
    if (lat.arcs[i].word == Vocabulary::kEps && through[i] <= thresh) {
      keep[i] = 1;
    }
  }
  for (int ai : best.arcs) keep[ai] = 1;
  return sublattice(lat, keep);
}

/// Splits nodes until all paths into a node share the same trailing
/// (order - 1) words.  Epsilon and non-speech words are transparent: they do
/// not advance the suffix.  The weighted path set is preserved exactly.
inline Lattice expand_ngram(const Lattice& lat, int order,
                            const Vocabulary& vocab) {
  LR_CHECK(order >= 1, "expand_ngram: order must be >= 1");
  validate(lat);
  LatticeIndex idx(lat);
  const int hist = order - 1;

  using Key = std::pair<NodeId, std::vector<WordId>>;
  std::map<Key, NodeId> ids;
  std::deque<Key> work;
  Lattice out;
  out.id = lat.id;

  auto intern = [&](const Key& k) {
    auto it = ids.find(k);
    if (it != ids.end()) return it->second;
    const NodeId id = out.num_nodes++;
    ids.emplace(k, id);
    work.push_back(k);
    if (lat.is_final(k.first)) out.finals.push_back(id);
    return id;
  };

  const Key start_key{lat.start, {}};
  out.start = intern(start_key);
  while (!work.empty()) {
    const Key key = work.front();
    work.pop_front();
    const NodeId self = ids.at(key);
    for (int ai : idx.out[key.first]) {
      const Arc& a = lat.arcs[ai];
      std::vector<WordId> h = key.second;
      const bool transparent =
          a.word == Vocabulary::kEps || vocab.is_nonspeech(a.word);
      if (!transparent && hist > 0) {
        h.push_back(a.word);
        if (static_cast<int>(h.size()) > hist) h.erase(h.begin());
      }
      Arc na = a;
      na.from = self;
      na.to = intern({a.to, std::move(h)});
      out.arcs.push_back(na);
    }
  }
  std::sort(out.finals.begin(), out.finals.end());
  return out;
}

}  // namespace latrescore
