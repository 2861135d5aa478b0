#pragma once

// Root-preserving isomorphism search between small rooted graphs, optionally
// minimizing the largest mark discrepancy over all isomorphisms.

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"

namespace sparse_nash {

struct IsoOptions {
  std::size_t max_vertices = 200;
  /// Search nodes before giving up with a capacity error.
  std::size_t node_limit = 20'000'000;
};

struct IsoMatch {
  bool found = false;
  /// witness[u] = image of vertex u of the first graph.
  std::vector<VertexId> witness;
  /// max_v cost(v, witness[v]) of the best witness (marked search only).
  double cost = 0.0;
};

namespace detail {

inline std::vector<std::size_t> bfs_depths(const FiniteGraph& g, VertexId root, std::vector<VertexId>* order) {
  std::vector<std::size_t> d(g.size(), kInfiniteDistance);
  std::deque<VertexId> q{root};
  d[static_cast<std::size_t>(root)] = 0;
  while (!q.empty()) {
    const VertexId u = q.front();
    q.pop_front();
    if (order) order->push_back(u);
    for (auto w : g.neighbors(u))
      if (d[static_cast<std::size_t>(w)] == kInfiniteDistance) {
        d[static_cast<std::size_t>(w)] = d[static_cast<std::size_t>(u)] + 1;
        q.push_back(w);
      }
  }
  return d;
}

class IsoSearch {
 public:
  using Cost = std::function<double(VertexId, VertexId)>;

  IsoSearch(const FiniteGraph& g1, const FiniteGraph& g2, const Cost* cost, double ceiling, const IsoOptions& opts)
      : g1_(g1), g2_(g2), cost_(cost), best_(ceiling), opts_(opts) {}

  IsoMatch run() {
    IsoMatch out;
    const std::size_t n = g1_.size();
    if (n > opts_.max_vertices || g2_.size() > opts_.max_vertices)
      throw CapacityError("isomorphism search: graph exceeds " + std::to_string(opts_.max_vertices) + " vertices");
    if (n != g2_.size() || g1_.edge_count() != g2_.edge_count() || n == 0) return out;
    const VertexId r1 = g1_.root.value_or(0), r2 = g2_.root.value_or(0);
    d1_ = bfs_depths(g1_, r1, &order_);
    d2_ = bfs_depths(g2_, r2, nullptr);
    if (order_.size() != n) throw Error("isomorphism search: graph is not connected");
    // Depth/degree signatures must agree as multisets.
    std::map<std::pair<std::size_t, std::size_t>, long> sig;
    for (std::size_t v = 0; v < n; ++v) {
      ++sig[{d1_[v], g1_.degree(static_cast<VertexId>(v))}];
      --sig[{d2_[v], g2_.degree(static_cast<VertexId>(v))}];
    }
    for (auto& [key, c] : sig)
      if (c != 0) return out;
    parent_.assign(n, -1);
    for (std::size_t i = 1; i < n; ++i) {
      const VertexId u = order_[i];
      for (auto w : g1_.neighbors(u))
        if (d1_[static_cast<std::size_t>(w)] + 1 == d1_[static_cast<std::size_t>(u)]) {
          parent_[static_cast<std::size_t>(u)] = w;
          break;
        }
    }
    map_.assign(n, -1);
    inverse_.assign(n, -1);
    recurse(0, 0.0, r2);
    if (found_) {
      out.found = true;
      out.witness = witness_;
      out.cost = best_;
    }
    return out;
  }

 private:
  bool consistent(VertexId u, VertexId c) const {
    std::size_t mapped1 = 0, mapped2 = 0;
    for (auto w : g1_.neighbors(u)) {
      const VertexId img = map_[static_cast<std::size_t>(w)];
      if (img < 0) continue;
      ++mapped1;
      if (!g2_.adjacent(c, img)) return false;
    }
    for (auto w : g2_.neighbors(c))
      if (inverse_[static_cast<std::size_t>(w)] >= 0) ++mapped2;
    return mapped1 == mapped2;
  }

  void recurse(std::size_t pos, double current, VertexId root2) {
    if (++nodes_ > opts_.node_limit)
      throw CapacityError("isomorphism search exceeded " + std::to_string(opts_.node_limit) + " nodes");
    if (pos == order_.size()) {
      found_ = true;
      witness_ = map_;
      best_ = current;
      return;
    }
    const VertexId u = order_[pos];
    const auto ui = static_cast<std::size_t>(u);
    std::vector<VertexId> candidates;
    if (pos == 0) {
      candidates.push_back(root2);
    } else {
      for (auto c : g2_.neighbors(map_[static_cast<std::size_t>(parent_[ui])])) candidates.push_back(c);
    }
    for (auto c : candidates) {
      const auto ci = static_cast<std::size_t>(c);
      if (inverse_[ci] >= 0 || d2_[ci] != d1_[ui] || g2_.degree(c) != g1_.degree(u)) continue;
      if (!consistent(u, c)) continue;
      double next = current;
      if (cost_) {
        next = std::max(current, (*cost_)(u, c));
        if (next >= best_) continue;
      }
      map_[ui] = c;
      inverse_[ci] = u;
      recurse(pos + 1, next, root2);
      map_[ui] = -1;
      inverse_[ci] = -1;
      if (found_ && (!cost_ || best_ <= 0.0)) return;
    }
  }

  const FiniteGraph& g1_;
  const FiniteGraph& g2_;
  const Cost* cost_;
  double best_;
  IsoOptions opts_;
  std::vector<std::size_t> d1_, d2_;
  std::vector<VertexId> order_, parent_, map_, inverse_, witness_;
  bool found_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace detail

/// Root-preserving isomorphism test; roots default to vertex 0.
inline IsoMatch ball_isomorphic(const FiniteGraph& g1, const FiniteGraph& g2, const IsoOptions& opts = {}) {
  return detail::IsoSearch(g1, g2, nullptr, std::numeric_limits<double>::infinity(), opts).run();
}

/// min over root-preserving isomorphisms of max_v cost(v, phi(v)), searched
/// only below `ceiling`; not found means no isomorphism beats the ceiling.
inline IsoMatch best_marked_isomorphism(const FiniteGraph& g1, const FiniteGraph& g2,
                                        const std::function<double(VertexId, VertexId)>& cost, double ceiling = 1.0,
                                        const IsoOptions& opts = {}) {
  return detail::IsoSearch(g1, g2, &cost, ceiling, opts).run();
}

}  // namespace sparse_nash
