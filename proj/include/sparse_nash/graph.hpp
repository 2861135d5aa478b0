#pragma once

// Finite and lazily generated locally finite graphs: balls, boundaries,
// subgraph distances and the degree-normalized local aggregate.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ranges>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sparse_nash/error.hpp"
#include "sparse_nash/scenario.hpp"

namespace sparse_nash {

using VertexId = std::int64_t;
using Edge = std::pair<VertexId, VertexId>;

inline constexpr std::size_t kDefaultBallCap = 1'000'000;
inline constexpr std::size_t kInfiniteDistance = std::numeric_limits<std::size_t>::max();

/// Simple undirected graph on vertices 0..n-1, stored as sorted CSR adjacency.
class FiniteGraph {
 public:
  FiniteGraph() = default;

  FiniteGraph(std::size_t n, std::span<const Edge> edges) {
    std::vector<std::vector<VertexId>> adj(n);
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
        throw Error("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
      if (u == v) throw Error("self-loop at vertex " + std::to_string(u));
      adj[static_cast<std::size_t>(u)].push_back(v);
      adj[static_cast<std::size_t>(v)].push_back(u);
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
      auto& row = adj[v];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      offsets_[v + 1] = offsets_[v] + row.size();
    }
    targets_.reserve(offsets_[n]);
    for (auto& row : adj) targets_.insert(targets_.end(), row.begin(), row.end());
  }

  FiniteGraph(std::size_t n, std::initializer_list<Edge> edges)
      : FiniteGraph(n, std::span<const Edge>(edges.begin(), edges.size())) {}

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return targets_.size() / 2; }
  bool contains(VertexId v) const { return v >= 0 && static_cast<std::size_t>(v) < size(); }

  std::span<const VertexId> neighbors(VertexId v) const {
    const auto i = static_cast<std::size_t>(v);
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(VertexId v) const {
    const auto i = static_cast<std::size_t>(v);
    return offsets_[i + 1] - offsets_[i];
  }
  bool adjacent(VertexId u, VertexId v) const {
    auto n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
  }
  std::size_t max_degree() const {
    std::size_t d = 0;
    for (std::size_t v = 0; v < size(); ++v) d = std::max(d, degree(static_cast<VertexId>(v)));
    return d;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t u = 0; u < size(); ++u)
      for (auto v : neighbors(static_cast<VertexId>(u)))
        if (static_cast<VertexId>(u) < v) out.emplace_back(static_cast<VertexId>(u), v);
    return out;
  }

  std::optional<VertexId> root;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<VertexId> targets_;
};

/// Infinite (or implicit) graph exposed only through a neighbor oracle.
class LazyGraph {
 public:
  using Oracle = std::function<void(VertexId, std::vector<VertexId>&)>;
  using Membership = std::function<bool(VertexId)>;

  LazyGraph(std::string name, std::size_t max_degree, Oracle oracle, Membership contains = {})
      : name_(std::move(name)), max_degree_(max_degree), oracle_(std::move(oracle)), contains_(std::move(contains)) {}

  const std::string& name() const { return name_; }
  std::size_t max_degree() const { return max_degree_; }
  bool contains(VertexId v) const { return !contains_ || contains_(v); }

  std::vector<VertexId> neighbors(VertexId v) const {
    std::vector<VertexId> out;
    oracle_(v, out);
    std::sort(out.begin(), out.end());
    return out;
  }
  std::size_t degree(VertexId v) const {
    std::vector<VertexId> out;
    oracle_(v, out);
    return out.size();
  }

 private:
  std::string name_;
  std::size_t max_degree_;
  Oracle oracle_;
  Membership contains_;
};

template <class G>
concept NeighborGraph = requires(const G& g, VertexId v) {
  { g.neighbors(v) } -> std::ranges::range;
  { g.degree(v) } -> std::convertible_to<std::size_t>;
  { g.contains(v) } -> std::convertible_to<bool>;
};

// ---------------------------------------------------------------------------
// Generators

/// Z^2 vertex (x, y) packed as (x << 32) | (uint32)y. Ascending ids order
/// vertices lexicographically by (x, y).
inline VertexId lattice_vertex(std::int32_t x, std::int32_t y) {
  return static_cast<VertexId>((static_cast<std::uint64_t>(static_cast<std::int64_t>(x)) << 32) |
                               static_cast<std::uint32_t>(y));
}
inline std::pair<std::int32_t, std::int32_t> lattice_coords(VertexId v) {
  return {static_cast<std::int32_t>(v >> 32), static_cast<std::int32_t>(static_cast<std::uint32_t>(v))};
}

namespace generators {

inline LazyGraph integer_line() {
  return LazyGraph("line", 2, [](VertexId v, std::vector<VertexId>& out) {
    out.push_back(v - 1);
    out.push_back(v + 1);
  });
}

inline LazyGraph lattice2d() {
  return LazyGraph("lattice2d", 4, [](VertexId v, std::vector<VertexId>& out) {
    auto [x, y] = lattice_coords(v);
    out.push_back(lattice_vertex(x - 1, y));
    out.push_back(lattice_vertex(x + 1, y));
    out.push_back(lattice_vertex(x, y - 1));
    out.push_back(lattice_vertex(x, y + 1));
  });
}

/// Infinite d-regular tree. The root is 0 with children 1..d; a non-root
/// vertex x has children x*d + 1 .. x*d + (d-1) and parent (x-1)/d.
inline LazyGraph regular_tree(std::size_t d) {
  if (d < 2) throw ConfigError("graph.d: regular tree needs d >= 2");
  const auto D = static_cast<VertexId>(d);
  return LazyGraph(
      "tree", d,
      [D](VertexId v, std::vector<VertexId>& out) {
        if (v == 0) {
          for (VertexId c = 1; c <= D; ++c) out.push_back(c);
          return;
        }
        out.push_back((v - 1) / D);
        if (v > (std::numeric_limits<VertexId>::max() - D) / D)
          throw CapacityError("regular tree vertex id overflow");
        for (VertexId c = 1; c < D; ++c) out.push_back(v * D + c);
      },
      [](VertexId v) { return v >= 0; });
}

inline FiniteGraph path(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return FiniteGraph(n, e);
}

inline FiniteGraph cycle(std::size_t n) {
  if (n < 3) throw ConfigError("graph.n: a simple cycle needs n >= 3");
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return FiniteGraph(n, e);
}

inline FiniteGraph complete(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return FiniteGraph(n, e);
}

/// w x h torus; vertex (x, y) has index y * w + x.
inline FiniteGraph torus(std::size_t w, std::size_t h) {
  if (w < 3 || h < 3) throw ConfigError("graph: torus sides must be >= 3");
  std::vector<Edge> e;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto v = static_cast<VertexId>(y * w + x);
      e.emplace_back(v, static_cast<VertexId>(y * w + (x + 1) % w));
      e.emplace_back(v, static_cast<VertexId>(((y + 1) % h) * w + x));
    }
  return FiniteGraph(w * h, e);
}

}  // namespace generators

/// Edge list text: one "u v" pair per line, 0-indexed; '#' starts a comment.
inline FiniteGraph load_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  VertexId max_id = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    VertexId u = 0, v = 0;
    if (!(ls >> u)) continue;
    if (!(ls >> v)) throw ConfigError("edge list line " + std::to_string(lineno) + ": expected \"u v\"");
    edges.emplace_back(u, v);
    max_id = std::max({max_id, u, v});
  }
  return FiniteGraph(static_cast<std::size_t>(max_id + 1), edges);
}

// ---------------------------------------------------------------------------
// Balls

/// Induced subgraph on {u : d(center, u) <= radius}, relabelled in BFS order
/// (ties broken by ascending VertexId). Local vertex 0 is the center.
struct Ball {
  FiniteGraph graph;
  std::vector<VertexId> vertices;
  std::vector<std::size_t> depth;
  std::vector<std::size_t> ambient_degree;
  std::size_t radius = 0;
  std::unordered_map<VertexId, std::size_t> index;

  std::size_t size() const { return vertices.size(); }
  VertexId center() const { return vertices.front(); }
  std::optional<std::size_t> local(VertexId v) const {
    auto it = index.find(v);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

template <NeighborGraph G>
Ball ball(const G& g, VertexId v, std::size_t k, std::size_t cap = kDefaultBallCap) {
  if (!g.contains(v)) throw Error("ball: vertex " + std::to_string(v) + " not in graph");
  Ball b;
  b.radius = k;
  std::vector<std::vector<VertexId>> nbrs;
  b.vertices.push_back(v);
  b.depth.push_back(0);
  b.index.emplace(v, 0);
  for (std::size_t head = 0; head < b.vertices.size(); ++head) {
    const VertexId u = b.vertices[head];
    std::vector<VertexId> nu;
    for (auto w : g.neighbors(u)) nu.push_back(static_cast<VertexId>(w));
    std::sort(nu.begin(), nu.end());
    if (b.depth[head] < k) {
      for (auto w : nu) {
        if (b.index.contains(w)) continue;
        if (b.vertices.size() >= cap)
          throw CapacityError("ball of radius " + std::to_string(k) + " exceeds cap of " + std::to_string(cap) +
                              " vertices");
        b.index.emplace(w, b.vertices.size());
        b.vertices.push_back(w);
        b.depth.push_back(b.depth[head] + 1);
      }
    }
    b.ambient_degree.push_back(nu.size());
    nbrs.push_back(std::move(nu));
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < b.vertices.size(); ++i)
    for (auto w : nbrs[i])
      if (auto j = b.local(w); j && i < *j) edges.emplace_back(i, *j);
  b.graph = FiniteGraph(b.vertices.size(), edges);
  b.graph.root = 0;
  return b;
}

/// B_k of an already extracted ball of radius >= k, keeping BFS order.
inline Ball restrict_ball(const Ball& big, std::size_t k) {
  if (k > big.radius) throw Error("restrict_ball: radius exceeds the extracted ball");
  Ball b;
  b.radius = k;
  for (std::size_t i = 0; i < big.size(); ++i) {
    if (big.depth[i] > k) continue;
    b.index.emplace(big.vertices[i], b.vertices.size());
    b.vertices.push_back(big.vertices[i]);
    b.depth.push_back(big.depth[i]);
    b.ambient_degree.push_back(big.ambient_degree[i]);
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto bi = *big.local(b.vertices[i]);
    for (auto w : big.graph.neighbors(static_cast<VertexId>(bi)))
      if (auto j = b.local(big.vertices[static_cast<std::size_t>(w)]); j && i < *j) edges.emplace_back(i, *j);
  }
  b.graph = FiniteGraph(b.size(), edges);
  b.graph.root = 0;
  return b;
}

// ---------------------------------------------------------------------------
// Subgraphs

/// A vertex subset of a parent graph; `induced` means the edge set is all
/// parent edges inside the subset.
struct SubgraphView {
  std::vector<VertexId> vertices;
  bool induced = true;

  SubgraphView() = default;
  SubgraphView(std::vector<VertexId> vs, bool is_induced = true) : vertices(std::move(vs)), induced(is_induced) {
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  }
  static SubgraphView of(const Ball& b) { return SubgraphView(b.vertices); }

  std::size_t size() const { return vertices.size(); }
  bool contains(VertexId v) const { return std::binary_search(vertices.begin(), vertices.end(), v); }
};

struct BoundaryInterior {
  std::vector<VertexId> boundary;
  std::vector<VertexId> interior;
};

template <NeighborGraph G>
BoundaryInterior boundary_interior(const G& g, const SubgraphView& h) {
  if (!h.induced) throw Error("boundary_interior: subgraph must be induced");
  BoundaryInterior out;
  for (auto u : h.vertices) {
    bool exterior = false;
    for (auto w : g.neighbors(u))
      if (!h.contains(static_cast<VertexId>(w))) {
        exterior = true;
        break;
      }
    (exterior ? out.boundary : out.interior).push_back(u);
  }
  return out;
}

struct SubgraphDistance {
  std::size_t distance = kInfiniteDistance;
  /// ceil(distance / 2); kInfiniteDistance when disconnected.
  std::size_t k = kInfiniteDistance;
  bool finite() const { return distance != kInfiniteDistance; }
};

/// Multi-source BFS distance between two nonempty vertex sets.
template <NeighborGraph G>
SubgraphDistance subgraph_distance(const G& g, const SubgraphView& h1, const SubgraphView& h2,
                                   std::size_t cap = kDefaultBallCap) {
  if (h1.vertices.empty() || h2.vertices.empty()) throw Error("subgraph_distance: empty subgraph");
  std::unordered_map<VertexId, std::size_t> dist;
  std::deque<VertexId> queue;
  for (auto v : h1.vertices) {
    dist.emplace(v, 0);
    queue.push_back(v);
  }
  while (!queue.empty()) {
    const VertexId u = queue.front();
    queue.pop_front();
    const std::size_t du = dist[u];
    if (h2.contains(u)) return {du, (du + 1) / 2};
    for (auto w : g.neighbors(u)) {
      const auto wv = static_cast<VertexId>(w);
      if (dist.contains(wv)) continue;
      if (dist.size() >= cap) throw CapacityError("subgraph_distance: search exceeds cap");
      dist.emplace(wv, du + 1);
      queue.push_back(wv);
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Local aggregate

/// Degree normalization (1/deg, with 0/0 := 0) or uniform 1/D normalization.
struct Normalization {
  enum class Kind { degree, uniform };
  Kind kind = Kind::degree;
  std::size_t bound = 0;

  static Normalization degree() { return {}; }
  static Normalization uniform(std::size_t D) {
    if (D == 0) throw ConfigError("normalization: uniform bound must be positive");
    return {Kind::uniform, D};
  }
  double weight(std::size_t deg) const {
    if (kind == Kind::uniform) {
      if (deg > bound) throw Error("normalization: degree exceeds the uniform bound");
      return 1.0 / static_cast<double>(bound);
    }
    return deg > 0 ? 1.0 / static_cast<double>(deg) : 0.0;
  }
};

/// z_v = (1/deg(v)) sum_{u ~ v} a_u for a profile indexed by vertex.
inline ActionProcess local_aggregate(const FiniteGraph& g, std::span<const ActionProcess> a, VertexId v,
                                     Normalization norm = {}) {
  if (a.size() < g.size() || a.empty()) throw IncompleteProfileError("profile does not cover the graph");
  ActionProcess z(a[static_cast<std::size_t>(v)].space_ptr());
  for (auto u : g.neighbors(v)) z += a[static_cast<std::size_t>(u)];
  z *= norm.weight(g.degree(v));
  return z;
}

/// Same, for a profile keyed by VertexId on any neighbor oracle.
template <NeighborGraph G>
ActionProcess local_aggregate(const G& g, const std::map<VertexId, ActionProcess>& a, VertexId v,
                              Normalization norm = {}) {
  if (a.empty()) throw IncompleteProfileError("empty profile");
  ActionProcess z(a.begin()->second.space_ptr());
  std::size_t deg = 0;
  for (auto w : g.neighbors(v)) {
    auto it = a.find(static_cast<VertexId>(w));
    if (it == a.end()) throw IncompleteProfileError("missing action for neighbor " + std::to_string(w));
    z += it->second;
    ++deg;
  }
  z *= norm.weight(deg);
  return z;
}

}  // namespace sparse_nash
