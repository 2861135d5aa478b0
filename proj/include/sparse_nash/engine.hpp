#pragma once

// Equilibrium solver: synchronous Picard iteration of a -> B_theta(G a) on
// finite games, truncated local games on balls, the epsilon-Nash profile built
// from them, clamped reconstruction on induced subgraphs, and exploitability.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/parallel.hpp"
#include "sparse_nash/scenario.hpp"
#include "sparse_nash/utility.hpp"

namespace sparse_nash {

template <Utility U>
struct GameSpec {
  using utility_type = U;
  using theta_type = typename U::theta_type;

  FiniteGraph graph;
  SpacePtr space;
  std::vector<theta_type> theta;
  U utility;
  AdmissibleSet admissible;
  Normalization normalization;

  GameSpec(FiniteGraph g, SpacePtr sp, std::vector<theta_type> th, U u, AdmissibleSet c, Normalization norm = {})
      : graph(std::move(g)),
        space(std::move(sp)),
        theta(std::move(th)),
        utility(std::move(u)),
        admissible(c),
        normalization(norm) {
    if (theta.size() != graph.size())
      throw IncompleteProfileError("game: theta has " + std::to_string(theta.size()) + " entries for " +
                                   std::to_string(graph.size()) + " vertices");
    if constexpr (std::same_as<theta_type, ActionProcess>)
      for (const auto& t : theta)
        if (!same_space(t.space(), *space)) throw SpaceMismatchError("game: theta lives on another scenario space");
    require_contraction(utility.constants());
  }

  double radius() const { return admissible.radius(*space); }
  double rho() const { return utility.constants().rho(); }
};

struct SolveOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100'000;
  /// Also stop once rho^k D <= tol, D bounding the initial error.
  bool apriori_stop = true;
};

struct EquilibriumResult {
  ActionProfile actions;
  std::size_t iterations = 0;
  /// Sup-norm step |a^(k) - a^(k-1)|; the fixed-point residual of the returned
  /// profile is at most rho times this.
  double residual = 0.0;
  double rho = 0.0;
  double apriori_bound = 0.0;
  double aposteriori_bound = 0.0;

  double error_bound() const { return std::min(apriori_bound, aposteriori_bound); }
};

/// Iteration count after which rho^k D <= tol.
inline std::size_t apriori_iterations(double rho, double D, double tol) {
  if (rho <= 0.0 || D <= tol) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(tol / D) / std::log(rho))));
}

namespace detail {

/// Interaction pattern of a finite (sub)game in local indices.
struct Stencil {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<double> weight;
  std::vector<char> frozen;

  std::size_t size() const { return neighbors.size(); }
};

inline Stencil stencil_of(const FiniteGraph& g, const Normalization& norm) {
  Stencil st;
  st.neighbors.resize(g.size());
  st.weight.resize(g.size());
  st.frozen.assign(g.size(), 0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto id = static_cast<VertexId>(v);
    for (auto u : g.neighbors(id)) st.neighbors[v].push_back(static_cast<std::size_t>(u));
    st.weight[v] = norm.weight(g.degree(id));
  }
  return st;
}

/// Ball game: in-ball neighbors only, normalized by the ambient degree.
inline Stencil stencil_of(const Ball& b, const Normalization& norm) {
  Stencil st;
  st.neighbors.resize(b.size());
  st.weight.resize(b.size());
  st.frozen.assign(b.size(), 0);
  for (std::size_t v = 0; v < b.size(); ++v) {
    for (auto u : b.graph.neighbors(static_cast<VertexId>(v))) st.neighbors[v].push_back(static_cast<std::size_t>(u));
    st.weight[v] = norm.weight(b.ambient_degree[v]);
  }
  return st;
}

template <class U, class ThetaAt>
EquilibriumResult iterate(const U& u, const AdmissibleSet& c, const Stencil& st, ThetaAt&& theta_at,
                          ActionProfile cur, double initial_error, const SolveOptions& opts,
                          std::vector<ActionProfile>* history) {
  const UtilityConstants k = u.constants();
  require_contraction(k);
  const double rho = k.rho();
  const std::size_t K = apriori_iterations(rho, initial_error, opts.tol);
  const std::size_t n = st.size();
  if (history) history->push_back(cur);
  ActionProfile next = cur;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    parallel_for(
        n,
        [&](std::size_t i) {
          if (st.frozen[i]) {
            next[i] = cur[i];
            return;
          }
          ActionProcess z(cur[i].space_ptr());
          for (auto j : st.neighbors[i]) z += cur[j];
          z *= st.weight[i];
          next[i] = u.best_response(z, theta_at(i), c);
        },
        8);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!st.frozen[i]) residual = std::max(residual, distance(next[i], cur[i]));
    std::swap(cur, next);
    if (history) history->push_back(cur);
    if (residual <= opts.tol || (opts.apriori_stop && it >= K)) {
      EquilibriumResult r;
      r.actions = std::move(cur);
      r.iterations = it;
      r.residual = residual;
      r.rho = rho;
      r.apriori_bound = initial_error * std::pow(rho, static_cast<double>(it));
      r.aposteriori_bound = rho < 1.0 ? residual * rho / (1.0 - rho) : std::numeric_limits<double>::infinity();
      return r;
    }
  }
  throw NonConvergenceError("picard iteration: no convergence within " + std::to_string(opts.max_iter) +
                            " sweeps");
}

}  // namespace detail

/// Picard iteration from a^(0) = 0 (or from `start`, if given).
template <Utility U>
EquilibriumResult picard_solve(const GameSpec<U>& game, const SolveOptions& opts = {},
                               const ActionProfile* start = nullptr, std::vector<ActionProfile>* history = nullptr) {
  const auto st = detail::stencil_of(game.graph, game.normalization);
  const double M = game.radius();
  ActionProfile a0;
  double D = M;
  if (start) {
    if (start->size() != game.graph.size()) throw IncompleteProfileError("start profile does not cover the graph");
    a0 = *start;
    D = M + profile_norm(a0);
  } else {
    a0.assign(game.graph.size(), ActionProcess(game.space));
  }
  return detail::iterate(
      game.utility, game.admissible, st, [&](std::size_t i) -> const auto& { return game.theta[i]; }, std::move(a0), D,
      opts, history);
}

struct LocalEquilibrium {
  Ball ball;
  EquilibriumResult result;

  const ActionProcess& center() const { return result.actions.front(); }
  const ActionProcess& at(VertexId v) const {
    auto i = ball.local(v);
    if (!i) throw Error("vertex " + std::to_string(v) + " outside the local game");
    return result.actions[*i];
  }
};

/// Solves the game restricted to an extracted ball, with theta_of(v) giving
/// the heterogeneity of ambient vertex v.
template <Utility U, class ThetaFn>
EquilibriumResult solve_on_ball(const Ball& b, const U& u, const AdmissibleSet& c, const SpacePtr& space,
                                ThetaFn&& theta_of, const SolveOptions& opts = {}, Normalization norm = {}) {
  using theta_type = typename U::theta_type;
  std::vector<theta_type> theta;
  theta.reserve(b.size());
  for (auto v : b.vertices) theta.push_back(theta_of(v));
  return detail::iterate(
      u, c, detail::stencil_of(b, norm), [&](std::size_t i) -> const theta_type& { return theta[i]; },
      ActionProfile(b.size(), ActionProcess(space)), c.radius(*space), opts, nullptr);
}

/// Truncated local game on B_k(G, v): aggregates sum over in-ball neighbors
/// but are normalized by the full degree deg_G.
template <Utility U, NeighborGraph G, class ThetaFn>
LocalEquilibrium truncated_local_solve(const G& g, VertexId v, std::size_t k, const U& u, const AdmissibleSet& c,
                                       const SpacePtr& space, ThetaFn&& theta_of, const SolveOptions& opts = {},
                                       Normalization norm = {}, std::size_t cap = kDefaultBallCap) {
  LocalEquilibrium out{ball(g, v, k, cap), {}};
  out.result = solve_on_ball(out.ball, u, c, space, theta_of, opts, norm);
  return out;
}

template <Utility U>
LocalEquilibrium truncated_local_solve(const GameSpec<U>& game, VertexId v, std::size_t k,
                                       const SolveOptions& opts = {}) {
  return truncated_local_solve(
      game.graph, v, k, game.utility, game.admissible, game.space,
      [&](VertexId u) { return game.theta[static_cast<std::size_t>(u)]; }, opts, game.normalization);
}

/// L_a, L_z for the game's utility on the M-ball, using the realized max |theta_v|.
template <Utility U>
UtilityLipschitz lipschitz_constants(const GameSpec<U>& game) {
  const double M = game.radius();
  if constexpr (std::same_as<typename U::theta_type, ActionProcess>) {
    double th = 0.0;
    for (const auto& t : game.theta) th = std::max(th, norm(t));
    if constexpr (requires { game.utility.lipschitz(M, th); })
      return game.utility.lipschitz(M, th);
    else if constexpr (requires { game.utility.lipschitz(M, th, game.space->steps()); })
      return game.utility.lipschitz(M, th, game.space->steps());
  }
  throw ConfigError("utility provides no certified Lipschitz constants");
}

struct Exploitability {
  std::vector<double> gaps;
  double max_gap = 0.0;
};

/// gap_v = U(BR(z_v(a)), z_v(a), theta_v) - U(a_v, z_v(a), theta_v).
template <Utility U>
Exploitability exploitability(const GameSpec<U>& game, const ActionProfile& a) {
  if (a.size() != game.graph.size()) throw IncompleteProfileError("profile does not cover the graph");
  Exploitability e;
  e.gaps.resize(a.size());
  parallel_for(a.size(), [&](std::size_t i) {
    const auto v = static_cast<VertexId>(i);
    const ActionProcess z = local_aggregate(game.graph, a, v, game.normalization);
    const ActionProcess br = game.utility.best_response(z, game.theta[i], game.admissible);
    e.gaps[i] = game.utility.evaluate(br, z, game.theta[i]) - game.utility.evaluate(a[i], z, game.theta[i]);
  });
  for (double g : e.gaps) e.max_gap = std::max(e.max_gap, g);
  return e;
}

struct EpsNash {
  ActionProfile profile;
  std::size_t radius = 0;
  double eps = 0.0;
  UtilityLipschitz lipschitz;
};

/// Every player plays the center action of its own truncated local game.
template <Utility U>
EpsNash build_eps_nash(const GameSpec<U>& game, std::size_t k, const SolveOptions& opts = {}) {
  EpsNash out;
  out.radius = k;
  out.lipschitz = lipschitz_constants(game);
  out.profile.resize(game.graph.size());
  for (std::size_t v = 0; v < game.graph.size(); ++v)
    out.profile[v] = truncated_local_solve(game, static_cast<VertexId>(v), k, opts).center();
  const double M = game.radius();
  out.eps = 2.0 * std::pow(game.rho(), static_cast<double>(k)) * M * (out.lipschitz.L_a + 2.0 * out.lipschitz.L_z);
  return out;
}

struct Reconstruction {
  SubgraphView subgraph;
  BoundaryInterior parts;
  /// Profile on the sorted vertices of H (boundary entries are the clamped input).
  EquilibriumResult result;

  ActionProfile interior_actions() const {
    ActionProfile out;
    for (auto v : parts.interior) out.push_back(at(v));
    return out;
  }
  const ActionProcess& at(VertexId v) const {
    auto it = std::lower_bound(subgraph.vertices.begin(), subgraph.vertices.end(), v);
    if (it == subgraph.vertices.end() || *it != v) throw Error("vertex " + std::to_string(v) + " not in H");
    return result.actions[static_cast<std::size_t>(it - subgraph.vertices.begin())];
  }
};

/// Clamped Picard iteration on the interior of an induced subgraph H with the
/// boundary actions fixed to b. Iterates start from zero on the interior.
template <Utility U, NeighborGraph G, class ThetaFn>
Reconstruction clamped_reconstruct(const G& g, const U& u, const AdmissibleSet& c, const SpacePtr& space,
                                   ThetaFn&& theta_of, const SubgraphView& h,
                                   const std::map<VertexId, ActionProcess>& boundary, const SolveOptions& opts = {},
                                   Normalization norm = {}, std::vector<ActionProfile>* history = nullptr) {
  using theta_type = typename U::theta_type;
  Reconstruction out{h, boundary_interior(g, h), {}};
  const auto& vs = out.subgraph.vertices;
  auto local = [&](VertexId v) {
    return static_cast<std::size_t>(std::lower_bound(vs.begin(), vs.end(), v) - vs.begin());
  };
  detail::Stencil st;
  st.neighbors.resize(vs.size());
  st.weight.assign(vs.size(), 0.0);
  st.frozen.assign(vs.size(), 0);
  ActionProfile a0(vs.size(), ActionProcess(space));
  for (auto v : out.parts.boundary) {
    auto it = boundary.find(v);
    if (it == boundary.end())
      throw IncompleteBoundaryError("no boundary action supplied for vertex " + std::to_string(v));
    if (!same_space(it->second.space(), *space))
      throw SpaceMismatchError("boundary action for vertex " + std::to_string(v) + " is on another space");
    const auto i = local(v);
    st.frozen[i] = 1;
    a0[i] = it->second;
  }
  std::vector<theta_type> theta(vs.size());
  for (auto v : out.parts.interior) {
    const auto i = local(v);
    std::size_t deg = 0;
    for (auto w : g.neighbors(v)) {
      st.neighbors[i].push_back(local(static_cast<VertexId>(w)));
      ++deg;
    }
    st.weight[i] = norm.weight(deg);
    theta[i] = theta_of(v);
  }
  if (out.parts.interior.empty()) {
    out.result.actions = std::move(a0);
    out.result.rho = u.constants().rho();
    if (history) history->push_back(out.result.actions);
    return out;
  }
  out.result = detail::iterate(
      u, c, st, [&](std::size_t i) -> const theta_type& { return theta[i]; }, std::move(a0), c.radius(*space), opts,
      history);
  return out;
}

template <Utility U>
Reconstruction clamped_reconstruct(const GameSpec<U>& game, const SubgraphView& h,
                                   const std::map<VertexId, ActionProcess>& boundary, const SolveOptions& opts = {},
                                   std::vector<ActionProfile>* history = nullptr) {
  return clamped_reconstruct(
      game.graph, game.utility, game.admissible, game.space,
      [&](VertexId v) { return game.theta[static_cast<std::size_t>(v)]; }, h, boundary, opts, game.normalization,
      history);
}

}  // namespace sparse_nash
