#pragma once

// Covariance of bounded-Lipschitz functionals of equilibrium trajectories on
// two subgraphs, compared against the geometric decay bound
//   2 rho^k M (|H1| + |H2|) |f1|_BL |f2|_BL,  k = ceil(d(H1, H2) / 2).

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparse_nash/engine.hpp"
#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/heterogeneity.hpp"
#include "sparse_nash/scenario.hpp"

namespace sparse_nash {

/// f : (paths psi_v)_{v in H} -> R, bounded and Lipschitz for the metric
/// sup_v |psi_v - psi'_v|_2. The constants are certified by construction.
class BLTestFunction {
 public:
  using Paths = std::vector<std::span<const double>>;

  BLTestFunction(std::string name, std::function<double(const Paths&)> f, double sup_bound, double lipschitz)
      : name_(std::move(name)), f_(std::move(f)), sup_(sup_bound), lip_(lipschitz) {}

  double operator()(const Paths& psi) const { return f_(psi); }
  const std::string& name() const { return name_; }
  double sup_bound() const { return sup_; }
  double lipschitz() const { return lip_; }
  double bl_norm() const { return std::max(sup_, lip_); }

  static BLTestFunction constant(double c) {
    return {"constant", [c](const Paths&) { return c; }, std::abs(c), 0.0};
  }

  /// tanh(sum_v <w_v, psi_v>); Lip = sum_v |w_v|_2.
  static BLTestFunction tanh_linear(std::vector<std::vector<double>> w) {
    double lip = 0.0;
    for (const auto& wv : w) {
      double s = 0.0;
      for (double x : wv) s += x * x;
      lip += std::sqrt(s);
    }
    return {"tanh_linear",
            [w = std::move(w)](const Paths& psi) {
              if (psi.size() != w.size()) throw Error("tanh_linear: wrong number of paths");
              double acc = 0.0;
              for (std::size_t v = 0; v < w.size(); ++v) {
                if (psi[v].size() != w[v].size()) throw Error("tanh_linear: wrong path length");
                for (std::size_t j = 0; j < w[v].size(); ++j) acc += w[v][j] * psi[v][j];
              }
              return std::tanh(acc);
            },
            1.0, lip};
  }

  /// tanh(scale * sum of all path entries) over `vertices` paths of length `steps`.
  static BLTestFunction tanh_linear(double scale, std::size_t vertices, std::size_t steps) {
    return tanh_linear(std::vector<std::vector<double>>(vertices, std::vector<double>(steps, scale)));
  }

  /// Mean of all entries clipped to [-c, c]; Lip = 1/sqrt(steps).
  static BLTestFunction clipped_mean(double c, std::size_t steps) {
    return {"clipped_mean",
            [c](const Paths& psi) {
              double acc = 0.0;
              std::size_t count = 0;
              for (auto p : psi) {
                for (double x : p) acc += x;
                count += p.size();
              }
              return std::clamp(count ? acc / static_cast<double>(count) : 0.0, -c, c);
            },
            c, 1.0 / std::sqrt(static_cast<double>(steps))};
  }

  /// min(c, max_v |psi_v|_2); Lip = 1.
  static BLTestFunction clipped_max(double c) {
    return {"clipped_max",
            [c](const Paths& psi) {
              double m = 0.0;
              for (auto p : psi) {
                double s = 0.0;
                for (double x : p) s += x * x;
                m = std::max(m, std::sqrt(s));
              }
              return std::min(c, m);
            },
            c, 1.0};
  }

 private:
  std::string name_;
  std::function<double(const Paths&)> f_;
  double sup_;
  double lip_;
};

enum class CovarianceMode { exhaustive, montecarlo };

/// Game template for correlation experiments; theta is drawn per experiment.
template <Utility U>
struct CorrelationModel {
  FiniteGraph graph;
  U utility;
  AdmissibleSet admissible;
  std::vector<double> time_grid{0.0};
  ThetaSpec theta = ThetaSpec::rademacher();
  Normalization normalization{};
  SolveOptions solve{1e-12, 100'000, true};
};

struct CovarianceOptions {
  CovarianceMode mode = CovarianceMode::exhaustive;
  /// Monte Carlo: number of independent theta draws.
  std::size_t replications = 10'000;
  std::uint64_t seed = 0;
  /// Exhaustive: vertices whose Rademacher signs are enumerated (default: all);
  /// theta is zero elsewhere.
  std::vector<VertexId> window;
  std::size_t max_exhaustive_bits = 20;
};

struct CorrelationRow {
  std::size_t distance = 0;
  std::size_t k = 0;
  double cov = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// The equilibrium of one game whose scenario atoms carry the theta randomness.
struct CorrelationSolve {
  CovarianceMode mode;
  SpacePtr space;
  EquilibriumResult equilibrium;
  double radius = 0.0;
  double rho = 0.0;
};

template <Utility U>
  requires std::same_as<typename U::theta_type, ActionProcess>
CorrelationSolve solve_correlation_game(const CorrelationModel<U>& model, const CovarianceOptions& opts) {
  if (!model.theta.independent())
    throw HypothesisViolationError("correlation decay needs independent theta processes (common_weight = 0)");
  const std::size_t n = model.graph.size();
  ThetaSpec spec = model.theta;
  SpacePtr space;
  std::vector<VertexId> window;
  if (opts.mode == CovarianceMode::exhaustive) {
    if (spec.generator != ThetaSpec::Generator::iid_rademacher)
      throw ConfigError("theta.generator: exhaustive mode enumerates iid_rademacher signs");
    spec.exhaustive = true;
    window = opts.window;
    if (window.empty())
      for (std::size_t v = 0; v < n; ++v) window.push_back(static_cast<VertexId>(v));
    space = ScenarioSpace::exhaustive_signs(window.size(), model.time_grid, opts.max_exhaustive_bits);
  } else {
    if (opts.replications < 2) throw ConfigError("replications: Monte Carlo mode needs at least 2");
    spec.exhaustive = false;
    space = ScenarioSpace::uniform(opts.replications, model.time_grid, FiltrationKind::reveal_at_start);
  }
  ThetaSampler sampler(space, spec, opts.seed, window);
  std::vector<ActionProcess> theta;
  theta.reserve(n);
  for (std::size_t v = 0; v < n; ++v) theta.push_back(sampler(static_cast<VertexId>(v)));
  GameSpec<U> game(model.graph, space, std::move(theta), model.utility, model.admissible, model.normalization);
  CorrelationSolve out{opts.mode, space, picard_solve(game, model.solve), game.radius(), game.rho()};
  return out;
}

/// Evaluates f on the equilibrium paths of H in every atom.
inline std::vector<double> functional_values(const ActionProfile& a, const SubgraphView& h, const BLTestFunction& f) {
  const auto& sp = a.front().space();
  std::vector<double> out(sp.atoms());
  BLTestFunction::Paths psi(h.size());
  for (std::size_t s = 0; s < sp.atoms(); ++s) {
    for (std::size_t i = 0; i < h.size(); ++i) psi[i] = a[static_cast<std::size_t>(h.vertices[i])].path(s);
    out[s] = f(psi);
  }
  return out;
}

inline double decay_bound(double rho, double M, std::size_t k, std::size_t h1, std::size_t h2, double bl1,
                          double bl2) {
  if (k == kInfiniteDistance) return 0.0;
  return 2.0 * std::pow(rho, static_cast<double>(k)) * M * static_cast<double>(h1 + h2) * bl1 * bl2;
}

inline CorrelationRow covariance_row(const CorrelationSolve& cs, const FiniteGraph& g, const SubgraphView& h1,
                                     const SubgraphView& h2, const BLTestFunction& f1, const BLTestFunction& f2) {
  const auto& a = cs.equilibrium.actions;
  const auto& sp = *cs.space;
  const auto x = functional_values(a, h1, f1);
  const auto y = functional_values(a, h2, f2);
  double mx = 0.0, my = 0.0;
  for (std::size_t s = 0; s < sp.atoms(); ++s) {
    mx += sp.probability(s) * x[s];
    my += sp.probability(s) * y[s];
  }
  double cov = 0.0;
  for (std::size_t s = 0; s < sp.atoms(); ++s) cov += sp.probability(s) * (x[s] - mx) * (y[s] - my);

  CorrelationRow row;
  const auto dist = subgraph_distance(g, h1, h2);
  row.distance = dist.distance;
  row.k = dist.k;
  row.cov = cov;
  row.bound = decay_bound(cs.rho, cs.radius, dist.k, h1.size(), h2.size(), f1.bl_norm(), f2.bl_norm());
  if (cs.mode == CovarianceMode::montecarlo) {
    const auto S = static_cast<double>(sp.atoms());
    double ss = 0.0;
    for (std::size_t s = 0; s < sp.atoms(); ++s) {
      const double d = (x[s] - mx) * (y[s] - my) - cov;
      ss += d * d;
    }
    row.stderr_ = std::sqrt(ss / (S - 1.0)) / std::sqrt(S);
    row.pass = std::abs(cov) <= row.bound + 3.0 * row.stderr_;
  } else {
    row.pass = std::abs(cov) <= row.bound;
  }
  return row;
}

template <Utility U>
CorrelationRow covariance_experiment(const CorrelationModel<U>& model, const SubgraphView& h1, const SubgraphView& h2,
                                     const BLTestFunction& f1, const BLTestFunction& f2,
                                     const CovarianceOptions& opts) {
  const auto cs = solve_correlation_game(model, opts);
  return covariance_row(cs, model.graph, h1, h2, f1, f2);
}

/// One row per vertex pair, all sharing a single equilibrium solve.
template <Utility U>
std::vector<CorrelationRow> decay_profile(const CorrelationModel<U>& model,
                                          const std::vector<std::pair<VertexId, VertexId>>& pairs,
                                          const BLTestFunction& f, const CovarianceOptions& opts) {
  const auto cs = solve_correlation_game(model, opts);
  std::vector<CorrelationRow> rows;
  rows.reserve(pairs.size());
  for (auto [u, w] : pairs)
    rows.push_back(covariance_row(cs, model.graph, SubgraphView({u}), SubgraphView({w}), f, f));
  return rows;
}

}  // namespace sparse_nash
