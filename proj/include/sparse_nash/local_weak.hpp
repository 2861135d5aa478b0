#pragma once

// Local topology: marked balls, the truncated d_* metric, empirical
// neighborhood statistics against a limit graph, the equilibrium convergence
// experiment, a finite mass-transport check and block exhaustions of Z.

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sparse_nash/engine.hpp"
#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/heterogeneity.hpp"
#include "sparse_nash/isomorphism.hpp"
#include "sparse_nash/rng.hpp"
#include "sparse_nash/scenario.hpp"

namespace sparse_nash {

/// A rooted ball with one mark per local vertex (no marks = unmarked).
struct MarkedBall {
  Ball ball;
  std::vector<ActionProcess> marks;

  bool marked() const { return !marks.empty(); }
  const ActionProcess& root_mark() const { return marks.front(); }
};

template <NeighborGraph G>
MarkedBall unmarked_ball(const G& g, VertexId root, std::size_t k, std::size_t cap = kDefaultBallCap) {
  return {ball(g, root, k, cap), {}};
}

template <NeighborGraph G, class MarkFn>
MarkedBall marked_ball(const G& g, VertexId root, std::size_t k, MarkFn&& mark_of, std::size_t cap = kDefaultBallCap) {
  MarkedBall out{ball(g, root, k, cap), {}};
  out.marks.reserve(out.ball.size());
  for (auto v : out.ball.vertices) out.marks.push_back(mark_of(v));
  return out;
}

/// B_k of an extracted marked ball.
inline MarkedBall restrict_marked(const MarkedBall& big, std::size_t k) {
  MarkedBall out{restrict_ball(big.ball, k), {}};
  if (big.marked())
    for (auto v : out.ball.vertices) out.marks.push_back(big.marks[*big.ball.local(v)]);
  return out;
}

/// 1 ^ inf_phi max_v |x_v - x'_phi(v)|, with inf over no isomorphism = 1.
/// Unmarked balls give the indicator of non-isomorphism.
inline double ball_discrepancy(const MarkedBall& a, const MarkedBall& b, const IsoOptions& opts = {}) {
  if (a.marked() != b.marked()) throw Error("d_*: cannot compare a marked with an unmarked ball");
  if (!a.marked()) return ball_isomorphic(a.ball.graph, b.ball.graph, opts).found ? 0.0 : 1.0;
  const std::function<double(VertexId, VertexId)> cost = [&](VertexId u, VertexId w) {
    return distance(a.marks[static_cast<std::size_t>(u)], b.marks[static_cast<std::size_t>(w)]);
  };
  const auto m = best_marked_isomorphism(a.ball.graph, b.ball.graph, cost, 1.0, opts);
  return m.found ? std::min(1.0, m.cost) : 1.0;
}

struct DstarResult {
  double value = 0.0;
  /// |value - d_*| <= error_bound <= 2^{-k_max}.
  double error_bound = 0.0;
  std::vector<double> terms;
};

/// sum_{k=1}^{k_max} 2^{-k} term_k plus the tail estimate 2^{-k_max} term_{k_max}.
/// Terms are nondecreasing in k, so the tail lies in [2^{-k_max} term_{k_max}, 2^{-k_max}].
inline DstarResult dstar_truncated(const MarkedBall& g1, const MarkedBall& g2, std::size_t k_max,
                                   const IsoOptions& opts = {}) {
  if (k_max == 0) throw ConfigError("k_max: must be positive");
  if (g1.ball.radius < k_max || g2.ball.radius < k_max) throw Error("d_*: balls must be extracted to radius k_max");
  DstarResult out;
  double scale = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    scale *= 0.5;
    const double t = ball_discrepancy(restrict_marked(g1, k), restrict_marked(g2, k), opts);
    out.terms.push_back(t);
    out.value += scale * t;
  }
  out.value += scale * out.terms.back();
  out.error_bound = scale * (1.0 - out.terms.back());
  return out;
}

template <NeighborGraph G1, NeighborGraph G2>
DstarResult dstar_truncated(const G1& g1, VertexId o1, const G2& g2, VertexId o2, std::size_t k_max = 8,
                            const IsoOptions& opts = {}) {
  return dstar_truncated(unmarked_ball(g1, o1, k_max, opts.max_vertices + 1),
                         unmarked_ball(g2, o2, k_max, opts.max_vertices + 1), k_max, opts);
}

// ---------------------------------------------------------------------------
// Empirical neighborhood statistics

/// Bounded function of a marked ball of radius k, continuous for d_*.
struct LocalTestFunction {
  std::string id;
  std::function<double(const MarkedBall&)> h;
};

/// Ball signature x bounded mark transforms. `reference` is the unmarked
/// radius-k ball of the limit graph.
inline std::vector<LocalTestFunction> default_test_family(const Ball& reference) {
  auto iso = [ref = reference.graph](const MarkedBall& b) {
    return ball_isomorphic(b.ball.graph, ref).found ? 1.0 : 0.0;
  };
  std::vector<LocalTestFunction> out;
  out.push_back({"iso", iso});
  out.push_back({"iso_tanh_root_mean", [iso](const MarkedBall& b) {
                   return iso(b) * (b.marked() ? std::tanh(mean_value(b.root_mark())) : 0.0);
                 }});
  out.push_back({"tanh_root_norm",
                 [](const MarkedBall& b) { return b.marked() ? std::tanh(norm(b.root_mark())) : 0.0; }});
  out.push_back({"tanh_ball_mean", [](const MarkedBall& b) {
                   if (!b.marked()) return 0.0;
                   double acc = 0.0;
                   for (const auto& m : b.marks) acc += mean_value(m);
                   return std::tanh(acc / static_cast<double>(b.marks.size()));
                 }});
  out.push_back({"tanh_ball_max_norm", [](const MarkedBall& b) {
                   if (!b.marked()) return 0.0;
                   double m = 0.0;
                   for (const auto& x : b.marks) m = std::max(m, norm(x));
                   return std::tanh(m);
                 }});
  return out;
}

struct GapRow {
  std::size_t n = 0;
  std::string h_id;
  double finite_avg = 0.0;
  double limit_est = 0.0;
  double gap = 0.0;
  double stderr_ = 0.0;
  double budget = 0.0;
};

struct DiscrepancyReport {
  std::size_t n = 0;
  std::vector<GapRow> rows;
  double max_gap = 0.0;
  /// Standard error of the row attaining max_gap.
  double max_gap_stderr = 0.0;
  double budget = 0.0;
};

inline void finalize_report(DiscrepancyReport& r) {
  r.max_gap = 0.0;
  r.max_gap_stderr = 0.0;
  for (const auto& row : r.rows)
    if (row.gap >= r.max_gap) {
      r.max_gap = row.gap;
      r.max_gap_stderr = row.stderr_;
    }
}

/// Vertex average of each h over the finite samples against the Monte Carlo
/// average over limit samples (unpaired standard error).
inline DiscrepancyReport empirical_lwc_gap(std::size_t n, const std::vector<MarkedBall>& finite,
                                           const std::vector<MarkedBall>& limit,
                                           const std::vector<LocalTestFunction>& family, double budget = 0.0) {
  if (finite.empty() || limit.empty()) throw Error("empirical_lwc_gap: empty sample");
  auto moments = [](const std::vector<double>& xs) {
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair{m, var / static_cast<double>(xs.size())};
  };
  DiscrepancyReport r;
  r.n = n;
  r.budget = budget;
  for (const auto& f : family) {
    std::vector<double> xf, xl;
    for (const auto& b : finite) xf.push_back(f.h(b));
    for (const auto& b : limit) xl.push_back(f.h(b));
    const auto [mf, vf] = moments(xf);
    const auto [ml, vl] = moments(xl);
    r.rows.push_back({n, f.id, mf, ml, std::abs(mf - ml), std::sqrt(vf + vl), budget});
  }
  finalize_report(r);
  return r;
}

// ---------------------------------------------------------------------------
// Block exhaustion of Z

/// Random partition of Z into blocks of length n whose cut points sit at
/// positions = U (mod n). With U uniform on {0..n_max-1} and n | n_max the
/// partitions for increasing n are nested.
struct BlockSample {
  std::size_t n = 0;
  /// Z coordinate of local vertex 0.
  std::int64_t first = 0;
  /// Local index of the root (Z coordinate 0).
  std::size_t root = 0;
  FiniteGraph graph;
};

inline std::uint64_t block_offset(std::uint64_t seed, std::size_t index, std::size_t n_max) {
  Rng rng = make_stream(seed, {stream_tag::block, static_cast<std::int64_t>(index)});
  return std::uniform_int_distribution<std::uint64_t>(0, n_max - 1)(rng);
}

inline BlockSample block_component(std::size_t n, std::uint64_t U) {
  if (n == 0) throw ConfigError("block length must be positive");
  BlockSample b;
  b.n = n;
  b.root = static_cast<std::size_t>((n - U % n) % n);
  b.first = -static_cast<std::int64_t>(b.root);
  b.graph = generators::path(n);
  b.graph.root = static_cast<VertexId>(b.root);
  return b;
}

/// Root component of the sample `index`; n must divide n_max for nesting.
inline BlockSample sample_block_exhaustion_Z(std::size_t n, std::uint64_t seed, std::size_t index = 0,
                                             std::size_t n_max = 0) {
  if (n_max == 0) n_max = n;
  if (n == 0 || n_max % n != 0) throw ConfigError("block length must divide n_max");
  return block_component(n, block_offset(seed, index, n_max));
}

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 0.0;
  std::vector<std::size_t> counts;
};

/// Pearson test of root-position uniformity over `samples` draws.
inline ChiSquareResult root_position_uniformity(std::size_t n, std::size_t samples, std::uint64_t seed) {
  if (n < 2) throw ConfigError("uniformity test needs n >= 2");
  ChiSquareResult r;
  r.counts.assign(n, 0);
  for (std::size_t i = 0; i < samples; ++i) ++r.counts[sample_block_exhaustion_Z(n, seed, i).root];
  const double expected = static_cast<double>(samples) / static_cast<double>(n);
  for (auto c : r.counts) r.statistic += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(n - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

// ---------------------------------------------------------------------------
// Equilibrium convergence

enum class SequenceKind { cycles, paths, tori, blocks };

inline SequenceKind parse_sequence(const std::string& s) {
  if (s == "cycles") return SequenceKind::cycles;
  if (s == "paths") return SequenceKind::paths;
  if (s == "tori") return SequenceKind::tori;
  if (s == "blocks") return SequenceKind::blocks;
  throw ConfigError("sequence: unknown kind \"" + s + "\"");
}

template <Utility U>
struct ConvergenceSpec {
  SequenceKind kind = SequenceKind::cycles;
  std::vector<std::size_t> sizes;
  U utility;
  AdmissibleSet admissible;
  SpacePtr space;
  ThetaSpec theta = ThetaSpec::gaussian(0.0, 1.0);
  std::size_t k = 2;
  std::size_t buffer = 6;
  /// Radius of the truncated solves that stand in for the limit equilibrium;
  /// 0 picks k + 30 on Z and k + 16 on Z^2.
  std::size_t limit_radius = 0;
  std::size_t replications = 4;
  double tol = 1e-13;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::int64_t wrap_offset(std::int64_t x, std::int64_t n) {
  // representative of x mod n in (-n/2, n/2]
  std::int64_t r = ((x % n) + n) % n;
  if (r > n / 2) r -= n;
  return r;
}

inline std::int64_t floor_mod(std::int64_t x, std::int64_t n) { return ((x % n) + n) % n; }

}  // namespace detail

/// For every n: solve the finite game, and for every vertex v pair its marked
/// B_k with a limit sample centered at v whose theta agrees with the finite
/// theta on the unwrapped window around v and is fresh elsewhere. Gaps are
/// |mean_v h(finite) - mean_v h(limit)|; standard errors come from the
/// replication means of the paired differences.
template <Utility U>
  requires std::same_as<typename U::theta_type, ActionProcess>
std::vector<DiscrepancyReport> equilibrium_convergence_experiment(const ConvergenceSpec<U>& spec) {
  if (spec.sizes.empty()) throw ConfigError("sizes: empty");
  if (!spec.space) throw ConfigError("scenario: missing");
  if (!spec.theta.independent()) throw HypothesisViolationError("convergence experiment needs iid theta");
  const bool planar = spec.kind == SequenceKind::tori;
  const std::size_t R = spec.limit_radius ? spec.limit_radius : spec.k + (planar ? 16 : 30);
  if (R < spec.k + spec.buffer) throw ConfigError("limit_radius: must be at least k + buffer");
  const LazyGraph limit = planar ? generators::lattice2d() : generators::integer_line();
  const VertexId origin = planar ? lattice_vertex(0, 0) : 0;
  const auto family = default_test_family(ball(limit, origin, spec.k));
  const std::size_t n_max = *std::max_element(spec.sizes.begin(), spec.sizes.end());
  const double M = spec.admissible.radius(*spec.space);
  const double rho = spec.utility.constants().rho();
  const double budget = 2.0 * std::pow(rho, static_cast<double>(spec.buffer)) * M;
  const SolveOptions opts{spec.tol, 1'000'000, true};
  const std::size_t H = family.size();

  std::vector<DiscrepancyReport> reports;
  for (std::size_t n : spec.sizes) {
    const auto N = static_cast<std::int64_t>(n);
    std::vector<double> fin_sum(H, 0.0), lim_sum(H, 0.0);
    std::vector<std::vector<double>> rep_diff(H);
    std::size_t samples = 0;
    for (std::size_t r = 0; r < spec.replications; ++r) {
      const std::uint64_t seed_r = stream_key(spec.seed, {static_cast<std::int64_t>(r)});
      ThetaSampler sampler(spec.space, spec.theta, seed_r);
      FiniteGraph g;
      std::int64_t first = 0;  // blocks: Z coordinate of finite vertex 0
      switch (spec.kind) {
        case SequenceKind::cycles: g = generators::cycle(n); break;
        case SequenceKind::paths: g = generators::path(n); break;
        case SequenceKind::tori: g = generators::torus(n, n); break;
        case SequenceKind::blocks: {
          if (n_max % n != 0) throw ConfigError("sizes: block lengths must divide the largest one");
          auto b = block_component(n, block_offset(spec.seed, r, n_max));
          first = b.first;
          g = std::move(b.graph);
          break;
        }
      }
      std::vector<ActionProcess> theta(g.size());
      for (std::size_t i = 0; i < g.size(); ++i)
        theta[i] = spec.kind == SequenceKind::blocks ? sampler(first + static_cast<std::int64_t>(i))
                                                     : sampler(static_cast<VertexId>(i));
      GameSpec<U> game(g, spec.space, theta, spec.utility, spec.admissible);
      const auto eq = picard_solve(game, opts);

      std::vector<double> diff(H, 0.0);
      for (std::size_t v = 0; v < g.size(); ++v) {
        const auto vid = static_cast<VertexId>(v);
        const auto fin = marked_ball(g, vid, spec.k, [&](VertexId u) { return eq.actions[static_cast<std::size_t>(u)]; });
        // theta of the limit vertex at offset from v
        std::function<ActionProcess(VertexId)> theta_of;
        switch (spec.kind) {
          case SequenceKind::cycles:
            theta_of = [&, v, N](VertexId x) {
              const std::int64_t w = detail::wrap_offset(x, N);
              if (w == x) return theta[static_cast<std::size_t>(detail::floor_mod(static_cast<std::int64_t>(v) + x, N))];
              return sampler.keyed({stream_tag::fresh, static_cast<std::int64_t>(v), x});
            };
            break;
          case SequenceKind::paths:
            theta_of = [&, v, N](VertexId x) {
              const std::int64_t c = static_cast<std::int64_t>(v) + x;
              if (c >= 0 && c < N) return theta[static_cast<std::size_t>(c)];
              return sampler.keyed({stream_tag::fresh, c});
            };
            break;
          case SequenceKind::blocks:
            theta_of = [&, v, first](VertexId x) { return sampler(first + static_cast<std::int64_t>(v) + x); };
            break;
          case SequenceKind::tori:
            theta_of = [&, v, N](VertexId x) {
              auto [dx, dy] = lattice_coords(x);
              const auto vx = static_cast<std::int64_t>(v) % N, vy = static_cast<std::int64_t>(v) / N;
              if (detail::wrap_offset(dx, N) == dx && detail::wrap_offset(dy, N) == dy) {
                const auto fx = detail::floor_mod(vx + dx, N), fy = detail::floor_mod(vy + dy, N);
                return theta[static_cast<std::size_t>(fy * N + fx)];
              }
              return sampler.keyed({stream_tag::fresh, static_cast<std::int64_t>(v), dx, dy});
            };
            break;
        }
        const auto local = truncated_local_solve(limit, origin, R, spec.utility, spec.admissible, spec.space,
                                                 theta_of, opts);
        MarkedBall lim{restrict_ball(local.ball, spec.k), {}};
        for (auto u : lim.ball.vertices) lim.marks.push_back(local.at(u));
        for (std::size_t h = 0; h < H; ++h) {
          const double a = family[h].h(fin), b = family[h].h(lim);
          fin_sum[h] += a;
          lim_sum[h] += b;
          diff[h] += a - b;
        }
        ++samples;
      }
      for (std::size_t h = 0; h < H; ++h) rep_diff[h].push_back(diff[h] / static_cast<double>(g.size()));
    }
    DiscrepancyReport rep;
    rep.n = n;
    rep.budget = budget;
    for (std::size_t h = 0; h < H; ++h) {
      GapRow row;
      row.n = n;
      row.h_id = family[h].id;
      row.finite_avg = fin_sum[h] / static_cast<double>(samples);
      row.limit_est = lim_sum[h] / static_cast<double>(samples);
      row.gap = std::abs(row.finite_avg - row.limit_est);
      const auto& d = rep_diff[h];
      if (d.size() > 1) {
        const double m = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
        double ss = 0.0;
        for (double x : d) ss += (x - m) * (x - m);
        row.stderr_ = std::sqrt(ss / static_cast<double>(d.size() - 1)) / std::sqrt(static_cast<double>(d.size()));
      }
      row.budget = budget;
      rep.rows.push_back(row);
    }
    finalize_report(rep);
    reports.push_back(std::move(rep));
  }
  return reports;
}

struct ConvergenceVerdict {
  bool nonincreasing = true;
  bool final_within_budget = true;
  double threshold = 0.0;
  bool pass() const { return nonincreasing && final_within_budget; }
};

/// Max gap nonincreasing along the sequence and final gap <= 3 (stderr + budget).
inline ConvergenceVerdict judge_convergence(const std::vector<DiscrepancyReport>& reports) {
  ConvergenceVerdict v;
  for (std::size_t i = 1; i < reports.size(); ++i)
    if (reports[i].max_gap > reports[i - 1].max_gap) v.nonincreasing = false;
  if (!reports.empty()) {
    const auto& last = reports.back();
    v.threshold = 3.0 * (last.max_gap_stderr + last.budget);
    v.final_within_budget = last.max_gap <= v.threshold;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Mass transport

struct MtpReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// Compares E[sum_v F(G,o,v)] with E[sum_v F(G,v,o)] for the root law p.
inline MtpReport mtp_check(const FiniteGraph& g, const std::vector<double>& root_law,
                           const std::function<double(const FiniteGraph&, VertexId, VertexId)>& F,
                           double tol = 1e-12) {
  if (root_law.size() != g.size()) throw ConfigError("mtp: root law must have one weight per vertex");
  MtpReport r;
  for (std::size_t o = 0; o < g.size(); ++o) {
    if (root_law[o] == 0.0) continue;
    double out = 0.0, in = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
      out += F(g, static_cast<VertexId>(o), static_cast<VertexId>(v));
      in += F(g, static_cast<VertexId>(v), static_cast<VertexId>(o));
    }
    r.lhs += root_law[o] * out;
    r.rhs += root_law[o] * in;
  }
  r.pass = std::abs(r.lhs - r.rhs) <= tol * std::max(1.0, std::abs(r.lhs) + std::abs(r.rhs));
  return r;
}

inline std::vector<double> uniform_root_law(const FiniteGraph& g) {
  return std::vector<double>(g.size(), 1.0 / static_cast<double>(g.size()));
}

}  // namespace sparse_nash
