#include <catch2/catch.hpp>

#include <Eigen/Dense>

#include "sparse_nash/engine.hpp"
#include "sparse_nash/heterogeneity.hpp"

using namespace sparse_nash;

namespace {

// Unconstrained equilibrium of the quadratic game on a static space: solves
// (I - (ell/gamma) W) a = (lambda/gamma) theta, W_ij = 1/deg(i) for j ~ i.
// `in_ball` restricts the sum to a vertex subset while keeping deg from g.
Eigen::VectorXd linear_equilibrium(const FiniteGraph& g, const std::vector<double>& theta, double gamma, double ell,
                                   double lambda, const std::vector<VertexId>& keep = {}) {
  std::vector<VertexId> vs = keep;
  if (vs.empty())
    for (std::size_t v = 0; v < g.size(); ++v) vs.push_back(static_cast<VertexId>(v));
  const auto n = static_cast<Eigen::Index>(vs.size());
  std::map<VertexId, Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n; ++i) idx[vs[static_cast<std::size_t>(i)]] = i;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VertexId v = vs[static_cast<std::size_t>(i)];
    for (auto w : g.neighbors(v))
      if (idx.contains(w)) A(i, idx[w]) -= ell / gamma / static_cast<double>(g.degree(v));
    b(i) = lambda / gamma * theta[static_cast<std::size_t>(v)];
  }
  return A.partialPivLu().solve(b);
}

std::vector<ActionProcess> static_theta(const SpacePtr& sp, const std::vector<double>& xs) {
  std::vector<ActionProcess> out;
  for (double x : xs) out.push_back(ActionProcess::constant(sp, x));
  return out;
}

}  // namespace

TEST_CASE("zero heterogeneity gives the zero equilibrium", "[engine]") {
  const auto sp = ScenarioSpace::uniform(3, {0.0, 1.0}, FiltrationKind::reveal_at_start);
  const GameSpec game(generators::torus(4, 4), sp, std::vector<ActionProcess>(16, ActionProcess(sp)),
                      QuadraticUtility(1.0, 0.5, 1.0), AdmissibleSet::norm_ball(2.0));
  const auto r = picard_solve(game);
  CHECK(r.iterations == 1);
  CHECK(profile_norm(r.actions) == 0.0);
}

TEST_CASE("single edge equilibrium from the 2x2 linear system", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const GameSpec game(generators::complete(2), sp, static_theta(sp, {1.0, 0.0}), QuadraticUtility(1.0, 0.5, 1.0),
                      AdmissibleSet::norm_ball(10.0));
  const auto r = picard_solve(game);
  // a1 = 0.5 a2 + 1, a2 = 0.5 a1
  CHECK(r.actions[0](0, 0) == Approx(4.0 / 3.0).margin(1e-8));
  CHECK(r.actions[1](0, 0) == Approx(2.0 / 3.0).margin(1e-8));
  CHECK(r.rho == 0.5);
  CHECK(r.error_bound() <= 1e-10);
}

TEST_CASE("triangle with unit heterogeneity", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const GameSpec game(generators::cycle(3), sp, static_theta(sp, {1.0, 1.0, 1.0}), QuadraticUtility(1.0, 0.5, 1.0),
                      AdmissibleSet::norm_ball(10.0));
  const auto r = picard_solve(game);
  for (const auto& a : r.actions) CHECK(a(0, 0) == Approx(2.0).margin(1e-9));
}

TEST_CASE("game construction validates its inputs", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const auto other = ScenarioSpace::uniform(2, {0.0}, FiltrationKind::trivial);
  const QuadraticUtility u(1.0, 0.5, 1.0);
  CHECK_THROWS_AS(GameSpec(generators::path(3), sp, static_theta(sp, {1.0}), u, AdmissibleSet::norm_ball(1.0)),
                  IncompleteProfileError);
  CHECK_THROWS_AS(GameSpec(generators::path(1), sp, static_theta(other, {1.0}), u, AdmissibleSet::norm_ball(1.0)),
                  SpaceMismatchError);
  CHECK_THROWS_AS(GameSpec(generators::path(1), sp, static_theta(sp, {1.0}), QuadraticUtility(1.0, 1.0, 1.0),
                           AdmissibleSet::norm_ball(1.0)),
                  ContractionViolationError);
}

TEST_CASE("Picard iterates match the linear oracle and stay within the a priori bound", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const auto g = generators::path(7);
  const std::vector<double> th{0.3, -1.0, 0.8, 0.1, -0.4, 1.2, 0.0};
  const double ell = 0.7;
  const GameSpec game(g, sp, static_theta(sp, th), QuadraticUtility(1.0, ell, 1.0), AdmissibleSet::norm_ball(50.0));
  std::vector<ActionProfile> history;
  const auto r = picard_solve(game, {1e-12, 100'000, true}, nullptr, &history);
  const auto exact = linear_equilibrium(g, th, 1.0, ell, 1.0);
  double worst = 0.0;
  for (std::size_t v = 0; v < 7; ++v) worst = std::max(worst, std::abs(r.actions[v](0, 0) - exact(static_cast<Eigen::Index>(v))));
  CHECK(worst <= 1e-11);
  // per-vertex error of iterate k is at most rho^k M
  for (std::size_t k = 0; k < history.size(); ++k)
    for (std::size_t v = 0; v < 7; ++v)
      CHECK(std::abs(history[k][v](0, 0) - exact(static_cast<Eigen::Index>(v))) <=
            std::pow(ell, static_cast<double>(k)) * 50.0 + 1e-12);
}

TEST_CASE("iteration cap is reported as non-convergence", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const GameSpec game(generators::cycle(5), sp, static_theta(sp, {1, 2, 3, 4, 5}), QuadraticUtility(1.0, 0.9, 1.0),
                      AdmissibleSet::norm_ball(10.0));
  CHECK_THROWS_AS(picard_solve(game, {1e-12, 5, false}), NonConvergenceError);
}

TEST_CASE("solves from different starts agree", "[engine]") {
  const auto sp = ScenarioSpace::uniform(4, {0.0, 1.0, 2.0}, FiltrationKind::reveal_at_start);
  const auto g = generators::torus(5, 5);
  const auto theta = sample_theta(sp, g, ThetaSpec::gaussian(0.0, 1.0), 4);
  const GameSpec game(g, sp, theta, QuadraticUtility(1.0, 0.6, 1.0), AdmissibleSet::norm_ball(1.5));
  Rng rng(2);
  ActionProfile start;
  for (std::size_t v = 0; v < g.size(); ++v) start.push_back(game.admissible.project(random_adapted(sp, rng, 2.0)));
  const auto a = picard_solve(game), b = picard_solve(game, {}, &start);
  CHECK(profile_distance(a.actions, b.actions) <= 1e-9);
  for (const auto& x : a.actions) {
    CHECK(check_adapted(x, 1e-12));
    CHECK(game.admissible.contains(x));
  }
}

TEST_CASE("truncated local game on P5", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const auto g = generators::path(5);
  const std::vector<double> th{1.0, -0.5, 2.0, 0.25, -1.0};
  const GameSpec game(g, sp, static_theta(sp, th), QuadraticUtility(1.0, 0.5, 1.0), AdmissibleSet::norm_ball(100.0));
  const auto global = picard_solve(game, {1e-13, 100'000, true});
  SECTION("radius beyond the eccentricity reproduces the global equilibrium") {
    const auto local = truncated_local_solve(game, 2, 2, {1e-13, 100'000, true});
    CHECK(distance(local.center(), global.actions[2]) <= 2e-13);
  }
  SECTION("radius one at the center against the 3x3 truncated system") {
    const auto local = truncated_local_solve(game, 2, 1, {1e-13, 100'000, true});
    const auto trunc = linear_equilibrium(g, th, 1.0, 0.5, 1.0, {1, 2, 3});
    const auto full = linear_equilibrium(g, th, 1.0, 0.5, 1.0);
    CHECK(local.center()(0, 0) == Approx(trunc(1)).margin(1e-11));
    CHECK(global.actions[2](0, 0) == Approx(full(2)).margin(1e-11));
    const double gap = std::abs(trunc(1) - full(2));
    CHECK(gap > 1e-3);
    CHECK(gap <= 2 * 0.5 * 100.0);
  }
}

TEST_CASE("truncation error on Z stays below 2 rho^k M", "[engine]") {
  const auto sp = ScenarioSpace::uniform(4, {0.0, 1.0}, FiltrationKind::reveal_at_start);
  const auto z = generators::integer_line();
  const QuadraticUtility u(1.0, 0.6, 1.0);
  const auto C = AdmissibleSet::norm_ball(2.0);
  ThetaSampler sampler(sp, ThetaSpec::gaussian(0.0, 1.5), 77);
  auto theta_of = [&](VertexId v) { return sampler(v); };
  const SolveOptions tight{1e-13, 100'000, true};
  for (VertexId v : {0, 17}) {
    for (std::size_t k = 0; k <= 8; ++k) {
      const auto ref = truncated_local_solve(z, v, k + 10, u, C, sp, theta_of, tight).center();
      const auto loc = truncated_local_solve(z, v, k, u, C, sp, theta_of, tight).center();
      // reference itself is within 2 rho^{k+10} M of the true equilibrium
      const double slack = 2 * std::pow(0.6, k + 10.0) * 2.0;
      CHECK(distance(loc, ref) <= 2 * std::pow(0.6, static_cast<double>(k)) * 2.0 + slack);
    }
  }
}

TEST_CASE("exploitability", "[engine]") {
  const auto sp = ScenarioSpace::deterministic();
  const GameSpec game(generators::complete(2), sp, static_theta(sp, {1.0, 0.0}), QuadraticUtility(1.0, 0.5, 1.0),
                      AdmissibleSet::norm_ball(10.0));
  const auto eq = picard_solve(game);
  CHECK(exploitability(game, eq.actions).max_gap <= 1e-8);
  SECTION("perturbing one player by delta costs gamma delta^2 / 2") {
    auto a = eq.actions;
    a[1] = a[1] + ActionProcess::constant(sp, 0.1);
    const auto e = exploitability(game, a);
    CHECK(e.gaps[1] == Approx(0.005).margin(1e-9));
  }
  SECTION("the zero profile is not an equilibrium") {
    const auto e = exploitability(game, ActionProfile(2, ActionProcess(sp)));
    CHECK(e.gaps[0] > 0.0);
    CHECK(e.max_gap == Approx(0.5));  // player 0 best response is 1 with payoff 1/2
  }
}

TEST_CASE("epsilon-Nash profiles from truncated games", "[engine]") {
  const auto sp = ScenarioSpace::uniform(2, {0.0, 1.0}, FiltrationKind::reveal_at_start);
  const auto g = generators::cycle(10);
  const auto theta = sample_theta(sp, g, ThetaSpec::gaussian(0.0, 1.0), 31);
  const GameSpec game(g, sp, theta, QuadraticUtility(1.0, 0.5, 1.0), AdmissibleSet::norm_ball(2.0));
  for (std::size_t k : {0u, 1u, 3u, 5u}) {
    const auto e = build_eps_nash(game, k);
    CHECK(exploitability(game, e.profile).max_gap <= e.eps + 1e-8);
  }
  SECTION("k = 0: each player best responds to an empty aggregate") {
    const auto e = build_eps_nash(game, 0);
    for (std::size_t v = 0; v < 10; ++v) {
      const auto expected = game.utility.best_response(ActionProcess(sp), theta[v], game.admissible);
      CHECK(distance(e.profile[v], expected) <= 1e-12);
    }
  }
  SECTION("k beyond the diameter gives the equilibrium") {
    const auto e = build_eps_nash(game, 5);
    CHECK(exploitability(game, e.profile).max_gap <= 1e-8);
  }
  SECTION("epsilon formula") {
    const auto e = build_eps_nash(game, 3);
    const auto L = lipschitz_constants(game);
    CHECK(e.eps == Approx(2 * std::pow(0.5, 3) * 2.0 * (L.L_a + 2 * L.L_z)));
  }
}

TEST_CASE("clamped reconstruction", "[engine]") {
  const auto sp = ScenarioSpace::uniform(2, {0.0, 1.0}, FiltrationKind::reveal_at_start);
  const auto g = generators::cycle(10);
  const auto theta = sample_theta(sp, g, ThetaSpec::gaussian(0.0, 1.0), 8);
  const GameSpec game(g, sp, theta, QuadraticUtility(1.0, 0.5, 1.0), AdmissibleSet::norm_ball(3.0));
  const auto global = picard_solve(game, {1e-13, 100'000, true});
  SECTION("whole graph: nothing is clamped") {
    std::vector<VertexId> all(10);
    std::iota(all.begin(), all.end(), 0);
    const auto rec = clamped_reconstruct(game, SubgraphView(all), {}, {1e-13, 100'000, true});
    CHECK(profile_distance(rec.result.actions, global.actions) <= 1e-11);
  }
  SECTION("ball of radius two with exact boundary data") {
    const auto h = SubgraphView::of(ball(g, 0, 2));
    const auto parts = boundary_interior(g, h);
    CHECK(parts.boundary == std::vector<VertexId>{2, 8});
    std::map<VertexId, ActionProcess> b;
    for (auto v : parts.boundary) b.emplace(v, global.actions[static_cast<std::size_t>(v)]);
    std::vector<ActionProfile> history;
    const auto rec = clamped_reconstruct(game, h, b, {}, &history);
    for (auto v : parts.interior) CHECK(distance(rec.at(v), global.actions[static_cast<std::size_t>(v)]) <= 1e-8);
    for (std::size_t k = 0; k < history.size(); ++k)
      for (auto v : parts.interior) {
        const auto i = static_cast<std::size_t>(std::find(h.vertices.begin(), h.vertices.end(), v) - h.vertices.begin());
        CHECK(distance(history[k][i], global.actions[static_cast<std::size_t>(v)]) <= std::pow(0.5, k) * 3.0 + 1e-12);
      }
  }
  SECTION("boundary perturbation moves the interior by at most delta rho / (1 - rho)") {
    const auto h = SubgraphView::of(ball(g, 5, 3));
    const auto parts = boundary_interior(g, h);
    std::map<VertexId, ActionProcess> exact, shifted;
    Rng rng(4);
    const double delta = 0.2;
    for (auto v : parts.boundary) {
      exact.emplace(v, global.actions[static_cast<std::size_t>(v)]);
      auto d = random_adapted(sp, rng);
      d *= delta / norm(d);
      shifted.emplace(v, global.actions[static_cast<std::size_t>(v)] + d);
    }
    const auto r0 = clamped_reconstruct(game, h, exact, {1e-13, 100'000, true});
    const auto r1 = clamped_reconstruct(game, h, shifted, {1e-13, 100'000, true});
    for (auto v : parts.interior) CHECK(distance(r0.at(v), r1.at(v)) <= delta * 0.5 / (1 - 0.5) + 1e-10);
  }
  SECTION("missing boundary data is an error") {
    CHECK_THROWS_AS(clamped_reconstruct(game, SubgraphView::of(ball(g, 0, 2)), {}), IncompleteBoundaryError);
  }
}

TEST_CASE("thread count does not change results", "[engine]") {
  const auto sp = ScenarioSpace::uniform(3, {0.0, 1.0}, FiltrationKind::reveal_at_start);
  const auto g = generators::torus(12, 12);
  const auto theta = sample_theta(sp, g, ThetaSpec::gaussian(0.0, 1.0), 6);
  const GameSpec game(g, sp, theta, QuadraticUtility(1.0, 0.5, 1.0), AdmissibleSet::norm_ball(2.0));
  ::setenv("SPARSE_NASH_THREADS", "1", 1);
  const auto a = picard_solve(game);
  ::setenv("SPARSE_NASH_THREADS", "4", 1);
  const auto b = picard_solve(game);
  ::unsetenv("SPARSE_NASH_THREADS");
  CHECK(profile_distance(a.actions, b.actions) == 0.0);
  CHECK(a.iterations == b.iterations);
}
