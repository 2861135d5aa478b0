// sparse-nash: command line driver for the equilibrium engine.
//
//   sparse-nash <subcommand> --config <path> [--seed N] [--out DIR]
//
// Exit codes: 0 success, 2 a bound check failed, 1 error.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparse_nash/sparse_nash.hpp"

namespace fs = std::filesystem;
using namespace sparse_nash;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Run {
  ExperimentConfig cfg;
  fs::path out;
  std::vector<std::string> outputs;
  Json summary = Json::object();
  bool bounds_ok = true;

  CsvWriter open(const std::string& name, std::ofstream& f) {
    f = open_output((out / name).string());
    outputs.push_back(name);
    return CsvWriter(f);
  }
};

struct PlotPoint {
  std::string series;
  double x, y, bound;
};

void emit_plot_data(Run& run, const std::vector<PlotPoint>& pts) {
  std::ofstream f;
  auto csv = run.open("plot.csv", f);
  csv.row("series", "x", "y", "bound");
  for (const auto& p : pts) csv.row(p.series, p.x, p.y, p.bound);
}

void write_actions(Run& run, const std::string& name, const std::vector<VertexId>& ids, const ActionProfile& a) {
  std::ofstream f;
  auto csv = run.open(name, f);
  csv.row("vertex", "scenario", "time", "action");
  const auto& grid = run.cfg.space->time_grid();
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t s = 0; s < a[i].atoms(); ++s)
      for (std::size_t j = 0; j < a[i].steps(); ++j) csv.row(ids[i], s, grid[j], a[i](s, j));
}

std::vector<VertexId> iota_ids(std::size_t n) {
  std::vector<VertexId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<VertexId>(i);
  return v;
}

/// Calls fn with the configured utility (state-free models only).
template <class Fn>
auto with_utility(const ExperimentConfig& c, Fn&& fn) {
  const auto& u = c.utility();
  if (u.kind == "quadratic") return fn(u.quadratic);
  if (u.kind == "smooth_penalty") return fn(SmoothPenaltyUtility(u.quadratic, u.eps));
  throw ConfigError("utility.utility: \"" + u.kind + "\" is only supported by solve and volterra-check");
}

/// Calls fn with the graph as a NeighborGraph.
template <class Fn>
auto with_graph(const ExperimentConfig& c, Fn&& fn) {
  const auto& g = c.graph();
  if (g.finite) return fn(*g.finite);
  return fn(*g.lazy);
}

std::vector<std::size_t> counts_or(const std::optional<ConfigNode>& sec, const std::string& key,
                                   std::vector<std::size_t> d) {
  return sec && sec->has(key) ? sec->at(key).counts() : d;
}

std::vector<VertexId> vertices_or(const std::optional<ConfigNode>& sec, const std::string& key,
                                  std::vector<VertexId> d) {
  if (!sec || !sec->has(key)) return d;
  const auto n = sec->at(key);
  std::vector<VertexId> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(n[i].integer());
  return out;
}

void put_result(Json& j, const EquilibriumResult& r) {
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["rho"] = r.rho;
  j["apriori_bound"] = r.apriori_bound;
  j["aposteriori_bound"] = r.aposteriori_bound;
}

// ---------------------------------------------------------------------------

template <Utility U>
void finish_solve(Run& run, const GameSpec<U>& game) {
  const auto r = picard_solve(game, run.cfg.solve);
  write_actions(run, "actions.csv", iota_ids(game.graph.size()), r.actions);
  const auto expl = exploitability(game, r.actions);
  put_result(run.summary, r);
  run.summary["radius"] = game.radius();
  run.summary["max_exploitability"] = expl.max_gap;
  std::ofstream f;
  auto csv = run.open("summary.csv", f);
  csv.row("metric", "value");
  csv.row("iterations", r.iterations);
  csv.row("residual", r.residual);
  csv.row("rho", r.rho);
  csv.row("radius", game.radius());
  csv.row("apriori_bound", r.apriori_bound);
  csv.row("aposteriori_bound", r.aposteriori_bound);
  csv.row("max_exploitability", expl.max_gap);
  if (r.error_bound() > run.cfg.solve.tol && r.residual > run.cfg.solve.tol) run.bounds_ok = false;
}

void cmd_solve(Run& run) {
  const auto& c = run.cfg;
  if (c.graph().infinite())
    throw ConfigError("graph.kind: infinite graphs are only solved locally; use truncate or reconstruct");
  const auto& g = c.finite_graph();
  const auto theta = sample_theta(c.space, g, c.theta, c.seed);
  if (c.utility().kind == "lq_state") {
    // theta acts as the state noise eta of the linear dynamics
    finish_solve(run, reduce_lq_state_game(*c.utility().kernel, c.utility().lq, g, theta, c.admissible(),
                                           c.normalization));
    return;
  }
  with_utility(c, [&](const auto& u) {
    finish_solve(run, GameSpec(g, c.space, theta, u, c.admissible(), c.normalization));
  });
}

/// Reference equilibrium at vertex v: the global solve on finite graphs, a
/// wide truncated solve on lazy ones.
struct Reference {
  std::optional<EquilibriumResult> global;
  std::map<VertexId, ActionProcess> local;
};

void cmd_truncate(Run& run) {
  const auto& c = run.cfg;
  const auto sec = c.section("truncate");
  const auto radii = counts_or(sec, "radii", {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const bool finite = !c.graph().infinite();
  const auto vertices =
      vertices_or(sec, "vertices", finite ? iota_ids(c.finite_graph().size()) : std::vector<VertexId>{c.graph().origin});
  const std::size_t kmax = *std::max_element(radii.begin(), radii.end());
  const std::size_t ref_radius = sec ? sec->count_or("reference_radius", kmax + 10) : kmax + 10;
  const SolveOptions tight{std::min(c.solve.tol, 1e-12), c.solve.max_iter, true};
  ThetaSampler sampler(c.space, c.theta, c.seed);
  auto theta_of = [&](VertexId v) { return sampler(v); };

  with_utility(c, [&](const auto& u) {
    const double M = c.radius();
    const double rho = u.constants().rho();
    std::map<VertexId, ActionProcess> ref;
    with_graph(c, [&](const auto& g) {
      using G = std::decay_t<decltype(g)>;
      if constexpr (std::is_same_v<G, FiniteGraph>) {
        std::vector<ActionProcess> th;
        for (std::size_t v = 0; v < g.size(); ++v) th.push_back(sampler(static_cast<VertexId>(v)));
        GameSpec game(g, c.space, th, u, c.admissible(), c.normalization);
        const auto r = picard_solve(game, tight);
        for (auto v : vertices) ref.emplace(v, r.actions.at(static_cast<std::size_t>(v)));
      } else {
        for (auto v : vertices)
          ref.emplace(v, truncated_local_solve(g, v, ref_radius, u, c.admissible(), c.space, theta_of, tight,
                                               c.normalization)
                             .center());
      }
    });
    std::ofstream f;
    auto csv = run.open("truncation.csv", f);
    csv.row("vertex", "k", "error", "bound", "pass");
    std::vector<PlotPoint> plot;
    std::size_t violations = 0;
    for (auto k : radii) {
      const double bound = 2.0 * std::pow(rho, static_cast<double>(k)) * M;
      double worst = 0.0;
      for (auto v : vertices) {
        const auto local = with_graph(c, [&](const auto& g) {
          return truncated_local_solve(g, v, k, u, c.admissible(), c.space, theta_of, c.solve, c.normalization);
        });
        const double err = distance(local.center(), ref.at(v));
        const bool pass = err <= bound;
        violations += !pass;
        worst = std::max(worst, err);
        csv.row(v, k, err, bound, pass);
      }
      plot.push_back({"truncation", static_cast<double>(k), worst, bound});
    }
    emit_plot_data(run, plot);
    run.summary["violations"] = violations;
    run.summary["rho"] = rho;
    run.summary["radius"] = M;
    if (violations) run.bounds_ok = false;
  });
}

void cmd_reconstruct(Run& run) {
  const auto& c = run.cfg;
  const auto sec = c.section("reconstruct");
  const VertexId center = sec && sec->has("center") ? sec->at("center").integer() : c.graph().origin;
  const std::size_t radius = sec ? sec->count_or("radius", 2) : 2;
  const double delta = sec ? sec->number_or("perturbation", 0.0) : 0.0;
  const double match_tol = sec ? sec->number_or("match_tol", 1e-8) : 1e-8;
  const std::size_t ref_radius = sec ? sec->count_or("reference_radius", radius + 60) : radius + 60;
  const SolveOptions tight{std::min(c.solve.tol, 1e-13), c.solve.max_iter, true};
  ThetaSampler sampler(c.space, c.theta, c.seed);
  auto theta_of = [&](VertexId v) { return sampler(v); };

  with_utility(c, [&](const auto& u) {
    const double M = c.radius();
    const double rho = u.constants().rho();
    with_graph(c, [&](const auto& g) {
      using G = std::decay_t<decltype(g)>;
      const Ball hb = ball(g, center, radius);
      const SubgraphView h = SubgraphView::of(hb);
      // reference equilibrium on H and its exterior neighbors
      std::map<VertexId, ActionProcess> ref;
      if constexpr (std::is_same_v<G, FiniteGraph>) {
        std::vector<ActionProcess> th;
        for (std::size_t v = 0; v < g.size(); ++v) th.push_back(sampler(static_cast<VertexId>(v)));
        GameSpec game(g, c.space, th, u, c.admissible(), c.normalization);
        const auto r = picard_solve(game, tight);
        for (auto v : h.vertices) ref.emplace(v, r.actions[static_cast<std::size_t>(v)]);
      } else {
        const auto local =
            truncated_local_solve(g, center, ref_radius, u, c.admissible(), c.space, theta_of, tight, c.normalization);
        for (auto v : h.vertices) ref.emplace(v, local.at(v));
      }
      const auto parts = boundary_interior(g, h);
      std::map<VertexId, ActionProcess> b;
      const double shift = delta / std::sqrt(static_cast<double>(c.space->steps()));
      for (auto v : parts.boundary) b.emplace(v, ref.at(v) + ActionProcess::constant(c.space, shift));
      std::vector<ActionProfile> history;
      const auto rec = clamped_reconstruct(g, u, c.admissible(), c.space, theta_of, h, b, c.solve, c.normalization,
                                           &history);
      const double allowed = delta > 0.0 ? delta * rho / (1.0 - rho) + match_tol : match_tol;
      std::ofstream f1;
      auto csv = run.open("reconstruct.csv", f1);
      csv.row("vertex", "error", "bound", "pass");
      double worst = 0.0;
      std::size_t violations = 0;
      for (auto v : parts.interior) {
        const double err = distance(rec.at(v), ref.at(v));
        worst = std::max(worst, err);
        violations += err > allowed;
        csv.row(v, err, allowed, err <= allowed);
      }
      std::ofstream f2;
      auto env = run.open("envelope.csv", f2);
      env.row("iteration", "error", "envelope", "pass");
      std::vector<PlotPoint> plot;
      for (std::size_t k = 0; k < history.size(); ++k) {
        double err = 0.0;
        for (auto v : parts.interior) {
          const auto i = static_cast<std::size_t>(std::lower_bound(h.vertices.begin(), h.vertices.end(), v) -
                                                  h.vertices.begin());
          err = std::max(err, distance(history[k][i], ref.at(v)));
        }
        const double envelope = M * std::pow(rho, static_cast<double>(k));
        const bool pass = delta > 0.0 || err <= envelope + match_tol;
        violations += !pass;
        env.row(k, err, envelope, pass);
        plot.push_back({"reconstruction", static_cast<double>(k), err, envelope});
      }
      emit_plot_data(run, plot);
      run.summary["boundary_size"] = parts.boundary.size();
      run.summary["interior_size"] = parts.interior.size();
      run.summary["max_interior_error"] = worst;
      run.summary["iterations"] = rec.result.iterations;
      run.summary["violations"] = violations;
      if (violations) run.bounds_ok = false;
    });
  });
}

void cmd_epsnash(Run& run) {
  const auto& c = run.cfg;
  const auto& g = c.finite_graph();
  const auto sec = c.section("epsnash");
  const auto radii = counts_or(sec, "radii", {0, 1, 2, 3, 4, 5});
  const double slack = sec ? sec->number_or("slack", 1e-8) : 1e-8;
  const auto theta = sample_theta(c.space, g, c.theta, c.seed);
  with_utility(c, [&](const auto& u) {
    GameSpec game(g, c.space, theta, u, c.admissible(), c.normalization);
    std::ofstream f;
    auto csv = run.open("epsnash.csv", f);
    csv.row("k", "exploitability", "eps", "pass");
    std::vector<PlotPoint> plot;
    std::size_t violations = 0;
    for (auto k : radii) {
      const auto e = build_eps_nash(game, k, c.solve);
      const double gap = exploitability(game, e.profile).max_gap;
      const bool pass = gap <= e.eps + slack;
      violations += !pass;
      csv.row(k, gap, e.eps, pass);
      plot.push_back({"epsnash", static_cast<double>(k), gap, e.eps});
      run.summary["L_a"] = e.lipschitz.L_a;
      run.summary["L_z"] = e.lipschitz.L_z;
    }
    emit_plot_data(run, plot);
    run.summary["violations"] = violations;
    if (violations) run.bounds_ok = false;
  });
}

BLTestFunction parse_function(const std::optional<ConfigNode>& n, std::size_t steps) {
  if (!n) return BLTestFunction::tanh_linear(1.0, 1, steps);
  const auto kind = n->str_or("kind", "tanh_linear");
  if (kind == "tanh_linear") return BLTestFunction::tanh_linear(n->number_or("scale", 1.0), 1, steps);
  if (kind == "clipped_mean") return BLTestFunction::clipped_mean(n->number_or("clip", 1.0), steps);
  if (kind == "clipped_max") return BLTestFunction::clipped_max(n->number_or("clip", 1.0));
  if (kind == "constant") return BLTestFunction::constant(n->number_or("value", 1.0));
  n->at("kind").fail("unknown test function \"" + kind + "\"");
}

void cmd_corrdecay(Run& run) {
  const auto& c = run.cfg;
  const auto& g = c.finite_graph();
  const auto sec = c.section("corrdecay");
  CovarianceOptions opts;
  opts.seed = c.seed;
  const auto mode = sec ? sec->str_or("mode", "exhaustive") : std::string("exhaustive");
  if (mode == "exhaustive")
    opts.mode = CovarianceMode::exhaustive;
  else if (mode == "montecarlo")
    opts.mode = CovarianceMode::montecarlo;
  else
    sec->at("mode").fail("expected \"exhaustive\" or \"montecarlo\"");
  opts.replications = sec ? sec->count_or("replications", 10'000) : 10'000;
  opts.window = vertices_or(sec, "window", {});

  std::vector<std::pair<VertexId, VertexId>> pairs;
  if (sec && sec->has("pairs")) {
    const auto p = sec->at("pairs");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].size() != 2) p[i].fail("expected [u, v]");
      pairs.emplace_back(p[i][0].integer(), p[i][1].integer());
    }
  } else {
    const VertexId source = sec ? sec->integer_or("source", 0) : 0;
    const std::size_t dmax = sec ? sec->count_or("max_distance", 4) : 4;
    // smallest vertex at each distance from the source
    const auto b = ball(g, source, dmax);
    for (std::size_t d = 0; d <= dmax; ++d) {
      std::optional<VertexId> pick;
      for (std::size_t i = 0; i < b.size(); ++i)
        if (b.depth[i] == d && (!pick || b.vertices[i] < *pick)) pick = b.vertices[i];
      if (pick) pairs.emplace_back(source, *pick);
    }
  }
  const auto f = parse_function(sec ? sec->find("function") : std::nullopt, c.space->steps());
  with_utility(c, [&](const auto& u) {
    CorrelationModel<std::decay_t<decltype(u)>> model{g, u, c.admissible(), c.space->time_grid(), c.theta,
                                                     c.normalization, {std::min(c.solve.tol, 1e-12), c.solve.max_iter, true}};
    const auto rows = decay_profile(model, pairs, f, opts);
    std::ofstream out;
    auto csv = run.open("corrdecay.csv", out);
    csv.row("d", "k", "cov", "stderr", "bound", "pass");
    std::vector<PlotPoint> plot;
    std::size_t violations = 0;
    for (const auto& r : rows) {
      csv.row(r.distance, r.k, r.cov, r.stderr_, r.bound, r.pass);
      plot.push_back({"corrdecay", static_cast<double>(r.distance), std::abs(r.cov), r.bound});
      violations += !r.pass;
    }
    emit_plot_data(run, plot);
    run.summary["rows"] = rows.size();
    run.summary["violations"] = violations;
    if (violations) run.bounds_ok = false;
  });
}

void cmd_lwc(Run& run) {
  const auto& c = run.cfg;
  const auto sec = c.section("lwc");
  if (!sec) throw ConfigError("lwc: required field missing");
  with_utility(c, [&](const auto& u) {
    ConvergenceSpec<std::decay_t<decltype(u)>> spec{
        parse_sequence(sec->at("sequence").str()), sec->at("sizes").counts(), u, c.admissible(), c.space, c.theta};
    spec.k = sec->count_or("k", 2);
    spec.buffer = sec->count_or("buffer", 6);
    spec.limit_radius = sec->count_or("limit_radius", 0);
    spec.replications = sec->count_or("replications", 4);
    spec.tol = std::min(c.solve.tol, 1e-13);
    spec.seed = c.seed;
    const auto reports = equilibrium_convergence_experiment(spec);
    std::ofstream f;
    auto csv = run.open("lwc.csv", f);
    csv.row("n", "h_id", "finite_avg", "limit_est", "gap", "stderr", "budget");
    std::vector<PlotPoint> plot;
    for (const auto& rep : reports) {
      for (const auto& r : rep.rows) csv.row(r.n, r.h_id, r.finite_avg, r.limit_est, r.gap, r.stderr_, r.budget);
      plot.push_back({"lwc", static_cast<double>(rep.n), rep.max_gap, 3.0 * (rep.max_gap_stderr + rep.budget)});
    }
    emit_plot_data(run, plot);
    const auto verdict = judge_convergence(reports);
    run.summary["gap_nonincreasing"] = verdict.nonincreasing;
    run.summary["final_gap"] = reports.back().max_gap;
    run.summary["final_threshold"] = verdict.threshold;
    if (!verdict.pass()) run.bounds_ok = false;
    if (spec.kind == SequenceKind::blocks) {
      const std::size_t n = sec->count_or("uniformity_n", 8);
      const auto chi = root_position_uniformity(n, sec->count_or("uniformity_samples", 10'000), c.seed);
      run.summary["root_uniformity_chi2"] = chi.statistic;
      run.summary["root_uniformity_p"] = chi.p_value;
      if (chi.p_value < 0.01) run.bounds_ok = false;
    }
  });
  if (auto d = sec->find("dstar")) {
    const std::size_t kmax = d->count_or("k_max", 8);
    const auto pairs = d->at("pairs");
    std::ofstream f;
    auto csv = run.open("dstar.csv", f);
    csv.row("pair", "left", "right", "value", "error_bound");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto a = parse_graph(pairs[i][0], c.base_dir), b = parse_graph(pairs[i][1], c.base_dir);
      auto side = [&](const GraphConfig& gc, auto&& fn) {
        if (gc.finite) return fn(*gc.finite, gc.finite->root.value_or(0));
        return fn(*gc.lazy, gc.origin);
      };
      const auto r = side(a, [&](const auto& ga, VertexId oa) {
        return side(b, [&](const auto& gb, VertexId ob) { return dstar_truncated(ga, oa, gb, ob, kmax); });
      });
      csv.row(i, a.kind, b.kind, r.value, r.error_bound);
    }
  }
}

void cmd_mtp(Run& run) {
  const auto& c = run.cfg;
  const auto& g = c.finite_graph();
  const auto sec = c.section("mtp");
  std::vector<double> law = uniform_root_law(g);
  if (sec && sec->has("root_law")) {
    const auto n = sec->at("root_law");
    if (n.json().is_string()) {
      if (n.str() != "uniform") n.fail("expected \"uniform\", {\"vertex\": v} or a weight list");
    } else if (n.json().is_object()) {
      const auto v = n.at("vertex").integer();
      if (!g.contains(v)) n.at("vertex").fail("vertex not in graph");
      law.assign(g.size(), 0.0);
      law[static_cast<std::size_t>(v)] = 1.0;
    } else {
      law = n.numbers();
    }
  }
  const auto fname = sec ? sec->str_or("function", "degree_adjacent") : std::string("degree_adjacent");
  std::function<double(const FiniteGraph&, VertexId, VertexId)> F;
  if (fname == "degree_adjacent")
    F = [](const FiniteGraph& gr, VertexId a, VertexId b) {
      return gr.adjacent(a, b) ? static_cast<double>(gr.degree(a)) : 0.0;
    };
  else if (fname == "adjacent")
    F = [](const FiniteGraph& gr, VertexId a, VertexId b) { return gr.adjacent(a, b) ? 1.0 : 0.0; };
  else if (fname == "inverse_degree")
    F = [](const FiniteGraph& gr, VertexId a, VertexId b) {
      return gr.adjacent(a, b) ? 1.0 / static_cast<double>(gr.degree(a)) : 0.0;
    };
  else
    sec->at("function").fail("unknown transport function \"" + fname + "\"");
  const auto expect = sec ? sec->str_or("expect", "holds") : std::string("holds");
  if (expect != "holds" && expect != "violated") sec->at("expect").fail("expected \"holds\" or \"violated\"");
  const auto r = mtp_check(g, law, F);
  std::ofstream f;
  auto csv = run.open("mtp.csv", f);
  csv.row("lhs", "rhs", "holds", "expected");
  csv.row(r.lhs, r.rhs, r.pass, expect);
  run.summary["lhs"] = r.lhs;
  run.summary["rhs"] = r.rhs;
  run.summary["holds"] = r.pass;
  if (r.pass != (expect == "holds")) run.bounds_ok = false;
}

void cmd_volterra(Run& run) {
  const auto& c = run.cfg;
  const auto sec = c.section("volterra");
  const std::size_t instances = sec ? sec->count_or("instances", 100) : 100;
  const std::size_t max_steps = sec ? sec->count_or("max_steps", 9) : 9;
  const double tol = sec ? sec->number_or("tol", 1e-10) : 1e-10;
  const double scale = sec ? sec->number_or("kernel_scale", 0.3) : 0.3;
  LqCoefficients co{sec ? sec->number_or("q", 1.0) : 1.0, sec ? sec->number_or("r", 1.0) : 1.0,
                    sec ? sec->number_or("c", 0.3) : 0.3, sec ? sec->number_or("q_T", 0.5) : 0.5};
  const FiniteGraph g = c.graph_ && !c.graph().infinite() ? c.finite_graph() : generators::cycle(5);
  std::ofstream f;
  auto csv = run.open("volterra.csv", f);
  csv.row("instance", "steps", "state_error", "payoff_error", "pass");
  std::size_t violations = 0;
  double worst_state = 0.0, worst_payoff = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng = make_stream(c.seed, {stream_tag::test, static_cast<std::int64_t>(i)});
    const std::size_t T = 1 + std::uniform_int_distribution<std::size_t>(0, max_steps - 1)(rng);
    std::vector<double> grid(T);
    for (std::size_t j = 0; j < T; ++j) grid[j] = static_cast<double>(j);
    const auto space = ScenarioSpace::uniform(3, grid, FiltrationKind::reveal_at_start);
    std::uniform_real_distribution<double> unif(-scale, scale);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T)), L = K;
    for (Eigen::Index a = 0; a < K.rows(); ++a)
      for (Eigen::Index b = 0; b < a; ++b) {
        K(a, b) = unif(rng);
        L(a, b) = unif(rng);
      }
    const VolterraKernel kernel(K, L);
    std::vector<ActionProcess> eta, act;
    for (std::size_t v = 0; v < g.size(); ++v) {
      eta.push_back(random_adapted(space, rng));
      act.push_back(random_adapted(space, rng));
    }
    const double state_err = distance(volterra_state(kernel, act[0], eta[0]), volterra_state_direct(kernel, act[0], eta[0]));
    // reduced utility against J_v from directly simulated states
    const auto game = reduce_lq_state_game(kernel, co, g, eta, AdmissibleSet::norm_ball(10.0), c.normalization);
    std::vector<ActionProcess> X;
    for (std::size_t v = 0; v < g.size(); ++v) X.push_back(volterra_state_direct(kernel, act[v], eta[v]));
    double payoff_err = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
      const auto id = static_cast<VertexId>(v);
      const double direct = lq_payoff(co, X[v], local_aggregate(g, X, id, c.normalization), act[v]);
      const double reduced =
          game.utility.evaluate(act[v], local_aggregate(g, act, id, c.normalization), game.theta[v]);
      payoff_err = std::max(payoff_err, std::abs(direct - reduced));
    }
    const bool pass = state_err <= tol && payoff_err <= tol;
    violations += !pass;
    worst_state = std::max(worst_state, state_err);
    worst_payoff = std::max(worst_payoff, payoff_err);
    csv.row(i, T, state_err, payoff_err, pass);
  }
  run.summary["max_state_error"] = worst_state;
  run.summary["max_payoff_error"] = worst_payoff;
  run.summary["violations"] = violations;
  if (violations) run.bounds_ok = false;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int execute(const std::string& name, void (*cmd)(Run&), const std::string& config, std::optional<std::uint64_t> seed,
            const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  Run run{load_config(config, seed), fs::path(out), {}, Json::object(), true};
  fs::create_directories(run.out);
  cmd(run);
  const int code = run.bounds_ok ? 0 : 2;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json manifest = {{"tool", "sparse-nash"},
                   {"version", kVersion},
                   {"subcommand", name},
                   {"config", config},
                   {"config_hash", fnv1a_hex(run.cfg.text)},
                   {"seed", run.cfg.seed},
                   {"threads", worker_count()},
                   {"wall_time_s", wall},
                   {"outputs", run.outputs},
                   {"summary", run.summary},
                   {"bounds_ok", run.bounds_ok},
                   {"exit_code", code}};
  auto mf = open_output((run.out / "manifest.json").string());
  mf << manifest.dump(2) << '\n';
  for (auto& [key, value] : run.summary.items()) std::cout << key << " = " << value.dump() << '\n';
  std::cout << name << ": " << (run.bounds_ok ? "all bound checks passed" : "BOUND CHECK FAILED") << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium engine for stochastic games on sparse graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Entry {
    const char* name;
    const char* help;
    void (*cmd)(Run&);
  };
  const Entry entries[] = {
      {"solve", "Picard solve of a finite game", cmd_solve},
      {"truncate", "truncated local games against the global equilibrium", cmd_truncate},
      {"reconstruct", "clamped reconstruction of an equilibrium on a subgraph", cmd_reconstruct},
      {"epsnash", "epsilon-Nash profiles from truncated local games", cmd_epsnash},
      {"corrdecay", "covariance decay between distant vertices", cmd_corrdecay},
      {"lwc", "local weak convergence of equilibria along graph sequences", cmd_lwc},
      {"mtp", "mass-transport check for a rooted finite graph", cmd_mtp},
      {"volterra-check", "explicit vs implicit Volterra states and reduced LQ payoffs", cmd_volterra},
  };
  std::string config, out = "out";
  std::optional<std::uint64_t> seed;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", config, "experiment configuration (JSON)")->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out, "output directory")->capture_default_str();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    for (const auto& e : entries)
      if (app.got_subcommand(e.name)) return execute(e.name, e.cmd, config, seed, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
