#pragma once

// JSON experiment configuration. Every diagnostic names the offending field
// path, e.g. "utility.gamma: expected a number".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/heterogeneity.hpp"
#include "sparse_nash/scenario.hpp"
#include "sparse_nash/utility.hpp"
#include "sparse_nash/volterra.hpp"

namespace sparse_nash {

using Json = nlohmann::json;

/// A JSON value together with its path from the document root.
class ConfigNode {
 public:
  ConfigNode(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const Json& json() const { return *j_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  ConfigNode at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) throw ConfigError(join(key) + ": required field missing");
    return {*it, join(key)};
  }
  std::optional<ConfigNode> find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }
  ConfigNode operator[](std::size_t i) const {
    if (!j_->is_array() || i >= j_->size()) fail("index " + std::to_string(i) + " out of range");
    return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"};
  }
  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  std::int64_t integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<std::int64_t>();
  }
  std::size_t count() const {
    const auto v = integer();
    if (v < 0) fail("expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number());
    return out;
  }
  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].count());
    return out;
  }

  double number_or(const std::string& key, double d) const { return has(key) ? at(key).number() : d; }
  std::size_t count_or(const std::string& key, std::size_t d) const { return has(key) ? at(key).count() : d; }
  std::int64_t integer_or(const std::string& key, std::int64_t d) const { return has(key) ? at(key).integer() : d; }
  bool boolean_or(const std::string& key, bool d) const { return has(key) ? at(key).boolean() : d; }
  std::string str_or(const std::string& key, std::string d) const { return has(key) ? at(key).str() : d; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* j_;
  std::string path_;
};

/// Finite graphs are explicit; "line", "lattice2d" and "tree" without a depth
/// are lazy and can only be probed through balls.
struct GraphConfig {
  std::string kind;
  std::optional<FiniteGraph> finite;
  std::optional<LazyGraph> lazy;
  /// Default probe vertex of a lazy graph.
  VertexId origin = 0;

  bool infinite() const { return !finite.has_value(); }
};

inline std::string resolve_path(const std::filesystem::path& base, const std::string& file) {
  std::filesystem::path p(file);
  return (p.is_absolute() ? p : base / p).string();
}

inline GraphConfig parse_graph(const ConfigNode& n, const std::filesystem::path& base) {
  GraphConfig g;
  g.kind = n.at("kind").str();
  if (g.kind == "cycle") {
    g.finite = generators::cycle(n.at("n").count());
  } else if (g.kind == "path") {
    g.finite = generators::path(n.at("n").count());
  } else if (g.kind == "complete") {
    g.finite = generators::complete(n.at("n").count());
  } else if (g.kind == "torus") {
    g.finite = generators::torus(n.at("w").count(), n.at("h").count());
  } else if (g.kind == "line") {
    g.lazy = generators::integer_line();
  } else if (g.kind == "lattice2d") {
    g.lazy = generators::lattice2d();
    g.origin = lattice_vertex(0, 0);
  } else if (g.kind == "tree") {
    auto t = generators::regular_tree(n.at("d").count());
    if (n.has("depth")) {
      auto b = ball(t, 0, n.at("depth").count());
      g.finite = b.graph;
    } else {
      g.lazy = std::move(t);
    }
  } else if (g.kind == "explicit") {
    if (n.has("file")) {
      std::ifstream in(resolve_path(base, n.at("file").str()));
      if (!in) n.at("file").fail("cannot open edge list");
      g.finite = load_edge_list(in);
    } else {
      const auto edges = n.at("edges");
      std::vector<Edge> es;
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto e = edges[i];
        if (e.size() != 2) e.fail("expected [u, v]");
        es.emplace_back(e[0].integer(), e[1].integer());
      }
      try {
        g.finite = FiniteGraph(n.at("n").count(), es);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& err) {
        edges.fail(err.what());
      }
    }
  } else {
    n.at("kind").fail("unknown graph kind \"" + g.kind + "\"");
  }
  if (g.finite && n.has("root")) g.finite->root = n.at("root").integer();
  return g;
}

inline SpacePtr parse_scenario(const std::optional<ConfigNode>& n) {
  if (!n) return ScenarioSpace::deterministic();
  std::vector<double> grid = n->has("time_grid") ? n->at("time_grid").numbers() : std::vector<double>{0.0};
  if (n->boolean_or("exhaustive_signs", false))
    return ScenarioSpace::exhaustive_signs(n->at("bits").count(), grid);
  const std::size_t S = n->count_or("atoms", 1);
  if (!n->has("filtration")) return ScenarioSpace::uniform(S, grid, FiltrationKind::trivial);
  const auto f = n->at("filtration");
  if (f.json().is_string()) {
    const auto s = f.str();
    if (s == "trivial") return ScenarioSpace::uniform(S, grid, FiltrationKind::trivial);
    if (s == "reveal_at_start") return ScenarioSpace::uniform(S, grid, FiltrationKind::reveal_at_start);
    f.fail("unknown filtration \"" + s + "\"");
  }
  std::vector<double> p = n->has("probabilities") ? n->at("probabilities").numbers()
                                                  : std::vector<double>(S, 1.0 / static_cast<double>(S));
  std::vector<std::vector<std::vector<std::size_t>>> blocks;
  for (std::size_t j = 0; j < f.size(); ++j) {
    std::vector<std::vector<std::size_t>> part;
    for (std::size_t b = 0; b < f[j].size(); ++b) part.push_back(f[j][b].counts());
    blocks.push_back(std::move(part));
  }
  try {
    return ScenarioSpace::from_blocks(std::move(p), std::move(grid), blocks);
  } catch (const ConfigError& e) {
    throw ConfigError(n->path() + "." + e.what());
  }
}

inline AdmissibleSet parse_admissible(const ConfigNode& n) {
  const auto kind = n.str_or("kind", "norm_ball");
  if (kind == "norm_ball") return AdmissibleSet::norm_ball(n.at("radius").number());
  if (kind == "box") return AdmissibleSet::box(n.at("lo").number(), n.at("hi").number());
  n.at("kind").fail("unknown admissible set \"" + kind + "\"");
}

inline Normalization parse_normalization(const std::optional<ConfigNode>& n) {
  if (!n) return Normalization::degree();
  if (n->json().is_string()) {
    if (n->str() == "degree") return Normalization::degree();
    n->fail("expected \"degree\" or {\"uniform\": D}");
  }
  return Normalization::uniform(n->at("uniform").count());
}

inline ThetaSpec parse_theta(const std::optional<ConfigNode>& n, const std::filesystem::path& base) {
  if (!n) return ThetaSpec::constant(0.0);
  ThetaSpec s;
  try {
    s.generator = ThetaSpec::parse_generator(n->at("generator").str());
  } catch (const ConfigError& e) {
    throw ConfigError(n->path() + "." + e.what());
  }
  s.value = n->number_or("value", 0.0);
  s.mu = n->number_or("mu", 0.0);
  s.sigma = n->number_or("sigma", 1.0);
  s.amplitude = n->number_or("amplitude", 1.0);
  s.common_weight = n->number_or("common_weight", 0.0);
  s.exhaustive = n->boolean_or("exhaustive", false);
  if (s.generator == ThetaSpec::Generator::from_file) {
    if (n->has("file")) {
      std::ifstream in(resolve_path(base, n->at("file").str()));
      if (!in) n->at("file").fail("cannot open theta file");
      s.values = load_theta_values(in);
    } else {
      const auto vals = n->at("values");
      if (!vals.json().is_object()) vals.fail("expected an object {vertex: [values]}");
      for (auto it = vals.json().begin(); it != vals.json().end(); ++it) {
        ConfigNode item(it.value(), vals.path() + "." + it.key());
        VertexId v = 0;
        try {
          v = std::stoll(it.key());
        } catch (const std::exception&) {
          item.fail("vertex key must be an integer");
        }
        s.values[v] = item.json().is_array() ? item.numbers() : std::vector<double>{item.number()};
      }
    }
  }
  return s;
}

inline Eigen::MatrixXd parse_matrix(const ConfigNode& n, std::size_t size) {
  if (n.size() != size) n.fail("expected " + std::to_string(size) + " rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) {
    const auto row = n[i].numbers();
    if (row.size() != size) n[i].fail("expected " + std::to_string(size) + " entries");
    for (std::size_t j = 0; j < size; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

struct UtilityConfig {
  std::string kind = "quadratic";
  QuadraticUtility quadratic{1.0, 0.5, 1.0};
  double eps = 0.0;
  std::optional<VolterraKernel> kernel;
  LqCoefficients lq;

  UtilityConstants constants() const {
    if (kind == "quadratic") return quadratic.constants();
    if (kind == "smooth_penalty") return SmoothPenaltyUtility(quadratic, eps).constants();
    return LqStateUtility(*kernel, lq).constants();
  }
};

inline UtilityConfig parse_utility(const ConfigNode& n, const ScenarioSpace& space) {
  UtilityConfig u;
  u.kind = n.str_or("utility", "quadratic");
  auto wrap = [&](auto&& make) {
    try {
      return make();
    } catch (const ContractionViolationError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ConfigError(n.path() + "." + e.what());
    }
  };
  if (u.kind == "quadratic" || u.kind == "smooth_penalty") {
    u.quadratic = wrap([&] {
      return QuadraticUtility(n.at("gamma").number(), n.at("ell").number(), n.number_or("lambda_theta", 1.0));
    });
    if (u.kind == "smooth_penalty") u.eps = n.at("eps").number();
  } else if (u.kind == "lq_state") {
    const std::size_t T = space.steps();
    u.kernel = wrap([&] { return VolterraKernel(parse_matrix(n.at("K"), T), parse_matrix(n.at("L"), T)); });
    u.lq = {n.number_or("q", 1.0), n.number_or("r", 1.0), n.number_or("c", 0.5), n.number_or("q_T", 0.0)};
  } else {
    n.at("utility").fail("unknown utility \"" + u.kind + "\"");
  }
  require_contraction(u.constants());
  return u;
}

struct ExperimentConfig {
  Json raw;
  std::string text;
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::optional<GraphConfig> graph_;
  SpacePtr space;
  std::optional<UtilityConfig> utility_;
  std::optional<AdmissibleSet> admissible_;
  Normalization normalization;
  ThetaSpec theta;
  SolveOptions solve;

  ConfigNode root() const { return {raw, ""}; }
  std::optional<ConfigNode> section(const std::string& name) const { return root().find(name); }

  const GraphConfig& graph() const {
    if (!graph_) throw ConfigError("graph: required field missing");
    return *graph_;
  }
  const FiniteGraph& finite_graph() const {
    if (graph().infinite())
      throw ConfigError("graph.kind: \"" + graph().kind + "\" is infinite; this operation needs a finite graph");
    return *graph().finite;
  }
  const UtilityConfig& utility() const {
    if (!utility_) throw ConfigError("utility: required field missing");
    return *utility_;
  }
  const AdmissibleSet& admissible() const {
    if (!admissible_) throw ConfigError("admissible: required field missing");
    return *admissible_;
  }
  double radius() const { return admissible().radius(*space); }
};

/// Parses and validates a configuration; `seed_override` replaces the file's seed.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                                     std::optional<std::uint64_t> seed_override = std::nullopt) {
  ExperimentConfig c;
  c.text = text;
  c.base_dir = base_dir;
  try {
    c.raw = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  const ConfigNode root = c.root();
  if (!c.raw.is_object()) root.fail("config: expected a JSON object");
  if (seed_override) {
    c.seed = *seed_override;
  } else {
    const auto s = root.find("seed");
    if (!s) throw ConfigError("seed: required field missing (seeds are mandatory)");
    const auto v = s->integer();
    if (v < 0) s->fail("expected a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(v);
  }
  if (auto g = root.find("graph")) c.graph_ = parse_graph(*g, base_dir);
  c.space = parse_scenario(root.find("scenario"));
  if (auto u = root.find("utility")) c.utility_ = parse_utility(*u, *c.space);
  if (auto a = root.find("admissible")) c.admissible_ = parse_admissible(*a);
  c.normalization = parse_normalization(root.find("normalization"));
  c.theta = parse_theta(root.find("theta"), base_dir);
  if (auto s = root.find("solve")) {
    c.solve.tol = s->number_or("tol", c.solve.tol);
    c.solve.max_iter = s->count_or("max_iter", c.solve.max_iter);
    if (!(c.solve.tol > 0.0)) s->at("tol").fail("must be positive");
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), seed_override);
}

}  // namespace sparse_nash
