#pragma once

// Heterogeneity profiles theta = (theta_v). Every random generator draws the
// process of vertex v from a stream keyed by (seed, v), so two games that
// share a vertex see the same theta_v there.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/rng.hpp"
#include "sparse_nash/scenario.hpp"

namespace sparse_nash {

using HeterogeneityProfile = std::vector<ActionProcess>;

struct ThetaSpec {
  enum class Generator { constant, iid_gaussian, iid_rademacher, from_file };

  Generator generator = Generator::constant;
  double value = 0.0;
  double mu = 0.0;
  double sigma = 1.0;
  /// Magnitude of Rademacher signs.
  double amplitude = 1.0;
  /// Weight c of a shared component: theta_v = sqrt(1-c) idio_v + sqrt(c) common.
  double common_weight = 0.0;
  /// Rademacher only: enumerate every sign pattern as a scenario atom.
  bool exhaustive = false;
  /// from_file: per-vertex values, either one scalar or S*(N+1) row-major entries.
  std::map<VertexId, std::vector<double>> values;

  static ThetaSpec constant(double c) {
    ThetaSpec s;
    s.value = c;
    return s;
  }
  static ThetaSpec gaussian(double mu, double sigma) {
    ThetaSpec s;
    s.generator = Generator::iid_gaussian;
    s.mu = mu;
    s.sigma = sigma;
    return s;
  }
  static ThetaSpec rademacher(double amplitude = 1.0, bool exhaustive = false) {
    ThetaSpec s;
    s.generator = Generator::iid_rademacher;
    s.amplitude = amplitude;
    s.exhaustive = exhaustive;
    return s;
  }
  static ThetaSpec explicit_values(std::map<VertexId, std::vector<double>> v) {
    ThetaSpec s;
    s.generator = Generator::from_file;
    s.values = std::move(v);
    return s;
  }

  static Generator parse_generator(const std::string& name) {
    if (name == "constant") return Generator::constant;
    if (name == "iid_gaussian") return Generator::iid_gaussian;
    if (name == "iid_rademacher") return Generator::iid_rademacher;
    if (name == "from_file") return Generator::from_file;
    throw ConfigError("generator: unknown generator \"" + name + "\"");
  }

  /// Vertex processes are mutually independent under this spec.
  bool independent() const { return generator == Generator::constant || common_weight == 0.0; }
};

/// Reads "vertex v1 v2 ..." lines; '#' starts a comment.
inline std::map<VertexId, std::vector<double>> load_theta_values(std::istream& in) {
  std::map<VertexId, std::vector<double>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    VertexId v = 0;
    if (!(ls >> v)) continue;
    std::vector<double> xs;
    for (double x; ls >> x;) xs.push_back(x);
    if (xs.empty()) throw ConfigError("theta file: vertex " + std::to_string(v) + " has no values");
    out[v] = std::move(xs);
  }
  return out;
}

class ThetaSampler {
 public:
  ThetaSampler(SpacePtr space, ThetaSpec spec, std::uint64_t seed, std::vector<VertexId> exhaustive_vertices = {})
      : space_(std::move(space)), spec_(std::move(spec)), seed_(seed) {
    if (spec_.common_weight < 0.0 || spec_.common_weight > 1.0)
      throw ConfigError("theta.common_weight: must lie in [0, 1]");
    if (spec_.exhaustive) {
      if (spec_.generator != ThetaSpec::Generator::iid_rademacher)
        throw ConfigError("theta.exhaustive: only supported for iid_rademacher");
      if (exhaustive_vertices.size() >= 63 || space_->atoms() != (std::size_t{1} << exhaustive_vertices.size()))
        throw ConfigError("theta.exhaustive: scenario space must have 2^|W| atoms");
      for (std::size_t i = 0; i < exhaustive_vertices.size(); ++i) bit_of_.emplace(exhaustive_vertices[i], i);
    }
    if (spec_.generator != ThetaSpec::Generator::constant && spec_.common_weight > 0.0) {
      Rng rng = make_stream(seed_, {stream_tag::common});
      common_ = draw_idiosyncratic(rng);
    }
  }

  const SpacePtr& space() const { return space_; }
  const ThetaSpec& spec() const { return spec_; }

  /// theta_v, drawn from the stream keyed by (seed, v).
  ActionProcess operator()(VertexId v) const {
    switch (spec_.generator) {
      case ThetaSpec::Generator::constant:
        return ActionProcess::constant(space_, spec_.value);
      case ThetaSpec::Generator::from_file:
        return from_values(v);
      default:
        break;
    }
    if (spec_.exhaustive) return exhaustive_signs(v);
    return keyed({stream_tag::theta, v});
  }

  /// A fresh draw from an arbitrary key tuple (used for auxiliary fields that
  /// must be independent of every vertex stream).
  ActionProcess keyed(std::initializer_list<std::int64_t> keys) const {
    if (spec_.generator == ThetaSpec::Generator::constant) return ActionProcess::constant(space_, spec_.value);
    if (spec_.generator == ThetaSpec::Generator::from_file || spec_.exhaustive)
      throw ConfigError("theta: keyed draws need a random iid generator");
    Rng rng = make_stream(seed_, keys);
    ActionProcess idio = draw_idiosyncratic(rng);
    if (common_) {
      idio *= std::sqrt(1.0 - spec_.common_weight);
      idio.axpy(std::sqrt(spec_.common_weight), *common_);
    }
    return idio;
  }

 private:
  ActionProcess draw_idiosyncratic(Rng& rng) const {
    ActionProcess a(space_);
    std::normal_distribution<double> normal(spec_.mu, spec_.sigma);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < space_->steps(); ++j) {
      std::vector<double> draw(space_->block_count(j));
      for (auto& x : draw)
        x = spec_.generator == ThetaSpec::Generator::iid_gaussian ? normal(rng)
                                                                   : (coin(rng) ? spec_.amplitude : -spec_.amplitude);
      for (std::size_t s = 0; s < space_->atoms(); ++s) a(s, j) = draw[space_->block(j, s)];
    }
    return a;
  }

  ActionProcess exhaustive_signs(VertexId v) const {
    auto it = bit_of_.find(v);
    if (it == bit_of_.end()) return ActionProcess(space_);
    ActionProcess a(space_);
    for (std::size_t s = 0; s < space_->atoms(); ++s) {
      const double sign = ((s >> it->second) & 1U) ? spec_.amplitude : -spec_.amplitude;
      for (std::size_t j = 0; j < space_->steps(); ++j) a(s, j) = sign;
    }
    return a;
  }

  ActionProcess from_values(VertexId v) const {
    auto it = spec_.values.find(v);
    if (it == spec_.values.end()) return ActionProcess(space_);
    const auto& xs = it->second;
    if (xs.size() == 1) return ActionProcess::constant(space_, xs.front());
    ActionProcess a(space_, xs);
    if (!check_adapted(a, 1e-12))
      throw ConfigError("theta file: process for vertex " + std::to_string(v) + " is not adapted");
    return a;
  }

  SpacePtr space_;
  ThetaSpec spec_;
  std::uint64_t seed_;
  std::map<VertexId, std::size_t> bit_of_;
  std::optional<ActionProcess> common_;
};

/// theta for the given vertices, in the given order.
inline HeterogeneityProfile sample_theta(const SpacePtr& space, std::span<const VertexId> vertices,
                                         const ThetaSpec& spec, std::uint64_t seed) {
  std::vector<VertexId> exhaustive;
  if (spec.exhaustive) exhaustive.assign(vertices.begin(), vertices.end());
  ThetaSampler sampler(space, spec, seed, exhaustive);
  HeterogeneityProfile out;
  out.reserve(vertices.size());
  for (auto v : vertices) out.push_back(sampler(v));
  return out;
}

inline HeterogeneityProfile sample_theta(const SpacePtr& space, const FiniteGraph& g, const ThetaSpec& spec,
                                         std::uint64_t seed) {
  std::vector<VertexId> vs(g.size());
  for (std::size_t i = 0; i < vs.size(); ++i) vs[i] = static_cast<VertexId>(i);
  return sample_theta(space, vs, spec, seed);
}

}  // namespace sparse_nash
