#pragma once

// Discrete-time action space: finite scenario atoms, a refining partition
// filtration over a time grid, and adapted real processes on top of it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparse_nash/error.hpp"
#include "sparse_nash/rng.hpp"

namespace sparse_nash {

enum class FiltrationKind {
  trivial,          // no information is ever revealed
  reveal_at_start,  // every atom is known from t_0 on
};

class ScenarioSpace;
using SpacePtr = std::shared_ptr<const ScenarioSpace>;

class ScenarioSpace {
 public:
  /// `filtration[j][s]` is the block label of atom `s` at time index `j`.
  ScenarioSpace(std::vector<double> probabilities, std::vector<double> time_grid,
                std::vector<std::vector<std::size_t>> filtration)
      : probabilities_(std::move(probabilities)),
        time_grid_(std::move(time_grid)),
        labels_(std::move(filtration)) {
    validate();
  }

  static SpacePtr make(std::vector<double> probabilities, std::vector<double> time_grid,
                       std::vector<std::vector<std::size_t>> filtration) {
    return std::make_shared<const ScenarioSpace>(std::move(probabilities), std::move(time_grid),
                                                 std::move(filtration));
  }

  /// One atom; N = time_grid.size() - 1. The default is the static game.
  static SpacePtr deterministic(std::vector<double> time_grid = {0.0}) {
    return uniform(1, std::move(time_grid), FiltrationKind::trivial);
  }

  static SpacePtr uniform(std::size_t atoms, std::vector<double> time_grid, FiltrationKind kind) {
    if (atoms == 0) throw ConfigError("scenario.atoms: must be positive");
    std::vector<double> p(atoms, 1.0 / static_cast<double>(atoms));
    std::vector<std::vector<std::size_t>> f(time_grid.size(), std::vector<std::size_t>(atoms, 0));
    if (kind == FiltrationKind::reveal_at_start)
      for (auto& row : f) std::iota(row.begin(), row.end(), std::size_t{0});
    return make(std::move(p), std::move(time_grid), std::move(f));
  }

  /// 2^bits equally likely atoms, fully revealed at t_0. Atom s encodes the
  /// sign pattern whose i-th sign is + iff bit i of s is set.
  static SpacePtr exhaustive_signs(std::size_t bits, std::vector<double> time_grid = {0.0},
                                   std::size_t max_bits = 20) {
    if (bits > max_bits)
      throw CapacityError("exhaustive sign enumeration over " + std::to_string(bits) +
                          " vertices exceeds 2^" + std::to_string(max_bits) + " atoms");
    return uniform(std::size_t{1} << bits, std::move(time_grid), FiltrationKind::reveal_at_start);
  }

  /// Builds the filtration from explicit block lists, one partition per time.
  static SpacePtr from_blocks(std::vector<double> probabilities, std::vector<double> time_grid,
                              const std::vector<std::vector<std::vector<std::size_t>>>& blocks) {
    const std::size_t S = probabilities.size();
    std::vector<std::vector<std::size_t>> f;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      std::vector<std::size_t> row(S, S);
      for (std::size_t b = 0; b < blocks[j].size(); ++b)
        for (auto s : blocks[j][b]) {
          if (s >= S || row[s] != S)
            throw ConfigError("scenario.filtration[" + std::to_string(j) +
                              "]: not a partition of the atoms");
          row[s] = b;
        }
      if (std::find(row.begin(), row.end(), S) != row.end())
        throw ConfigError("scenario.filtration[" + std::to_string(j) + "]: atom not covered");
      f.push_back(std::move(row));
    }
    return make(std::move(probabilities), std::move(time_grid), std::move(f));
  }

  std::size_t atoms() const { return probabilities_.size(); }
  /// Number of grid points N + 1.
  std::size_t steps() const { return time_grid_.size(); }
  double probability(std::size_t s) const { return probabilities_[s]; }
  std::span<const double> probabilities() const { return probabilities_; }
  const std::vector<double>& time_grid() const { return time_grid_; }
  std::size_t block(std::size_t j, std::size_t s) const { return labels_[j][s]; }
  std::size_t block_count(std::size_t j) const { return block_counts_[j]; }

  /// True when every partition is discrete, so every matrix is adapted.
  bool fully_revealed() const {
    for (std::size_t j = 0; j < steps(); ++j)
      if (block_counts_[j] != atoms()) return false;
    return true;
  }

  bool operator==(const ScenarioSpace& o) const {
    return probabilities_ == o.probabilities_ && time_grid_ == o.time_grid_ && labels_ == o.labels_;
  }

 private:
  void validate() {
    const std::size_t S = probabilities_.size();
    if (S == 0) throw ConfigError("scenario: no atoms");
    if (time_grid_.empty()) throw ConfigError("scenario.time_grid: empty");
    for (std::size_t j = 1; j < time_grid_.size(); ++j)
      if (!(time_grid_[j] > time_grid_[j - 1]))
        throw ConfigError("scenario.time_grid: must be strictly increasing");
    double total = 0.0;
    for (double p : probabilities_) {
      if (!(p > 0.0)) throw ConfigError("scenario: atom probabilities must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("scenario: probabilities must sum to 1");
    if (labels_.size() != time_grid_.size())
      throw ConfigError("scenario.filtration: one partition per time point required");
    // Canonicalize labels to 0..B-1 in order of first appearance.
    block_counts_.clear();
    for (auto& row : labels_) {
      if (row.size() != S) throw ConfigError("scenario.filtration: partition size mismatch");
      std::map<std::size_t, std::size_t> relabel;
      for (auto& l : row) {
        auto [it, inserted] = relabel.try_emplace(l, relabel.size());
        l = it->second;
      }
      block_counts_.push_back(relabel.size());
    }
    for (std::size_t j = 0; j + 1 < labels_.size(); ++j) {
      std::vector<std::size_t> coarse(block_counts_[j + 1], S);
      for (std::size_t s = 0; s < S; ++s) {
        auto& c = coarse[labels_[j + 1][s]];
        if (c == S) c = labels_[j][s];
        if (c != labels_[j][s])
          throw ConfigError("scenario.filtration: partition " + std::to_string(j + 1) +
                            " does not refine partition " + std::to_string(j));
      }
    }
  }

  std::vector<double> probabilities_;
  std::vector<double> time_grid_;
  std::vector<std::vector<std::size_t>> labels_;
  std::vector<std::size_t> block_counts_;
};

inline bool same_space(const ScenarioSpace& a, const ScenarioSpace& b) { return &a == &b || a == b; }

/// A real S x (N+1) matrix a[s][j] on a scenario space.
class ActionProcess {
 public:
  ActionProcess() = default;
  explicit ActionProcess(SpacePtr space)
      : space_(std::move(space)), data_(space_->atoms() * space_->steps(), 0.0) {}
  ActionProcess(SpacePtr space, std::vector<double> values) : space_(std::move(space)), data_(std::move(values)) {
    if (data_.size() != space_->atoms() * space_->steps())
      throw Error("ActionProcess: value count does not match the scenario space");
  }

  static ActionProcess constant(const SpacePtr& space, double c) {
    return ActionProcess(space, std::vector<double>(space->atoms() * space->steps(), c));
  }

  /// The same path in every scenario.
  static ActionProcess deterministic(const SpacePtr& space, std::span<const double> path) {
    if (path.size() != space->steps()) throw Error("ActionProcess: path length mismatch");
    ActionProcess a(space);
    for (std::size_t s = 0; s < space->atoms(); ++s)
      std::copy(path.begin(), path.end(), a.data_.begin() + static_cast<std::ptrdiff_t>(s * space->steps()));
    return a;
  }

  bool empty() const { return !space_; }
  const ScenarioSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  std::size_t atoms() const { return space_->atoms(); }
  std::size_t steps() const { return space_->steps(); }

  double operator()(std::size_t s, std::size_t j) const { return data_[s * steps() + j]; }
  double& operator()(std::size_t s, std::size_t j) { return data_[s * steps() + j]; }

  std::span<const double> path(std::size_t s) const { return {data_.data() + s * steps(), steps()}; }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  ActionProcess& operator+=(const ActionProcess& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ActionProcess& operator-=(const ActionProcess& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ActionProcess& operator*=(double c) {
    for (auto& x : data_) x *= c;
    return *this;
  }
  /// this += c * o
  ActionProcess& axpy(double c, const ActionProcess& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += c * o.data_[i];
    return *this;
  }
  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  friend ActionProcess operator+(ActionProcess a, const ActionProcess& b) { return a += b; }
  friend ActionProcess operator-(ActionProcess a, const ActionProcess& b) { return a -= b; }
  friend ActionProcess operator*(double c, ActionProcess a) { return a *= c; }
  friend ActionProcess operator*(ActionProcess a, double c) { return a *= c; }

  void check(const ActionProcess& o) const {
    if (!space_ || !o.space_ || !same_space(*space_, *o.space_))
      throw SpaceMismatchError("processes live on different scenario spaces");
  }

 private:
  SpacePtr space_;
  std::vector<double> data_;
};

/// <a, b> = E[sum_j a(t_j) b(t_j)].
inline double inner(const ActionProcess& a, const ActionProcess& b) {
  a.check(b);
  const auto& sp = a.space();
  const std::size_t T = sp.steps();
  double total = 0.0;
  for (std::size_t s = 0; s < sp.atoms(); ++s) {
    double row = 0.0;
    for (std::size_t j = 0; j < T; ++j) row += a(s, j) * b(s, j);
    total += sp.probability(s) * row;
  }
  return total;
}

inline double norm(const ActionProcess& a) { return std::sqrt(inner(a, a)); }

inline double distance(const ActionProcess& a, const ActionProcess& b) {
  a.check(b);
  const auto& sp = a.space();
  double total = 0.0;
  for (std::size_t s = 0; s < sp.atoms(); ++s) {
    double row = 0.0;
    for (std::size_t j = 0; j < sp.steps(); ++j) {
      const double d = a(s, j) - b(s, j);
      row += d * d;
    }
    total += sp.probability(s) * row;
  }
  return std::sqrt(total);
}

/// E[(1/(N+1)) sum_j a(t_j)].
inline double mean_value(const ActionProcess& a) {
  const auto& sp = a.space();
  double total = 0.0;
  for (std::size_t s = 0; s < sp.atoms(); ++s) {
    double row = 0.0;
    for (std::size_t j = 0; j < sp.steps(); ++j) row += a(s, j);
    total += sp.probability(s) * row;
  }
  return total / static_cast<double>(sp.steps());
}

/// True iff a[.][j] is constant on every block of partition j, up to `tol`.
inline bool check_adapted(const ActionProcess& a, double tol = 0.0) {
  const auto& sp = a.space();
  for (std::size_t j = 0; j < sp.steps(); ++j) {
    std::vector<double> first(sp.block_count(j));
    std::vector<char> seen(sp.block_count(j), 0);
    for (std::size_t s = 0; s < sp.atoms(); ++s) {
      const auto b = sp.block(j, s);
      if (!seen[b]) {
        seen[b] = 1;
        first[b] = a(s, j);
      } else if (std::abs(a(s, j) - first[b]) > tol) {
        return false;
      }
    }
  }
  return true;
}

/// Draws an adapted process with iid N(0, scale^2) values per (time, block).
inline ActionProcess random_adapted(const SpacePtr& space, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  ActionProcess a(space);
  for (std::size_t j = 0; j < space->steps(); ++j) {
    std::vector<double> draw(space->block_count(j));
    for (auto& x : draw) x = normal(rng);
    for (std::size_t s = 0; s < space->atoms(); ++s) a(s, j) = draw[space->block(j, s)];
  }
  return a;
}

/// Nonempty closed convex set of admissible actions shared by all players.
class AdmissibleSet {
 public:
  enum class Kind { norm_ball, box };

  static AdmissibleSet norm_ball(double radius) {
    if (!(radius > 0.0)) throw ConfigError("admissible.radius: must be positive");
    AdmissibleSet c;
    c.kind_ = Kind::norm_ball;
    c.radius_ = radius;
    return c;
  }
  static AdmissibleSet box(double lo, double hi) {
    if (!(lo <= hi)) throw ConfigError("admissible: box requires lo <= hi");
    AdmissibleSet c;
    c.kind_ = Kind::box;
    c.lo_ = lo;
    c.hi_ = hi;
    return c;
  }

  Kind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Radius M of an A-ball containing the set. For a box this is the norm of
  /// its farthest corner, sqrt((N+1) max(lo^2, hi^2)).
  double radius(const ScenarioSpace& space) const {
    if (kind_ == Kind::norm_ball) return radius_;
    const double m = std::max(lo_ * lo_, hi_ * hi_);
    return std::sqrt(static_cast<double>(space.steps()) * m);
  }

  ActionProcess project(ActionProcess x) const {
    if (kind_ == Kind::norm_ball) {
      const double n = norm(x);
      if (n > radius_) x *= radius_ / n;
      return x;
    }
    for (auto& v : x.values()) v = std::clamp(v, lo_, hi_);
    return x;
  }

  bool contains(const ActionProcess& x, double tol = 1e-12) const {
    if (kind_ == Kind::norm_ball) return norm(x) <= radius_ + tol;
    for (double v : x.values())
      if (v < lo_ - tol || v > hi_ + tol) return false;
    return true;
  }

 private:
  Kind kind_ = Kind::norm_ball;
  double radius_ = 1.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

using ActionProfile = std::vector<ActionProcess>;

/// Sup norm over vertices of per-vertex A-norm differences.
inline double profile_distance(const ActionProfile& a, const ActionProfile& b) {
  if (a.size() != b.size()) throw IncompleteProfileError("profiles have different vertex counts");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, distance(a[i], b[i]));
  return m;
}

inline double profile_norm(const ActionProfile& a) {
  double m = 0.0;
  for (const auto& x : a) m = std::max(m, norm(x));
  return m;
}

}  // namespace sparse_nash
