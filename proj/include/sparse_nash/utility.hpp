#pragma once

// Utility functionals U(a, z, theta) that are strongly concave in the own
// action a, together with their best responses and certified constants.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>

#include "sparse_nash/error.hpp"
#include "sparse_nash/rng.hpp"
#include "sparse_nash/scenario.hpp"

namespace sparse_nash {

struct UtilityConstants {
  /// Strong concavity constant gamma_U > 0.
  double gamma = 1.0;
  /// Lipschitz constant of grad_a U in the aggregate.
  double ell = 0.0;
  /// Lipschitz constant of grad_a U in theta.
  double ell_theta = 0.0;
  /// Lipschitz constant of grad_a U in a, when known.
  std::optional<double> smoothness;

  double rho() const { return ell / gamma; }
};

/// Constants of |U(a,z,th) - U(a',z',th)| <= L_a |a-a'| + L_z |z-z'| on the M-ball.
struct UtilityLipschitz {
  double L_a = 0.0;
  double L_z = 0.0;
};

template <class U>
concept Utility = requires(const U& u, const ActionProcess& a, const ActionProcess& z,
                           const typename U::theta_type& th, const AdmissibleSet& c) {
  typename U::theta_type;
  { u.evaluate(a, z, th) } -> std::convertible_to<double>;
  { u.gradient(a, z, th) } -> std::convertible_to<ActionProcess>;
  { u.best_response(z, th, c) } -> std::convertible_to<ActionProcess>;
  { u.constants() } -> std::convertible_to<UtilityConstants>;
};

/// Refuses any model whose contraction constant is not below one.
inline void require_contraction(const UtilityConstants& k) {
  if (!(k.gamma > 0.0)) throw ConfigError("utility: strong concavity constant gamma must be positive");
  if (!(k.rho() < 1.0)) {
    std::ostringstream msg;
    msg << "contraction violated: rho = ell/gamma = " << k.rho() << " >= 1";
    throw ContractionViolationError(msg.str());
  }
}

struct ConcaveSolverOptions {
  double tol = 1e-12;
  std::size_t max_iter = 100'000;
  /// Fixed step; defaults to 1/smoothness, else backtracking from 1/gamma.
  std::optional<double> step;
};

/// Projected gradient ascent for a generic strongly concave utility. Stops
/// when the fixed-point residual |a - P(a + eta grad U(a))| is at most tol.
template <class U>
ActionProcess best_response_concave(const U& u, const ActionProcess& z, const typename U::theta_type& theta,
                                    const AdmissibleSet& c, const ConcaveSolverOptions& opts = {}) {
  const UtilityConstants k = u.constants();
  const bool backtrack = !opts.step && !k.smoothness;
  double eta = opts.step ? *opts.step : (k.smoothness ? 1.0 / *k.smoothness : 1.0 / k.gamma);
  ActionProcess a = c.project(ActionProcess(z.space_ptr()));
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const ActionProcess g = u.gradient(a, z, theta);
    ActionProcess next = c.project(a + eta * g);
    if (backtrack) {
      const double fa = u.evaluate(a, z, theta);
      for (int halvings = 0; halvings < 60; ++halvings) {
        const ActionProcess step = next - a;
        const double model = fa + inner(g, step) - inner(step, step) / (2.0 * eta);
        if (u.evaluate(next, z, theta) >= model - 1e-15 * std::abs(fa)) break;
        eta *= 0.5;
        next = c.project(a + eta * g);
      }
    }
    if (distance(a, next) <= opts.tol) return next;
    a = std::move(next);
  }
  throw NonConvergenceError("best_response_concave: iteration cap of " + std::to_string(opts.max_iter) +
                            " exceeded");
}

/// U(a,z,th) = -(gamma/2)<a,a> + ell <a,z> + lambda_theta <a,th>.
class QuadraticUtility {
 public:
  using theta_type = ActionProcess;

  QuadraticUtility(double gamma, double ell, double lambda_theta)
      : gamma_(gamma), ell_(ell), lambda_(lambda_theta) {
    if (!(gamma > 0.0)) throw ConfigError("utility.gamma: must be positive");
  }

  double gamma() const { return gamma_; }
  double ell() const { return ell_; }
  double lambda_theta() const { return lambda_; }

  double evaluate(const ActionProcess& a, const ActionProcess& z, const ActionProcess& th) const {
    return -0.5 * gamma_ * inner(a, a) + ell_ * inner(a, z) + lambda_ * inner(a, th);
  }

  ActionProcess gradient(const ActionProcess& a, const ActionProcess& z, const ActionProcess& th) const {
    ActionProcess g = -gamma_ * a;
    g.axpy(ell_, z);
    g.axpy(lambda_, th);
    return g;
  }

  /// The utility is -(gamma/2)|a - m|^2 + const with m = (ell z + lambda th)/gamma,
  /// so the constrained argmax is the metric projection of m.
  ActionProcess best_response(const ActionProcess& z, const ActionProcess& th, const AdmissibleSet& c) const {
    ActionProcess m = (ell_ / gamma_) * z;
    m.axpy(lambda_ / gamma_, th);
    return c.project(std::move(m));
  }

  UtilityConstants constants() const { return {gamma_, std::abs(ell_), std::abs(lambda_), gamma_}; }

  UtilityLipschitz lipschitz(double M, double max_theta_norm) const {
    return {gamma_ * M + std::abs(ell_) * M + std::abs(lambda_) * max_theta_norm, std::abs(ell_) * M};
  }

 private:
  double gamma_;
  double ell_;
  double lambda_;
};

/// Quadratic utility minus eps * E[sum_j log cosh a(t_j)]. Still strongly
/// concave with the quadratic's gamma; its best response has no closed form.
class SmoothPenaltyUtility {
 public:
  using theta_type = ActionProcess;

  SmoothPenaltyUtility(QuadraticUtility base, double eps) : base_(base), eps_(eps) {
    if (eps < 0.0) throw ConfigError("utility.eps: must be nonnegative");
  }

  double evaluate(const ActionProcess& a, const ActionProcess& z, const ActionProcess& th) const {
    return base_.evaluate(a, z, th) - eps_ * penalty(a);
  }

  ActionProcess gradient(const ActionProcess& a, const ActionProcess& z, const ActionProcess& th) const {
    ActionProcess g = base_.gradient(a, z, th);
    auto gv = g.values();
    auto av = a.values();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] -= eps_ * std::tanh(av[i]);
    return g;
  }

  ActionProcess best_response(const ActionProcess& z, const ActionProcess& th, const AdmissibleSet& c) const {
    return best_response_concave(*this, z, th, c);
  }

  UtilityConstants constants() const {
    auto k = base_.constants();
    k.smoothness = base_.gamma() + eps_;
    return k;
  }

  UtilityLipschitz lipschitz(double M, double max_theta_norm, std::size_t steps) const {
    auto l = base_.lipschitz(M, max_theta_norm);
    l.L_a += eps_ * std::sqrt(static_cast<double>(steps));
    return l;
  }

 private:
  double penalty(const ActionProcess& a) const {
    const auto& sp = a.space();
    double total = 0.0;
    for (std::size_t s = 0; s < sp.atoms(); ++s) {
      double row = 0.0;
      for (double x : a.path(s)) row += std::log(std::cosh(x));
      total += sp.probability(s) * row;
    }
    return total;
  }

  QuadraticUtility base_;
  double eps_;
};

/// Maximum relative error between <grad U, d> and central finite differences
/// of U along random directions d, at random adapted (a, z, theta).
template <class U, class ThetaGen>
double gradient_check(const U& u, const SpacePtr& space, std::size_t trials, double h, std::uint64_t seed,
                      ThetaGen&& make_theta) {
  if (!(h > 0.0)) throw ConfigError("gradient_check: step h must be positive");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_stream(seed, {stream_tag::test, static_cast<std::int64_t>(t)});
    const ActionProcess a = random_adapted(space, rng);
    const ActionProcess z = random_adapted(space, rng);
    const auto th = make_theta(rng);
    const ActionProcess d = random_adapted(space, rng);
    const double fd = (u.evaluate(a + h * d, z, th) - u.evaluate(a - h * d, z, th)) / (2.0 * h);
    const double an = inner(u.gradient(a, z, th), d);
    worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-8));
  }
  return worst;
}

template <class U>
  requires std::same_as<typename U::theta_type, ActionProcess>
double gradient_check(const U& u, const SpacePtr& space, std::size_t trials = 100, double h = 1e-5,
                      std::uint64_t seed = 0) {
  return gradient_check(u, space, trials, h, seed, [&](Rng& rng) { return random_adapted(space, rng); });
}

}  // namespace sparse_nash
