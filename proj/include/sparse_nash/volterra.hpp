#pragma once

// Discrete Volterra state dynamics
//   X(t_j) = sum_{i<j} K(j,i) X(t_i) + sum_{i<j} L(j,i) a(t_i) + eta(t_j)
// and the reduction of linear-quadratic state games to state-free utilities.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "sparse_nash/engine.hpp"
#include "sparse_nash/error.hpp"
#include "sparse_nash/graph.hpp"
#include "sparse_nash/scenario.hpp"
#include "sparse_nash/utility.hpp"

namespace sparse_nash {

struct VolterraKernel {
  Eigen::MatrixXd K;
  Eigen::MatrixXd L;

  VolterraKernel(Eigen::MatrixXd k, Eigen::MatrixXd l) : K(std::move(k)), L(std::move(l)) {
    check(K, "K");
    check(L, "L");
    if (K.rows() != L.rows()) throw ConfigError("kernel: K and L must have the same size");
  }

  std::size_t steps() const { return static_cast<std::size_t>(K.rows()); }

 private:
  static void check(const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != m.cols() || m.rows() == 0) throw ConfigError(std::string("kernel.") + name + ": must be square");
    if (!m.allFinite()) throw ConfigError(std::string("kernel.") + name + ": non-finite entry");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = i; j < m.cols(); ++j)
        if (m(i, j) != 0.0)
          throw ConfigError(std::string("kernel.") + name + ": must be strictly lower triangular (entry " +
                            std::to_string(i) + "," + std::to_string(j) + ")");
  }
};

/// Resolvent R of the kernel -K: R = -K + K*R, so that (I - R) = (I - K)^{-1}.
/// Forward substitution, row by row.
inline Eigen::MatrixXd volterra_resolvent(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 1; t < n; ++t)
    for (Eigen::Index s = 0; s < t; ++s) {
      double acc = -K(t, s);
      for (Eigen::Index u = s + 1; u < t; ++u) acc += K(t, u) * R(u, s);
      R(t, s) = acc;
    }
  return R;
}

namespace detail {

inline Eigen::VectorXd path_vector(const ActionProcess& a, std::size_t s) {
  auto p = a.path(s);
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

inline void set_path(ActionProcess& a, std::size_t s, const Eigen::VectorXd& x) {
  for (std::size_t j = 0; j < a.steps(); ++j) a(s, j) = x(static_cast<Eigen::Index>(j));
}

/// Applies the same matrix to the path of every atom.
inline ActionProcess apply(const Eigen::MatrixXd& m, const ActionProcess& a) {
  if (static_cast<std::size_t>(m.cols()) != a.steps()) throw SpaceMismatchError("kernel size does not match the time grid");
  ActionProcess out(a.space_ptr());
  for (std::size_t s = 0; s < a.atoms(); ++s) set_path(out, s, m * path_vector(a, s));
  return out;
}

}  // namespace detail

/// Explicit representation X = (L - R*L) a - R eta + eta.
inline ActionProcess volterra_state(const VolterraKernel& k, const Eigen::MatrixXd& R, const ActionProcess& a,
                                    const ActionProcess& eta) {
  a.check(eta);
  const Eigen::MatrixXd LRL = k.L - R * k.L;
  ActionProcess x = detail::apply(LRL, a);
  x -= detail::apply(R, eta);
  x += eta;
  return x;
}

inline ActionProcess volterra_state(const VolterraKernel& k, const ActionProcess& a, const ActionProcess& eta) {
  return volterra_state(k, volterra_resolvent(k.K), a, eta);
}

/// Solves the implicit state equation directly by forward substitution.
inline ActionProcess volterra_state_direct(const VolterraKernel& k, const ActionProcess& a, const ActionProcess& eta) {
  a.check(eta);
  if (k.steps() != a.steps()) throw SpaceMismatchError("kernel size does not match the time grid");
  const std::size_t T = a.steps();
  ActionProcess x(a.space_ptr());
  for (std::size_t s = 0; s < a.atoms(); ++s)
    for (std::size_t j = 0; j < T; ++j) {
      double acc = eta(s, j);
      for (std::size_t i = 0; i < j; ++i) {
        const auto J = static_cast<Eigen::Index>(j), I = static_cast<Eigen::Index>(i);
        acc += k.K(J, I) * x(s, i) + k.L(J, I) * a(s, i);
      }
      x(s, j) = acc;
    }
  return x;
}

/// Running payoff -(q/2)x^2 - (r/2)a^2 + c a z summed over the grid, plus the
/// terminal payoff -(q_T/2) x(t_N)^2.
struct LqCoefficients {
  double q = 1.0;
  double r = 1.0;
  double c = 0.5;
  double q_T = 0.0;
};

/// J_v evaluated from already computed own state X, aggregate state Z and action a.
inline double lq_payoff(const LqCoefficients& co, const ActionProcess& x, const ActionProcess& z,
                        const ActionProcess& a) {
  x.check(z);
  x.check(a);
  const auto& sp = x.space();
  const std::size_t N = sp.steps() - 1;
  double total = 0.0;
  for (std::size_t s = 0; s < sp.atoms(); ++s) {
    double row = 0.0;
    for (std::size_t j = 0; j <= N; ++j)
      row += -0.5 * co.q * x(s, j) * x(s, j) - 0.5 * co.r * a(s, j) * a(s, j) + co.c * a(s, j) * z(s, j);
    row += -0.5 * co.q_T * x(s, N) * x(s, N);
    total += sp.probability(s) * row;
  }
  return total;
}

/// Resolved noise seen by one player: X = Phi a + state_noise and
/// Z = Phi z(a) + aggregate_noise, with Phi = (I - R) L.
struct LqNoise {
  ActionProcess state_noise;
  ActionProcess aggregate_noise;
};

/// The state-free utility obtained by substituting the explicit state
/// representation into J_v. Its gradient involves Phi^T, which is anti-causal,
/// so the model is only admitted on fully revealed scenario spaces.
class LqStateUtility {
 public:
  using theta_type = LqNoise;

  LqStateUtility(const VolterraKernel& kernel, LqCoefficients co) : co_(co) {
    if (!(co.r > 0.0)) throw ConfigError("lq.r: action cost must be positive");
    if (co.q < 0.0 || co.q_T < 0.0) throw ConfigError("lq: state costs must be nonnegative");
    const Eigen::Index T = kernel.K.rows();
    R_ = volterra_resolvent(kernel.K);
    resolve_ = Eigen::MatrixXd::Identity(T, T) - R_;
    phi_ = resolve_ * kernel.L;
    const Eigen::RowVectorXd last = phi_.row(T - 1);
    Q_ = co.q * phi_.transpose() * phi_ + co.r * Eigen::MatrixXd::Identity(T, T) + co.q_T * last.transpose() * last;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q_);
    gamma_ = eig.eigenvalues().minCoeff();
    smooth_ = eig.eigenvalues().maxCoeff();
    const double phi_norm = phi_.operatorNorm();
    ell_ = std::abs(co.c) * phi_norm;
    ell_theta_ = std::abs(co.c) + co.q * phi_norm + co.q_T * last.norm();
  }

  const Eigen::MatrixXd& resolvent() const { return R_; }
  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::MatrixXd& hessian() const { return Q_; }
  const LqCoefficients& coefficients() const { return co_; }

  /// (I - R) v, the part of the state driven by the noise path v.
  ActionProcess resolve_noise(const ActionProcess& eta) const { return detail::apply(resolve_, eta); }

  double evaluate(const ActionProcess& a, const ActionProcess& z, const LqNoise& th) const {
    const ActionProcess x = detail::apply(phi_, a) + th.state_noise;
    const ActionProcess zz = detail::apply(phi_, z) + th.aggregate_noise;
    return lq_payoff(co_, x, zz, a);
  }

  ActionProcess gradient(const ActionProcess& a, const ActionProcess& z, const LqNoise& th) const {
    const Eigen::Index T = Q_.rows();
    ActionProcess g(a.space_ptr());
    for (std::size_t s = 0; s < a.atoms(); ++s) {
      const Eigen::VectorXd xi = detail::path_vector(th.state_noise, s);
      Eigen::VectorXd grad = -Q_ * detail::path_vector(a, s) + co_.c * phi_ * detail::path_vector(z, s) +
                             co_.c * detail::path_vector(th.aggregate_noise, s) - co_.q * phi_.transpose() * xi;
      grad -= co_.q_T * xi(T - 1) * phi_.row(T - 1).transpose();
      detail::set_path(g, s, grad);
    }
    return g;
  }

  ActionProcess best_response(const ActionProcess& z, const LqNoise& th, const AdmissibleSet& c) const {
    if (!z.space().fully_revealed())
      throw ConfigError("lq_state: the reduced model needs a fully revealed filtration");
    return best_response_concave(*this, z, th, c, {1e-13, 1'000'000, std::nullopt});
  }

  UtilityConstants constants() const { return {gamma_, ell_, ell_theta_, smooth_}; }

 private:
  LqCoefficients co_;
  Eigen::MatrixXd R_;
  Eigen::MatrixXd resolve_;
  Eigen::MatrixXd phi_;
  Eigen::MatrixXd Q_;
  double gamma_ = 0.0;
  double smooth_ = 0.0;
  double ell_ = 0.0;
  double ell_theta_ = 0.0;
};

/// Builds the state-free game: theta_v = ((I-R) eta_v, (I-R) z_v(eta)).
inline GameSpec<LqStateUtility> reduce_lq_state_game(const VolterraKernel& kernel, const LqCoefficients& co,
                                                     FiniteGraph graph, const std::vector<ActionProcess>& eta,
                                                     AdmissibleSet admissible, Normalization norm = {}) {
  if (eta.size() != graph.size()) throw IncompleteProfileError("lq: one noise process per vertex required");
  const SpacePtr space = eta.front().space_ptr();
  if (kernel.steps() != space->steps()) throw ConfigError("lq: kernel size does not match the time grid");
  if (!space->fully_revealed())
    throw ConfigError("lq: the reduced model needs a fully revealed filtration (or a single atom)");
  LqStateUtility u(kernel, co);
  if (!(u.constants().gamma > 0.0)) throw ConfigError("lq: reduced utility is not strongly concave");
  require_contraction(u.constants());
  std::vector<LqNoise> theta;
  theta.reserve(graph.size());
  for (std::size_t v = 0; v < graph.size(); ++v) {
    const auto id = static_cast<VertexId>(v);
    theta.push_back({u.resolve_noise(eta[v]), u.resolve_noise(local_aggregate(graph, eta, id, norm))});
  }
  return GameSpec<LqStateUtility>(std::move(graph), space, std::move(theta), std::move(u), admissible, norm);
}

}  // namespace sparse_nash
