#pragma once

// Stationary states of the N-mode system.
//
// Stationary points have phase differences 0 or pi between neighbours, so
// every solution is a real signed amplitude vector a (q_k = a_k^2) solving
//
//   R_k = Omega a_k + a_{k-1} + a_{k+1} - eta |a_k|^(2 sigma) a_k = 0,
//   sum_k a_k^2 = 1,                         (a_0 = a_{N+1} = 0)
//
// in the unknowns (a, Omega). At eta = 0 the solutions are the lattice modes
// with Omega_j = -2 cos(j pi / (N+1)).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nmode/errors.hpp"
#include "nmode/solution_types.hpp"

namespace nmode {

namespace detail {

inline double abs_pow(double x, double p) { return x == 0.0 ? 0.0 : std::pow(std::abs(x), p); }

inline void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be > 0");
}

}  // namespace detail

struct StationaryResidual {
  Eigen::VectorXd r;
  double normalization_defect = 0.0;

  double max_abs() const {
    return std::max(r.size() ? r.cwiseAbs().maxCoeff() : 0.0, std::abs(normalization_defect));
  }
};

inline StationaryResidual stationary_residual(const Eigen::VectorXd& a, double omega, double eta,
                                              double sigma) {
  const Eigen::Index n = a.size();
  StationaryResidual res{Eigen::VectorXd(n), a.squaredNorm() - 1.0};
  for (Eigen::Index k = 0; k < n; ++k) {
    double r = omega * a(k) - eta * detail::abs_pow(a(k), 2.0 * sigma) * a(k);
    if (k > 0) r += a(k - 1);
    if (k + 1 < n) r += a(k + 1);
    res.r(k) = r;
  }
  return res;
}

/// dR/da = Omega I + tridiag(1,0,1) - eta (2 sigma + 1) diag(|a|^(2 sigma)).
inline Eigen::MatrixXd amplitude_jacobian(const Eigen::VectorXd& a, double omega, double eta,
                                          double sigma) {
  const Eigen::Index n = a.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    j(k, k) = omega - eta * (2.0 * sigma + 1.0) * detail::abs_pow(a(k), 2.0 * sigma);
    if (k + 1 < n) j(k, k + 1) = j(k + 1, k) = 1.0;
  }
  return j;
}

/// Jacobian of (R, |a|^2 - 1) with respect to (a, Omega).
inline Eigen::MatrixXd bordered_jacobian(const Eigen::VectorXd& a, double omega, double eta,
                                         double sigma) {
  const Eigen::Index n = a.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n + 1, n + 1);
  j.topLeftCorner(n, n) = amplitude_jacobian(a, omega, eta, sigma);
  j.topRightCorner(n, 1) = a;
  j.bottomLeftCorner(1, n) = 2.0 * a.transpose();
  return j;
}

/// dR/deta = -|a|^(2 sigma) a.
inline Eigen::VectorXd eta_derivative(const Eigen::VectorXd& a, double sigma) {
  Eigen::VectorXd d(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) d(k) = -detail::abs_pow(a(k), 2.0 * sigma) * a(k);
  return d;
}

inline double min_singular_value(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().minCoeff();
}

// ---------------------------------------------------------------------------
// Symmetry maps

/// Gauge fixing: the first nonzero amplitude is made positive.
inline AmplitudeSolution gauge_fixed(AmplitudeSolution s) {
  for (Eigen::Index k = 0; k < s.a.size(); ++k) {
    if (s.a(k) != 0.0) {
      if (s.a(k) < 0.0) s.a = -s.a;
      break;
    }
  }
  return s;
}

inline Eigen::VectorXd mirrored(const Eigen::VectorXd& a) { return a.reverse(); }

/// b_k = (-1)^k a_k, solving the problem at (-eta, -Omega).
inline Eigen::VectorXd staggered(const Eigen::VectorXd& a) {
  Eigen::VectorXd b = a;
  for (Eigen::Index k = 0; k < b.size(); k += 2) b(k) = -b(k);
  return b;
}

inline AmplitudeSolution mirror_solution(const AmplitudeSolution& s) {
  AmplitudeSolution m = s;
  m.a = mirrored(s.a);
  return gauge_fixed(m);
}

inline AmplitudeSolution stagger_solution(const AmplitudeSolution& s) {
  AmplitudeSolution m = s;
  m.a = staggered(s.a);
  m.eta = -s.eta;
  m.omega = -s.omega;
  return gauge_fixed(m);
}

/// +1 for mirror-symmetric, -1 for mirror-antisymmetric, 0 otherwise.
inline int mirror_parity(const Eigen::VectorXd& a, double tol = 1e-8) {
  if ((a - mirrored(a)).cwiseAbs().maxCoeff() <= tol) return 1;
  if ((a + mirrored(a)).cwiseAbs().maxCoeff() <= tol) return -1;
  return 0;
}

// ---------------------------------------------------------------------------
// Newton

struct NewtonOptions {
  double tolerance = 1e-11;
  int max_iterations = 100;
  double singular_threshold = 1e-14;
};

namespace detail {

inline void check_solution_admissible(const AmplitudeSolution& s) {
  const Eigen::Index n = s.a.size();
  if (s.a(0) == 0.0 || s.a(n - 1) == 0.0)
    throw SolverError("converged state has a vanishing end amplitude", s.residual_norm, 0);
  if (n % 2 == 0) {
    for (Eigen::Index k = 0; k < n; ++k)
      if (s.a(k) == 0.0)
        throw SolverError("converged state has an interior zero for even N", s.residual_norm, 0);
  }
}

}  // namespace detail

/// Damped Newton on (R, |a|^2 - 1) = 0 for (a, Omega) at fixed eta and sigma.
/// The seed supplies a, Omega, eta, sigma; the result is gauge fixed.
inline AmplitudeSolution newton_solve(const AmplitudeSolution& seed, const NewtonOptions& opt = {}) {
  detail::check_sigma(seed.sigma);
  const Eigen::Index n = seed.a.size();
  if (n < 2) throw ParameterError("newton_solve: need at least two amplitudes");
  if (!seed.a.allFinite() || !std::isfinite(seed.omega) || !std::isfinite(seed.eta))
    throw ParameterError("newton_solve: seed is not finite");

  const double eta = seed.eta;
  const double sigma = seed.sigma;
  Eigen::VectorXd x(n + 1);
  x << seed.a, seed.omega;

  auto residual = [&](const Eigen::VectorXd& y) {
    const StationaryResidual r = stationary_residual(y.head(n), y(n), eta, sigma);
    Eigen::VectorXd f(n + 1);
    f << r.r, r.normalization_defect;
    return f;
  };

  Eigen::VectorXd f = residual(x);
  double fmax = f.cwiseAbs().maxCoeff();
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const bool converged = fmax <= opt.tolerance;
    const Eigen::MatrixXd jac = bordered_jacobian(x.head(n), x(n), eta, sigma);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const bool singular = sv(n) <= opt.singular_threshold * std::max(1.0, sv(0));

    if (converged) {
      // One polishing step when it helps.
      if (!singular) {
        const Eigen::VectorXd y = x - svd.solve(f);
        const Eigen::VectorXd fy = residual(y);
        if (fy.cwiseAbs().maxCoeff() < fmax) {
          x = y;
          fmax = fy.cwiseAbs().maxCoeff();
        }
      }
      AmplitudeSolution out{x.head(n), x(n), eta, sigma, fmax};
      out = gauge_fixed(out);
      detail::check_solution_admissible(out);
      return out;
    }
    if (it == opt.max_iterations) break;
    if (singular || !f.allFinite()) {
      std::ostringstream msg;
      msg << "Jacobian singular (min singular value " << sv(n)
          << ") near eta=" << eta << "; approach this point by continuation";
      throw NearBifurcationError(msg.str(), fmax, it);
    }

    const Eigen::VectorXd step = svd.solve(f);
    const double f2 = f.squaredNorm();
    double lambda = 1.0;
    Eigen::VectorXd y = x - step;
    Eigen::VectorXd fy = residual(y);
    for (int k = 0; k < 30 && !(fy.allFinite() && fy.squaredNorm() <= (1.0 - 1e-4 * lambda) * f2); ++k) {
      lambda *= 0.5;
      y = x - lambda * step;
      fy = residual(y);
    }
    if (!fy.allFinite()) break;
    x = y;
    f = fy;
    fmax = f.cwiseAbs().maxCoeff();
  }
  std::ostringstream msg;
  msg << "Newton did not converge in " << opt.max_iterations << " iterations at eta=" << eta
      << " (final residual " << fmax << ")";
  throw SolverError(msg.str(), fmax, opt.max_iterations);
}

/// Linear lattice mode j (1-based) as an exact solution at eta = 0.
inline AmplitudeSolution linear_mode(int n, int j, double sigma = 1.0) {
  if (n < 2 || j < 1 || j > n) throw ParameterError("linear_mode: need 1 <= j <= N, N >= 2");
  const double h = std::numbers::pi / (n + 1);
  AmplitudeSolution s;
  s.a.resize(n);
  for (int k = 1; k <= n; ++k) s.a(k - 1) = std::sqrt(2.0 / (n + 1)) * std::sin(k * j * h);
  s.omega = -2.0 * std::cos(j * h);
  s.eta = 0.0;
  s.sigma = sigma;
  s.residual_norm = stationary_residual(s.a, s.omega, 0.0, sigma).max_abs();
  return gauge_fixed(s);
}

/// Energy per unit norm in units of beta, measured from lambda_D:
/// -2 sum a_k a_{k+1} + eta/(sigma+1) sum |a_k|^{2 sigma + 2}.
inline double scaled_energy(const Eigen::VectorXd& a, double eta, double sigma) {
  double e = 0.0;
  for (Eigen::Index k = 0; k + 1 < a.size(); ++k) e -= 2.0 * a(k) * a(k + 1);
  double nl = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) nl += detail::abs_pow(a(k), 2.0 * sigma + 2.0);
  return e + eta / (sigma + 1.0) * nl;
}

// ---------------------------------------------------------------------------
// Four-well symmetric / antisymmetric families
//
// With q = q_1 = q_4 (outer wells) and p = q_2 = q_3 = 1/2 - q, the four-well
// system collapses to two equations that give eta and Omega explicitly:
//
//   eta   = [s_j (sqrt(p/q) - sqrt(q/p)) - s_l] / (q^sigma - p^sigma)
//   Omega = -s_j sqrt(p/q) + eta q^sigma,          s_j = (-1)^j, s_l = (-1)^l
//
// The amplitudes are (sqrt q, s_j sqrt p, s_j s_l sqrt p, s_l sqrt q), so
// l = 2 gives mirror-symmetric and l = 1 mirror-antisymmetric states. The
// family (1,1) is the staggered image of (2,2) and (2,1) is (2,2) under
// q -> 1/2 - q with Omega shifted by +1.

struct FamilyPoint {
  double eta = 0.0;
  double omega = 0.0;
};

namespace detail {

inline void check_family(const SignPattern& f) {
  if ((f.j != 1 && f.j != 2) || (f.l != 1 && f.l != 2))
    throw ParameterError("family indices j, l must be 1 or 2");
}

inline double parity_sign(int idx) { return idx % 2 == 0 ? 1.0 : -1.0; }

}  // namespace detail

inline FamilyPoint symmetric_family_fourwell(double q, double sigma, const SignPattern& family) {
  detail::check_sigma(sigma);
  detail::check_family(family);
  if (!(q > 0.0 && q < 0.5)) throw ParameterError("outer-well action q must lie in (0, 1/2)");
  const double p = 0.5 - q;
  const double denom = std::pow(q, sigma) - std::pow(p, sigma);
  if (std::abs(q - 0.25) < 1e-12 || denom == 0.0)
    throw NumericError("four-well family is singular at q = 1/4 (q^sigma - p^sigma = 0)");
  const double sj = detail::parity_sign(family.j);
  const double sl = detail::parity_sign(family.l);
  FamilyPoint pt;
  pt.eta = (sj * (std::sqrt(p / q) - std::sqrt(q / p)) - sl) / denom;
  pt.omega = -sj * std::sqrt(p / q) + pt.eta * std::pow(q, sigma);
  return pt;
}

inline Eigen::VectorXd family_amplitudes(double q, const SignPattern& family) {
  detail::check_family(family);
  const double p = 0.5 - q;
  const double sj = detail::parity_sign(family.j);
  const double sl = detail::parity_sign(family.l);
  Eigen::VectorXd a(4);
  a << std::sqrt(q), sj * std::sqrt(p), sj * sl * std::sqrt(p), sl * std::sqrt(q);
  return a;
}

inline AmplitudeSolution family_solution(double q, double sigma, const SignPattern& family) {
  const FamilyPoint pt = symmetric_family_fourwell(q, sigma, family);
  AmplitudeSolution s{family_amplitudes(q, family), pt.omega, pt.eta, sigma, 0.0};
  s.residual_norm = stationary_residual(s.a, s.omega, s.eta, sigma).max_abs();
  return s;
}

inline std::string family_label(const SignPattern& f) {
  return "j=" + std::to_string(f.j) + ",l=" + std::to_string(f.l);
}

/// Parametric curve (eta(q), Omega(q)) of a four-well family over a q grid.
inline Branch sweep_symmetric(const std::vector<double>& q_grid, double sigma,
                              const SignPattern& family) {
  detail::check_sigma(sigma);
  detail::check_family(family);
  Branch branch;
  branch.family_label = family_label(family);
  branch.sigma = sigma;
  Eigen::VectorXd prev;
  double arclength = 0.0;
  for (double q : q_grid) {
    if (std::abs(q - 0.25) < 1e-6)
      throw ParameterError("sweep grid must avoid q = 1/4 by at least 1e-6");
    const AmplitudeSolution s = family_solution(q, sigma, family);
    Eigen::VectorXd x(6);
    x << s.a, s.omega, s.eta;
    if (prev.size()) arclength += (x - prev).norm();
    prev = x;
    branch.points.push_back(BranchPoint{s.eta, s.omega, s.a,
                                        min_singular_value(bordered_jacobian(s.a, s.omega, s.eta, sigma)),
                                        arclength});
  }
  return branch;
}

/// Root(s) of eta(q) = target on both subintervals of a family, located by a
/// sign scan on `samples` points followed by bisection.
inline std::vector<double> family_roots(double target_eta, double sigma, const SignPattern& family,
                                        int samples = 4000) {
  std::vector<double> roots;
  for (auto [lo, hi] : {std::pair{1e-7, 0.25 - 1e-7}, std::pair{0.25 + 1e-7, 0.5 - 1e-7}}) {
    auto f = [&](double q) { return symmetric_family_fourwell(q, sigma, family).eta - target_eta; };
    double q0 = lo;
    double f0 = f(q0);
    for (int i = 1; i <= samples; ++i) {
      const double q1 = lo + (hi - lo) * i / samples;
      const double f1 = f(q1);
      if (f0 == 0.0) {
        roots.push_back(q0);
      } else if (f0 * f1 < 0.0) {
        double a = q0, b = q1, fa = f0;
        for (int k = 0; k < 200 && b - a > 1e-15; ++k) {
          const double mid = 0.5 * (a + b);
          const double fm = f(mid);
          if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
          } else {
            b = mid;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
      q0 = q1;
      f0 = f1;
    }
  }
  return roots;
}

}  // namespace nmode
