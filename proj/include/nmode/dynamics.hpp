#pragma once

// Conservative dynamics of the N-mode system
//
//   i hbar d'_k = (T d)_k + g_k |d_k|^(2 sigma) d_k,     sum_k |d_k|^2 = 1,
//
// where g_k = eps * C~_k. The complex chart is primary; (q, theta) with
// d_k = sqrt(q_k) exp(i theta_k) and the reduced chart (Q, Theta) are views.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmode/errors.hpp"
#include "nmode/lattice_model.hpp"
#include "nmode/params.hpp"

namespace nmode {

using Complex = std::complex<double>;

struct ModeState {
  Eigen::VectorXcd d;
  double t = 0.0;
};

struct ActionAngleState {
  Eigen::VectorXd q;
  Eigen::VectorXd theta;
};

/// Q_h = q_1 + ... + q_h and Theta_h = theta_h - theta_{h+1}, h = 1..N-1.
struct ReducedState {
  Eigen::VectorXd cumulative_q;
  Eigen::VectorXd theta_diff;
};

/// g_k = eps*C for every site (constant overlap function).
inline Eigen::VectorXd uniform_nonlinearity(const ModelParams& params) {
  return Eigen::VectorXd::Constant(params.n, params.nonlinear_strength());
}

namespace detail {

// The couplings g are explicit here, so decoupled wells (beta = 0) are fine.
inline void check_dynamics_params(const ModelParams& params) {
  validate_lattice(params);
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) throw ParameterError("sigma must be > 0");
  if (!(params.hbar > 0.0) || !std::isfinite(params.hbar)) throw ParameterError("hbar must be > 0");
}

inline void check_sizes(const ModelParams& params, Eigen::Index state_size,
                        const Eigen::VectorXd& g) {
  check_dynamics_params(params);
  if (state_size != params.n || g.size() != params.n)
    throw ParameterError("state and nonlinearity must have N=" + std::to_string(params.n) +
                         " entries");
}

inline double pow_abs(double x, double p) { return x == 0.0 ? 0.0 : std::pow(std::abs(x), p); }

inline Eigen::VectorXcd apply_line_coupling(const ModelParams& params, const Eigen::VectorXcd& d) {
  const Eigen::Index n = d.size();
  Eigen::VectorXcd out = params.lambda_d * d;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    out(k) -= params.beta * d(k + 1);
    out(k + 1) -= params.beta * d(k);
  }
  return out;
}

}  // namespace detail

/// Time derivative (1/(i hbar)) [T d + g |d|^(2 sigma) d].
inline Eigen::VectorXcd rhs_nmode(const ModeState& state, const ModelParams& params,
                                  const Eigen::VectorXd& g) {
  detail::check_sizes(params, state.d.size(), g);
  if (std::abs(state.d.squaredNorm() - 1.0) > 1e-6)
    throw StateError("rhs_nmode: state is not normalized (|d|^2 = " +
                     std::to_string(state.d.squaredNorm()) + ")");
  Eigen::VectorXcd h = detail::apply_line_coupling(params, state.d);
  for (Eigen::Index k = 0; k < h.size(); ++k)
    h(k) += g(k) * detail::pow_abs(std::abs(state.d(k)), 2.0 * params.sigma) * state.d(k);
  return h * Complex(0.0, -1.0 / params.hbar);
}

/// <d, T d> + 1/(sigma+1) sum g_k |d_k|^(2 sigma + 2).
inline double hamiltonian(const ModeState& state, const ModelParams& params,
                          const Eigen::VectorXd& g) {
  detail::check_sizes(params, state.d.size(), g);
  double e = state.d.dot(detail::apply_line_coupling(params, state.d)).real();
  for (Eigen::Index k = 0; k < g.size(); ++k)
    e += g(k) * detail::pow_abs(std::abs(state.d(k)), 2.0 * params.sigma + 2.0) /
         (params.sigma + 1.0);
  return e;
}

/// lambda_D sum q - 2 beta sum cos(theta_{k+1}-theta_k) sqrt(q_{k+1} q_k)
///   + 1/(sigma+1) sum g_k q_k^(sigma+1).
inline double hamiltonian(const ActionAngleState& state, const ModelParams& params,
                          const Eigen::VectorXd& g) {
  detail::check_sizes(params, state.q.size(), g);
  if (state.theta.size() != state.q.size()) throw ParameterError("q and theta sizes differ");
  const Eigen::Index n = state.q.size();
  double e = params.lambda_d * state.q.sum();
  for (Eigen::Index k = 0; k + 1 < n; ++k)
    e -= 2.0 * params.beta * std::cos(state.theta(k + 1) - state.theta(k)) *
         std::sqrt(state.q(k + 1) * state.q(k));
  for (Eigen::Index k = 0; k < n; ++k)
    e += g(k) * std::pow(state.q(k), params.sigma + 1.0) / (params.sigma + 1.0);
  return e;
}

inline ModeState to_mode_state(const ActionAngleState& state, double t = 0.0) {
  if (state.q.size() != state.theta.size()) throw ParameterError("q and theta sizes differ");
  ModeState out{Eigen::VectorXcd(state.q.size()), t};
  for (Eigen::Index k = 0; k < state.q.size(); ++k) {
    if (state.q(k) < 0.0) throw StateError("negative action q_" + std::to_string(k + 1));
    out.d(k) = std::polar(std::sqrt(state.q(k)), state.theta(k));
  }
  return out;
}

/// The angle chart is undefined where a mode is empty; throws below 1e-12.
inline ActionAngleState to_action_angle(const ModeState& state) {
  const Eigen::Index n = state.d.size();
  ActionAngleState out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.q(k) = std::norm(state.d(k));
    if (out.q(k) < 1e-12)
      throw StateError("action-angle chart undefined: q_" + std::to_string(k + 1) + " < 1e-12");
    double th = std::arg(state.d(k));
    if (th < 0.0) th += 2.0 * std::numbers::pi;
    out.theta(k) = th;
  }
  return out;
}

struct HamiltonianGradient {
  Eigen::VectorXd d_q;
  Eigen::VectorXd d_theta;
};

inline HamiltonianGradient hamiltonian_gradient(const ActionAngleState& state,
                                                const ModelParams& params,
                                                const Eigen::VectorXd& g) {
  detail::check_sizes(params, state.q.size(), g);
  const Eigen::Index n = state.q.size();
  HamiltonianGradient grad{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    double hop_cos = 0.0;
    double hop_sin = 0.0;
    for (Eigen::Index j : {k - 1, k + 1}) {
      if (j < 0 || j >= n) continue;
      const double dth = state.theta(j) - state.theta(k);
      hop_cos += std::sqrt(state.q(j) / state.q(k)) * std::cos(dth);
      hop_sin += std::sqrt(state.q(j) * state.q(k)) * std::sin(dth);
    }
    grad.d_q(k) = params.lambda_d - params.beta * hop_cos +
                  g(k) * std::pow(state.q(k), params.sigma);
    grad.d_theta(k) = -2.0 * params.beta * hop_sin;
  }
  return grad;
}

struct ActionAngleRate {
  Eigen::VectorXd q_dot;
  Eigen::VectorXd theta_dot;
};

/// Hamilton's equations: hbar q' = dH/dtheta, hbar theta' = -dH/dq.
inline ActionAngleRate action_angle_rhs(const ActionAngleState& state, const ModelParams& params,
                                        const Eigen::VectorXd& g) {
  const HamiltonianGradient grad = hamiltonian_gradient(state, params, g);
  return ActionAngleRate{grad.d_theta / params.hbar, -grad.d_q / params.hbar};
}

/// Rates of (q, theta) obtained by pushing the complex rhs through the chart.
inline ActionAngleRate action_angle_rate_from_complex(const ModeState& state,
                                                      const ModelParams& params,
                                                      const Eigen::VectorXd& g) {
  const Eigen::VectorXcd dd = rhs_nmode(state, params, g);
  const Eigen::Index n = state.d.size();
  ActionAngleRate out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.q_dot(k) = 2.0 * (std::conj(state.d(k)) * dd(k)).real();
    out.theta_dot(k) = (dd(k) / state.d(k)).imag();
  }
  return out;
}

inline ReducedState reduce(const ActionAngleState& state) {
  const Eigen::Index n = state.q.size();
  if (n < 2 || state.theta.size() != n) throw ParameterError("reduce: need N >= 2 matching q/theta");
  if ((state.q.array() < 0.0).any()) throw StateError("reduce: negative action");
  if (std::abs(state.q.sum() - 1.0) > 1e-10)
    throw StateError("reduce: actions must sum to 1 (sum = " + std::to_string(state.q.sum()) + ")");
  ReducedState out{Eigen::VectorXd(n - 1), Eigen::VectorXd(n - 1)};
  double acc = 0.0;
  for (Eigen::Index h = 0; h + 1 < n; ++h) {
    acc += state.q(h);
    out.cumulative_q(h) = acc;
    out.theta_diff(h) = state.theta(h) - state.theta(h + 1);
  }
  return out;
}

/// Hamiltonian after eliminating the cyclic angle (Q_0 = 0, Q_N = 1).
inline double reduced_hamiltonian(const ReducedState& state, const ModelParams& params,
                                  const Eigen::VectorXd& g) {
  detail::check_dynamics_params(params);
  const Eigen::Index m = state.cumulative_q.size();
  if (m + 1 != params.n || state.theta_diff.size() != m || g.size() != params.n)
    throw ParameterError("reduced state must have N-1 entries");
  auto cum = [&](Eigen::Index h) {  // Q_h for h = 0..N
    if (h == 0) return 0.0;
    if (h == m + 1) return 1.0;
    return state.cumulative_q(h - 1);
  };
  for (Eigen::Index h = 0; h <= m; ++h) {
    if (cum(h + 1) < cum(h) - 1e-14)
      throw StateError("reduced state: cumulative actions must be nondecreasing in [0, 1]");
  }
  auto q = [&](Eigen::Index k) { return std::max(0.0, cum(k) - cum(k - 1)); };  // k = 1..N
  double e = params.lambda_d;
  for (Eigen::Index k = 1; k <= m; ++k)
    e -= 2.0 * params.beta * std::cos(state.theta_diff(k - 1)) * std::sqrt(q(k + 1) * q(k));
  for (Eigen::Index k = 1; k <= m + 1; ++k)
    e += g(k - 1) * std::pow(q(k), params.sigma + 1.0) / (params.sigma + 1.0);
  return e;
}

// ---------------------------------------------------------------------------
// Integrator

struct IntegratorOptions {
  /// Order of the symmetric composition: 2 (Strang), 4 or 6.
  int order = 6;
  /// Keep every `sample_every`-th step; the first and last states are always kept.
  int sample_every = 100;
};

struct ConservationReport {
  double max_norm_drift = 0.0;    // max |N(t) - N(0)| / N(0)
  double max_energy_drift = 0.0;  // max |H(t) - H(0)| / max(1, |H(0)|)
};

struct Trajectory {
  std::vector<ModeState> samples;
  std::vector<double> norm;
  std::vector<double> energy;
  ConservationReport report;
};

inline double default_time_step(const ModelParams& params) {
  if (!(params.beta > 0.0)) throw ParameterError("default time step needs beta > 0");
  return 0.01 * params.hbar / params.beta;
}

/// Weights of the triple-jump composition of Strang steps of given order.
inline std::vector<double> composition_weights(int order) {
  if (order != 2 && order != 4 && order != 6)
    throw ParameterError("integrator order must be 2, 4 or 6");
  std::vector<double> w{1.0};
  for (int p = 2; p < order; p += 2) {
    const double root = std::pow(2.0, 1.0 / (p + 1));
    const double outer = 1.0 / (2.0 - root);
    const double inner = -root / (2.0 - root);
    std::vector<double> next;
    next.reserve(3 * w.size());
    for (double c : {outer, inner, outer})
      for (double x : w) next.push_back(c * x);
    w = std::move(next);
  }
  return w;
}

/// Split-step integration: the nonlinear phase rotation (which leaves |d_k|
/// unchanged) and the linear propagator exp(-i T h / hbar) are both exact
/// and unitary, so the norm is conserved to rounding. Steps are uniform
/// and the run ends exactly at t_end (which may precede the start time).
inline Trajectory integrate(const ModeState& initial, double t_end, double dt,
                            const ModelParams& params, const Eigen::VectorXd& g,
                            const IntegratorOptions& options = {}) {
  detail::check_sizes(params, initial.d.size(), g);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be > 0");
  if (options.sample_every < 1) throw ParameterError("sample_every must be >= 1");
  if (std::abs(initial.d.squaredNorm() - 1.0) > 1e-6)
    throw StateError("integrate: initial state is not normalized");

  const double span = t_end - initial.t;
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(span) / dt - 1e-9)));
  const double h = span / static_cast<double>(steps);

  const ModeBasis basis = closed_form_spectrum(params);
  const std::vector<double> weights = composition_weights(options.order);
  std::vector<Eigen::MatrixXcd> linear;
  linear.reserve(weights.size());
  for (double w : weights) {
    Eigen::VectorXcd phase(params.n);
    for (int j = 0; j < params.n; ++j)
      phase(j) = std::polar(1.0, -basis.mu(j) * w * h / params.hbar);
    linear.push_back(basis.a.transpose().cast<Complex>() * phase.asDiagonal() *
                     basis.a.cast<Complex>());
  }

  auto nonlinear_phase = [&](Eigen::VectorXcd& d, double tau) {
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      const double rate = g(k) * detail::pow_abs(std::abs(d(k)), 2.0 * params.sigma) / params.hbar;
      d(k) *= std::polar(1.0, -rate * tau);
    }
  };

  Trajectory traj;
  ModeState state = initial;
  const double norm0 = state.d.squaredNorm();
  const double energy0 = hamiltonian(state, params, g);
  auto record = [&](const ModeState& s, bool keep) {
    const double nrm = s.d.squaredNorm();
    const double en = hamiltonian(s, params, g);
    traj.report.max_norm_drift = std::max(traj.report.max_norm_drift, std::abs(nrm - norm0) / norm0);
    traj.report.max_energy_drift =
        std::max(traj.report.max_energy_drift, std::abs(en - energy0) / std::max(1.0, std::abs(energy0)));
    if (keep) {
      traj.samples.push_back(s);
      traj.norm.push_back(nrm);
      traj.energy.push_back(en);
    }
  };
  record(state, true);

  for (long step = 1; step <= steps; ++step) {
    for (std::size_t s = 0; s < weights.size(); ++s) {
      const double tau = weights[s] * h;
      nonlinear_phase(state.d, 0.5 * tau);
      state.d = linear[s] * state.d;
      nonlinear_phase(state.d, 0.5 * tau);
    }
    state.t = (step == steps) ? t_end : initial.t + static_cast<double>(step) * h;
    if (!state.d.allFinite()) {
      std::ostringstream msg;
      msg << "integration blew up: non-finite state at t=" << state.t;
      throw NumericError(msg.str());
    }
    record(state, step == steps || step % options.sample_every == 0);
  }
  return traj;
}

}  // namespace nmode
