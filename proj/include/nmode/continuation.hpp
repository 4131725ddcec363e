#pragma once

// Branch tracing in eta, fold and symmetry-breaking detection, and the
// large-|eta| localized states.
//
// Continuation works on x = (a, Omega, eta) in R^{N+2} with the N+1
// equations F(x) = (R(a, Omega, eta), |a|^2 - 1). Mirror-symmetric families
// can be traced inside their parity subspace, which keeps them exactly
// symmetric through branch points.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmode/errors.hpp"
#include "nmode/solution_types.hpp"
#include "nmode/stationary.hpp"

namespace nmode {

struct EtaRange {
  double min = -20.0;
  double max = 20.0;
};

struct StepControl {
  double initial_step = 1e-2;
  double min_step = 1e-5;
  double max_step = 0.5;
  /// Largest |delta eta| between stored points.
  double max_eta_step = 0.05;
  int max_points = 20000;
  double tolerance = 1e-11;
  int max_corrector_iterations = 12;
  /// Trace the branch inside the mirror-parity subspace of the seed.
  bool enforce_mirror_symmetry = false;
  /// Finish with a point solved exactly at the range end that was crossed.
  bool land_on_range_end = true;
  /// Sign of d(eta) on the first step when no hint is given.
  int initial_direction = -1;
  /// Optional (N+2)-vector orienting the first tangent.
  Eigen::VectorXd direction_hint;
  /// Optional early stop, checked after each accepted point.
  std::function<bool(const Branch&)> stop;
};

namespace detail {

// Orthonormal basis (columns) of the parity subspace of R^n.
inline Eigen::MatrixXd parity_basis(Eigen::Index n, int parity) {
  const Eigen::Index half = n / 2;
  const bool middle = (n % 2 == 1) && parity > 0;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, half + (middle ? 1 : 0));
  const double r = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < half; ++i) {
    b(i, i) = r;
    b(n - 1 - i, i) = parity > 0 ? r : -r;
  }
  if (middle) b(half, half) = 1.0;
  return b;
}

// Basis of the x-space (a, Omega, eta) restricted to a parity subspace of a,
// or the identity when parity == 0.
inline Eigen::MatrixXd state_basis(Eigen::Index n, int parity) {
  if (parity == 0) return Eigen::MatrixXd::Identity(n + 2, n + 2);
  const Eigen::MatrixXd pb = parity_basis(n, parity);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + 2, pb.cols() + 2);
  b.topLeftCorner(n, pb.cols()) = pb;
  b(n, pb.cols()) = 1.0;
  b(n + 1, pb.cols() + 1) = 1.0;
  return b;
}

// Row selector for the equations that stay nontrivial inside the subspace.
inline Eigen::MatrixXd equation_basis(Eigen::Index n, int parity) {
  if (parity == 0) return Eigen::MatrixXd::Identity(n + 1, n + 1);
  const Eigen::MatrixXd pb = parity_basis(n, parity);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(pb.cols() + 1, n + 1);
  e.topLeftCorner(pb.cols(), n) = pb.transpose();
  e(pb.cols(), n) = 1.0;
  return e;
}

inline Eigen::VectorXd pack(const Eigen::VectorXd& a, double omega, double eta) {
  Eigen::VectorXd x(a.size() + 2);
  x << a, omega, eta;
  return x;
}

inline Eigen::VectorXd full_residual(const Eigen::VectorXd& x, double sigma) {
  const Eigen::Index n = x.size() - 2;
  const StationaryResidual r = stationary_residual(x.head(n), x(n), x(n + 1), sigma);
  Eigen::VectorXd f(n + 1);
  f << r.r, r.normalization_defect;
  return f;
}

inline Eigen::MatrixXd full_jacobian(const Eigen::VectorXd& x, double sigma) {
  const Eigen::Index n = x.size() - 2;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n + 1, n + 2);
  j.leftCols(n + 1) = bordered_jacobian(x.head(n), x(n), x(n + 1), sigma);
  j.block(0, n + 1, n, 1) = eta_derivative(x.head(n), sigma);
  return j;
}

// Unit tangent of the solution curve through x (within the subspace).
inline Eigen::VectorXd tangent(const Eigen::VectorXd& x, double sigma, int parity) {
  const Eigen::Index n = x.size() - 2;
  const Eigen::MatrixXd b = state_basis(n, parity);
  const Eigen::MatrixXd j = equation_basis(n, parity) * full_jacobian(x, sigma) * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullV);
  Eigen::VectorXd t = b * svd.matrixV().col(b.cols() - 1);
  return t / t.norm();
}

struct CorrectorResult {
  Eigen::VectorXd x;
  int iterations = 0;
};

// Newton on (F(x), t.(x - x_pred)) = 0 inside the subspace.
inline std::optional<CorrectorResult> correct(const Eigen::VectorXd& x_pred, const Eigen::VectorXd& t,
                                              double sigma, int parity, double tol, int max_iter) {
  const Eigen::Index n = x_pred.size() - 2;
  const Eigen::MatrixXd b = state_basis(n, parity);
  const Eigen::MatrixXd e = equation_basis(n, parity);
  Eigen::VectorXd x = b * (b.transpose() * x_pred);
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::VectorXd f = full_residual(x, sigma);
    const double arc = t.dot(x - x_pred);
    if (!f.allFinite()) return std::nullopt;
    if (f.cwiseAbs().maxCoeff() <= tol && std::abs(arc) <= tol) return CorrectorResult{x, it};
    if (it == max_iter) break;
    Eigen::MatrixXd jac(e.rows() + 1, b.cols());
    jac.topRows(e.rows()) = e * full_jacobian(x, sigma) * b;
    jac.bottomRows(1) = t.transpose() * b;
    Eigen::VectorXd g(e.rows() + 1);
    g << e * f, arc;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (lu.rank() < jac.cols()) return std::nullopt;
    const Eigen::VectorXd dz = lu.solve(g);
    if (!dz.allFinite() || dz.norm() > 1e3) return std::nullopt;
    x -= b * dz;
  }
  return std::nullopt;
}

inline BranchPoint make_point(const Eigen::VectorXd& x, double sigma, double arclength) {
  const Eigen::Index n = x.size() - 2;
  return BranchPoint{x(n + 1), x(n), x.head(n),
                     min_singular_value(bordered_jacobian(x.head(n), x(n), x(n + 1), sigma)),
                     arclength};
}

inline Eigen::VectorXd point_state(const BranchPoint& p) { return pack(p.a, p.omega, p.eta); }

}  // namespace detail

inline AmplitudeSolution to_solution(const BranchPoint& p, double sigma) {
  AmplitudeSolution s{p.a, p.omega, p.eta, sigma, 0.0};
  s.residual_norm = stationary_residual(p.a, p.omega, p.eta, sigma).max_abs();
  return s;
}

/// Pseudo-arclength predictor-corrector continuation in eta.
inline Branch continue_branch(const AmplitudeSolution& seed, const EtaRange& range,
                              const StepControl& control = {}, const std::string& label = "") {
  detail::check_sigma(seed.sigma);
  if (!(range.min < range.max)) throw ParameterError("eta range must satisfy min < max");
  if (seed.eta < range.min - 1e-12 || seed.eta > range.max + 1e-12)
    throw ParameterError("seed eta lies outside the continuation range");
  if (!(control.min_step > 0.0 && control.min_step <= control.initial_step &&
        control.initial_step <= control.max_step))
    throw ParameterError("step control needs 0 < min_step <= initial_step <= max_step");

  const double sigma = seed.sigma;
  const Eigen::Index n = seed.a.size();
  AmplitudeSolution start = seed;
  if (stationary_residual(seed.a, seed.omega, seed.eta, sigma).max_abs() > 1e-10)
    start = newton_solve(seed);

  int parity = 0;
  if (control.enforce_mirror_symmetry) {
    parity = mirror_parity(start.a, 1e-8);
    if (parity == 0) throw ParameterError("mirror symmetry requested for an asymmetric seed");
  }

  Branch branch;
  branch.family_label = label;
  branch.sigma = sigma;

  Eigen::VectorXd x = detail::pack(start.a, start.omega, start.eta);
  if (parity != 0) {
    const Eigen::MatrixXd b = detail::state_basis(n, parity);
    x = b * (b.transpose() * x);
  }
  branch.points.push_back(detail::make_point(x, sigma, 0.0));

  Eigen::VectorXd t = detail::tangent(x, sigma, parity);
  if (control.direction_hint.size() == n + 2) {
    if (t.dot(control.direction_hint) < 0.0) t = -t;
  } else if (t(n + 1) * control.initial_direction < 0.0) {
    t = -t;
  }

  double h = control.initial_step;
  double arclength = 0.0;
  while (static_cast<int>(branch.points.size()) < control.max_points) {
    const Eigen::VectorXd x_pred = x + h * t;
    const auto corrected = detail::correct(x_pred, t, sigma, parity, control.tolerance,
                                           control.max_corrector_iterations);
    bool accept = false;
    Eigen::VectorXd x_new;
    Eigen::VectorXd t_new;
    if (corrected) {
      x_new = corrected->x;
      const Eigen::VectorXd secant = x_new - x;
      t_new = detail::tangent(x_new, sigma, parity);
      if (t_new.dot(t) < 0.0) t_new = -t_new;
      const double d_eta = std::abs(x_new(n + 1) - x(n + 1));
      if (secant.norm() > 2.0 * h || t_new.dot(t) < 0.8) {
        accept = false;
      } else if (d_eta > control.max_eta_step * (1.0 + 1e-9)) {
        h = std::max(control.min_step, 0.9 * h * control.max_eta_step / d_eta);
        continue;
      } else {
        accept = true;
      }
    }
    if (!accept) {
      h *= 0.5;
      if (h < control.min_step) {
        std::ostringstream msg;
        msg << "corrector failed at minimum step " << control.min_step << " near eta=" << x(n + 1);
        branch.truncation_reason = msg.str();
        break;
      }
      continue;
    }

    const double eta_new = x_new(n + 1);
    if (eta_new < range.min || eta_new > range.max) {
      if (control.land_on_range_end) {
        const double bound = eta_new < range.min ? range.min : range.max;
        const double frac = (bound - x(n + 1)) / (eta_new - x(n + 1));
        const Eigen::VectorXd guess = x + frac * (x_new - x);
        try {
          AmplitudeSolution s = newton_solve(
              AmplitudeSolution{guess.head(n), guess(n), bound, sigma, 0.0});
          if (s.a.dot(guess.head(n)) < 0.0) s.a = -s.a;
          const Eigen::VectorXd xb = detail::pack(s.a, s.omega, bound);
          if ((xb - guess).norm() <= h) {
            arclength += (xb - x).norm();
            branch.points.push_back(detail::make_point(xb, sigma, arclength));
          }
        } catch (const NumericError&) {
        }
      }
      break;
    }

    arclength += (x_new - x).norm();
    x = x_new;
    t = t_new;
    branch.points.push_back(detail::make_point(x, sigma, arclength));
    if (control.stop && control.stop(branch)) break;

    if (corrected->iterations <= 3) {
      h = std::min(1.5 * h, control.max_step);
    } else if (corrected->iterations >= 6) {
      h = std::max(0.7 * h, control.min_step);
    }
  }
  return branch;
}

/// Joins two branches traced from the same seed in opposite directions into
/// one ordered branch running from the end of `backward` to the end of
/// `forward`, with arclength measured from the new first point.
inline Branch merge_branches(const Branch& backward, const Branch& forward) {
  Branch out;
  out.family_label = forward.family_label.empty() ? backward.family_label : forward.family_label;
  out.sigma = forward.sigma;
  out.points.assign(backward.points.rbegin(), backward.points.rend());
  std::size_t skip = 0;
  if (!out.points.empty() && !forward.points.empty()) {
    const auto& x = out.points.back();
    const auto& y = forward.points.front();
    if (std::abs(x.eta - y.eta) < 1e-12 && (x.a - y.a).cwiseAbs().maxCoeff() < 1e-10) skip = 1;
  }
  out.points.insert(out.points.end(), forward.points.begin() + static_cast<long>(skip), forward.points.end());
  double s = 0.0;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (i > 0) {
      const auto& p = out.points[i - 1];
      const auto& c = out.points[i];
      s += std::sqrt((c.a - p.a).squaredNorm() + (c.omega - p.omega) * (c.omega - p.omega) +
                     (c.eta - p.eta) * (c.eta - p.eta));
    }
    out.points[i].arclength = s;
  }
  out.events = backward.events;
  out.events.insert(out.events.end(), forward.events.begin(), forward.events.end());
  if (!backward.truncation_reason.empty()) out.truncation_reason = backward.truncation_reason;
  if (!forward.truncation_reason.empty())
    out.truncation_reason += (out.truncation_reason.empty() ? "" : "; ") + forward.truncation_reason;
  return out;
}

/// Traces the branch through `seed` in both eta directions.
inline Branch continue_both_ways(const AmplitudeSolution& seed, const EtaRange& range, StepControl control,
                                 const std::string& label = "") {
  control.direction_hint = Eigen::VectorXd();
  control.initial_direction = -1;
  const Branch down = continue_branch(seed, range, control, label);
  control.initial_direction = 1;
  const Branch up = continue_branch(seed, range, control, label);
  return merge_branches(down, up);
}

namespace detail {

inline int branch_parity(const Branch& branch) {
  if (branch.points.empty()) return 0;
  const int p = mirror_parity(branch.points.front().a, 1e-7);
  if (p == 0) return 0;
  for (const auto& pt : branch.points)
    if (mirror_parity(pt.a, 1e-7) != p) return 0;
  return p;
}

// Curve point at offset s along the unit secant u from x0.
inline std::optional<Eigen::VectorXd> point_on_secant(const Eigen::VectorXd& x0, const Eigen::VectorXd& u,
                                                      double s, double sigma, int parity) {
  const auto r = correct(x0 + s * u, u, sigma, parity, 1e-12, 30);
  if (!r) return std::nullopt;
  return r->x;
}

// Bisection on a sign-valued predicate along the secant between two branch
// points. `side(x)` must differ between the ends; returns the refined state.
inline std::optional<Eigen::VectorXd> bisect_on_secant(const Eigen::VectorXd& xl, const Eigen::VectorXd& xr,
                                                       double sigma, int parity,
                                                       const std::function<int(const Eigen::VectorXd&)>& side) {
  const Eigen::VectorXd d = xr - xl;
  const double len = d.norm();
  if (len == 0.0) return std::nullopt;
  const Eigen::VectorXd u = d / len;
  const int left = side(xl);
  if (left == side(xr)) return std::nullopt;
  double lo = 0.0, hi = len;
  Eigen::VectorXd best = xl;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, len); ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto xm = point_on_secant(xl, u, mid, sigma, parity);
    if (!xm) return std::nullopt;
    best = *xm;
    if (side(*xm) == left) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace detail

/// Folds (saddle-nodes): sign changes of d(eta)/ds, refined by bisection on
/// the sign of the tangent's eta component.
inline std::vector<BifurcationEvent> detect_folds(const Branch& branch) {
  if (branch.points.size() < 3) throw ParameterError("detect_folds needs at least 3 branch points");
  const double sigma = branch.sigma;
  const int parity = detail::branch_parity(branch);
  const Eigen::Index n = branch.points.front().a.size();
  std::vector<BifurcationEvent> events;

  for (std::size_t i = 1; i + 1 < branch.points.size(); ++i) {
    const double d0 = branch.points[i].eta - branch.points[i - 1].eta;
    const double d1 = branch.points[i + 1].eta - branch.points[i].eta;
    if (!(d0 * d1 < 0.0)) continue;
    const Eigen::VectorXd xl = detail::point_state(branch.points[i - 1]);
    const Eigen::VectorXd xr = detail::point_state(branch.points[i + 1]);
    const Eigen::VectorXd u = (xr - xl).normalized();
    auto side = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd t = detail::tangent(x, sigma, parity);
      if (t.dot(u) < 0.0) t = -t;
      return t(n + 1) > 0.0 ? 1 : -1;
    };
    // An asymmetric branch turns back in eta where it crosses a symmetric
    // one (its symmetry-breaking part changes sign); that point is the
    // pitchfork, not a fold.
    if (parity == 0) {
      bool crossing = false;
      for (int p : {1, -1}) {
        const Eigen::VectorXd dl = xl.head(n) - p * mirrored(xl.head(n));
        const Eigen::VectorXd dr = xr.head(n) - p * mirrored(xr.head(n));
        if (dl.dot(dr) < 0.0) crossing = true;
      }
      if (crossing) continue;
    }
    const auto xf = detail::bisect_on_secant(xl, xr, sigma, parity, side);
    if (!xf) continue;
    BifurcationEvent ev;
    ev.kind = EventKind::fold;
    ev.eta_c = (*xf)(n + 1);
    ev.omega_c = (*xf)(n);
    ev.classification = Classification::none;
    ev.emanating_branch_seed = AmplitudeSolution{xf->head(n), (*xf)(n), (*xf)(n + 1), sigma,
                                                 detail::full_residual(*xf, sigma).cwiseAbs().maxCoeff()};
    ev.min_singular_value =
        min_singular_value(bordered_jacobian(xf->head(n), (*xf)(n), (*xf)(n + 1), sigma));
    ev.family_label = branch.family_label;
    events.push_back(ev);
  }
  return events;
}

/// Eigenvalues (ascending) and eigenvectors of the Jacobian block acting on
/// perturbations of the opposite mirror parity to the state.
struct BreakingSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns in R^N
};

inline BreakingSpectrum breaking_spectrum(const Eigen::VectorXd& a, double omega, double eta,
                                          double sigma, int parity) {
  const Eigen::MatrixXd c = detail::parity_basis(a.size(), -parity);
  if (c.cols() == 0) return {};
  const Eigen::MatrixXd block = c.transpose() * amplitude_jacobian(a, omega, eta, sigma) * c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
  return BreakingSpectrum{es.eigenvalues(), c * es.eigenvectors()};
}

inline int count_unstable_breaking_modes(const Eigen::VectorXd& x, double sigma, int parity) {
  const Eigen::Index n = x.size() - 2;
  const BreakingSpectrum bs = breaking_spectrum(x.head(n), x(n), x(n + 1), sigma, parity);
  return static_cast<int>((bs.values.array() > 0.0).count());
}

/// Number of linearly unstable symmetry-breaking modes of the dynamics.
/// Real perturbations see L+ (the amplitude Jacobian), imaginary ones see
/// L- = Omega + T - eta |a|^{2 sigma}; a mode grows when an eigenvalue of
/// L- L+ on the breaking subspace is negative or complex.
inline int breaking_instability_count(const Eigen::VectorXd& x, double sigma, int parity) {
  const Eigen::Index n = x.size() - 2;
  const Eigen::VectorXd a = x.head(n);
  const double omega = x(n), eta = x(n + 1);
  const Eigen::MatrixXd c = detail::parity_basis(n, -parity);
  if (c.cols() == 0) return 0;
  Eigen::MatrixXd lminus = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    lminus(k, k) = omega - eta * detail::abs_pow(a(k), 2.0 * sigma);
    if (k + 1 < n) lminus(k, k + 1) = lminus(k + 1, k) = 1.0;
  }
  const Eigen::MatrixXd lp = c.transpose() * amplitude_jacobian(a, omega, eta, sigma) * c;
  const Eigen::MatrixXd lm = c.transpose() * lminus * c;
  const Eigen::MatrixXd m = lm * lp;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  int count = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const auto mu = es.eigenvalues()(k);
    if (mu.real() < -1e-12 * scale || std::abs(mu.imag()) > 1e-10 * scale) ++count;
  }
  return count;
}

/// Symmetry-breaking (pitchfork) points on a mirror-invariant branch, with
/// branch switching and a geometric super/subcritical classification.
///
/// Detection follows sign changes of the breaking block of the Jacobian.
/// The side of eta_c with more dynamically unstable breaking modes is the
/// unstable one; the bifurcation is supercritical when the asymmetric
/// branch emerges on that side.
inline std::vector<BifurcationEvent> detect_pitchfork_and_classify(const Branch& branch,
                                                                  double sigma) {
  if (branch.points.size() < 2) throw ParameterError("pitchfork detection needs >= 2 points");
  const int parity = detail::branch_parity(branch);
  if (parity == 0) throw ParameterError("pitchfork detection needs a mirror-invariant branch");
  const Eigen::Index n = branch.points.front().a.size();
  std::vector<BifurcationEvent> events;

  auto unstable = [&](const Eigen::VectorXd& x) { return count_unstable_breaking_modes(x, sigma, parity); };

  for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
    const Eigen::VectorXd xl = detail::point_state(branch.points[i]);
    const Eigen::VectorXd xr = detail::point_state(branch.points[i + 1]);
    const int cl = unstable(xl);
    const int cr = unstable(xr);
    if (cl == cr) continue;
    const auto xc_opt = detail::bisect_on_secant(xl, xr, sigma, parity,
                                                 [&](const Eigen::VectorXd& x) { return unstable(x) == cl ? 0 : 1; });
    if (!xc_opt) continue;
    const Eigen::VectorXd xc = *xc_opt;
    const double eta_c = xc(n + 1);

    BifurcationEvent ev;
    ev.kind = EventKind::pitchfork;
    ev.eta_c = eta_c;
    ev.omega_c = xc(n);
    ev.family_label = branch.family_label;
    ev.min_singular_value = min_singular_value(bordered_jacobian(xc.head(n), xc(n), eta_c, sigma));
    ev.emanating_branch_seed = AmplitudeSolution{xc.head(n), xc(n), eta_c, sigma,
                                                 detail::full_residual(xc, sigma).cwiseAbs().maxCoeff()};

    const int il = breaking_instability_count(xl, sigma, parity);
    const int ir = breaking_instability_count(xr, sigma, parity);
    const bool right_unstable = il != ir ? ir > il : cr > cl;
    const double unstable_side_eta = right_unstable ? xr(n + 1) : xl(n + 1);
    const double unstable_dir = unstable_side_eta > eta_c ? 1.0 : -1.0;

    const BreakingSpectrum bs = breaking_spectrum(xc.head(n), xc(n), eta_c, sigma, parity);
    Eigen::Index k0 = 0;
    bs.values.cwiseAbs().minCoeff(&k0);
    const Eigen::VectorXd v = bs.vectors.col(k0).normalized();
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(n + 2);
    dir.head(n) = v;

    double d_eta[2] = {0.0, 0.0};
    std::optional<Eigen::VectorXd> asym[2];
    const double deltas[2] = {1e-2, 5e-3};
    for (int k = 0; k < 2; ++k) {
      const auto r = detail::correct(xc + deltas[k] * dir, dir, sigma, 0, 1e-12, 40);
      if (r && mirror_parity(r->x.head(n), 0.25 * deltas[k]) == 0) {
        asym[k] = r->x;
        d_eta[k] = r->x(n + 1) - eta_c;
      }
    }

    bool determinate = asym[0] && asym[1] && std::abs(d_eta[0]) > 1e-10 && std::abs(d_eta[1]) > 1e-10 &&
                       (d_eta[0] > 0.0) == (d_eta[1] > 0.0);
    if (asym[0]) {
      const Eigen::VectorXd& xa = *asym[0];
      ev.emanating_branch_seed = AmplitudeSolution{xa.head(n), xa(n), xa(n + 1), sigma,
                                                   detail::full_residual(xa, sigma).cwiseAbs().maxCoeff()};
    }
    if (determinate) {
      // The emanating branch must be continuable away from the symmetric one.
      StepControl sc;
      sc.initial_step = 1e-3;
      sc.max_points = 6;
      sc.land_on_range_end = false;
      sc.direction_hint = dir;
      try {
        const Branch em = continue_branch(ev.emanating_branch_seed,
                                          EtaRange{eta_c - 1e3, eta_c + 1e3}, sc);
        determinate = !em.points.empty() && em.points.back().arclength >= 1e-4;
      } catch (const std::exception&) {
        determinate = false;
      }
    }
    if (determinate) {
      ev.classification = ((d_eta[0] > 0.0 ? 1.0 : -1.0) == unstable_dir) ? Classification::supercritical
                                                                           : Classification::subcritical;
    }
    events.push_back(ev);
  }
  return events;
}

struct BifurcationTableRow {
  int n = 0;
  double sigma = 1.0;
  double eta_bif = 0.0;
  double omega_bif = 0.0;
  Classification classification = Classification::none;
};

/// Follows the symmetric ground state from eta = 0 toward negative eta and
/// reports its first symmetry-breaking point.
inline BifurcationTableRow ground_state_bifurcation(int n, double sigma, double eta_floor = -1000.0) {
  const AmplitudeSolution seed = linear_mode(n, 1, sigma);
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  sc.initial_direction = -1;
  sc.land_on_range_end = false;
  sc.stop = [sigma](const Branch& b) {
    return count_unstable_breaking_modes(detail::point_state(b.points.back()), sigma, 1) > 0;
  };
  const Branch branch = continue_branch(seed, EtaRange{eta_floor, 0.0}, sc, "ground-state");
  const auto events = detect_pitchfork_and_classify(branch, sigma);
  if (events.empty()) {
    std::ostringstream msg;
    msg << "no symmetry-breaking point found on the N=" << n << " ground state above eta=" << eta_floor;
    if (!branch.truncation_reason.empty()) msg << " (" << branch.truncation_reason << ")";
    throw NumericError(msg.str());
  }
  const auto first = std::max_element(events.begin(), events.end(),
                                      [](const auto& x, const auto& y) { return x.eta_c < y.eta_c; });
  return BifurcationTableRow{n, sigma, first->eta_c, first->omega_c, first->classification};
}

// ---------------------------------------------------------------------------
// Large focusing nonlinearity
//
// A state localized on one site has, as eta -> -inf,
//   q_site = 1 + s1 / eta^2,   Omega = eta (1 + Gamma / eta^2),
// with neighbours at lattice distance r carrying q ~ eta^(-2r). For an end
// site s1 -> -1 and Gamma -> 1 - sigma; each of the n_nb nearest neighbours
// contributes once, so an interior site has s1 -> -2, Gamma -> 2 (1 - sigma).

struct AsymptoticReport {
  int site = 1;
  int neighbours = 1;
  double s1_expected = -1.0;
  double gamma_expected = 0.0;
  double s1_measured = 0.0;
  double gamma_measured = 0.0;
  double q_site = 0.0;
  /// Lower bound 1 - (n_nb + 1)/eta^2 on q_site checked after refinement.
  double localization_bound = 0.0;
};

struct LocalizedState {
  AmplitudeSolution guess;
  AmplitudeSolution solution;
  AsymptoticReport report;
};

inline LocalizedState asymptotic_localized_seed(double eta, double sigma, int n, int site) {
  detail::check_sigma(sigma);
  if (n < 2) throw ParameterError("N must be >= 2");
  if (!(eta <= -8.0)) throw ParameterError("localized asymptotics need eta <= -8");
  if (site < 1 || site > n) throw ParameterError("site must lie in 1..N");

  const int nb = (site > 1 ? 1 : 0) + (site < n ? 1 : 0);
  AsymptoticReport rep;
  rep.site = site;
  rep.neighbours = nb;
  rep.s1_expected = -static_cast<double>(nb);
  rep.gamma_expected = nb * (1.0 - sigma);
  const double inv2 = 1.0 / (eta * eta);

  AmplitudeSolution guess;
  guess.a.resize(n);
  for (int k = 1; k <= n; ++k) {
    const int dist = std::abs(k - site);
    const double q = dist == 0 ? 1.0 + rep.s1_expected * inv2 : std::pow(inv2, dist);
    guess.a(k - 1) = std::sqrt(std::max(q, 0.0));
  }
  guess.a.normalize();
  guess.omega = eta * (1.0 + rep.gamma_expected * inv2);
  guess.eta = eta;
  guess.sigma = sigma;
  guess.residual_norm = stationary_residual(guess.a, guess.omega, eta, sigma).max_abs();

  AmplitudeSolution sol;
  try {
    sol = newton_solve(guess);
  } catch (const NumericError& e) {
    throw NumericError(std::string("localized state did not converge (eta too small for the "
                                   "asymptotic seed; use continuation instead): ") + e.what());
  }
  const Eigen::VectorXd q = sol.q();
  Eigen::Index arg = 0;
  q.maxCoeff(&arg);
  rep.q_site = q(site - 1);
  rep.s1_measured = (rep.q_site - 1.0) * eta * eta;
  rep.gamma_measured = (sol.omega / eta - 1.0) * eta * eta;
  rep.localization_bound = 1.0 - (nb + 1) * inv2;
  if (arg != site - 1 || rep.q_site < rep.localization_bound) {
    std::ostringstream msg;
    msg << "refined state is not localized on site " << site << " (q_site=" << rep.q_site
        << ", bound " << rep.localization_bound << ")";
    throw NumericError(msg.str());
  }
  return LocalizedState{guess, sol, rep};
}

}  // namespace nmode
