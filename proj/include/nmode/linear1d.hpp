#pragma once

// One-dimensional linear multi-well check.
//
// Discretizes H = -hbar^2 d^2/dx^2 + V on a uniform grid with Dirichlet ends
// (second-order central differences) for a single smooth bump well and for
// N copies spaced by ell, and compares the lowest N-level cluster with the
// tridiagonal cosine pattern lambda_j = lambda_D - 2 beta cos(j pi/(N+1)).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmode/errors.hpp"
#include "nmode/tridiagonal.hpp"

namespace nmode {

struct Well1D {
  double depth = 5.0;    // V0
  double radius = 1.0;   // r
  double spacing = 2.5;  // ell, centre-to-centre

  void validate() const {
    if (!(depth > 0.0 && std::isfinite(depth))) throw ParameterError("well depth must be > 0");
    if (!(radius > 0.0 && std::isfinite(radius))) throw ParameterError("well radius must be > 0");
    if (!(spacing > 2.0 * radius && std::isfinite(spacing)))
      throw ParameterError("well spacing must exceed twice the radius");
  }
};

struct Grid1D {
  double half_width = 0.0;
  int n_points = 4000;

  double step() const { return 2.0 * half_width / (n_points + 1); }
  Eigen::VectorXd nodes() const {
    Eigen::VectorXd x(n_points);
    const double h = step();
    for (int i = 0; i < n_points; ++i) x(i) = -half_width + (i + 1) * h;
    return x;
  }
};

/// v(x) = -V0 exp(1/((x/r)^2 - 1)) inside |x| < r, zero outside.
inline double bump_potential(const Well1D& w, double x) {
  const double u = (x / w.radius) * (x / w.radius);
  if (u >= 1.0) return 0.0;
  return -w.depth * std::exp(1.0 / (u - 1.0));
}

/// Centre of well k (1-based) in an N-well chain symmetric about 0.
inline double well_center(const Well1D& w, int n, int k) { return (k - 0.5 * (n + 1)) * w.spacing; }

inline double nwell_potential(const Well1D& w, int n, double x) {
  double v = 0.0;
  for (int k = 1; k <= n; ++k) v += bump_potential(w, x - well_center(w, n, k));
  return v;
}

/// Default domain: all wells plus a margin of three radii.
inline double default_half_width(const Well1D& w, int n) { return n * w.spacing / 2.0 + 3.0 * w.radius; }

namespace detail {

inline void check_grid(const Grid1D& g, double hbar) {
  if (!(hbar > 0.0 && std::isfinite(hbar))) throw ParameterError("hbar must be > 0");
  if (g.n_points < 1000) throw ParameterError("grid needs at least 1000 points");
  if (!(g.half_width > 0.0 && std::isfinite(g.half_width))) throw ParameterError("grid half width must be > 0");
}

inline TridiagonalEigen solve_chain(const Well1D& w, int n, double hbar, const Grid1D& g, int count) {
  const Eigen::VectorXd x = g.nodes();
  const double h = g.step();
  const double k = hbar * hbar / (h * h);
  Eigen::VectorXd d(g.n_points);
  for (int i = 0; i < g.n_points; ++i) d(i) = 2.0 * k + nwell_potential(w, n, x(i));
  const Eigen::VectorXd e = Eigen::VectorXd::Constant(g.n_points - 1, -k);
  TridiagonalEigen te = lowest_eigenpairs(d, e, count);
  // Grid normalization sum psi^2 h = 1, first lobe positive.
  te.vectors /= std::sqrt(h);
  for (int j = 0; j < count; ++j) {
    Eigen::Index arg = 0;
    te.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    for (Eigen::Index i = 0; i < te.vectors.rows(); ++i) {
      if (std::abs(te.vectors(i, j)) > 1e-3 * std::abs(te.vectors(arg, j))) {
        if (te.vectors(i, j) < 0.0) te.vectors.col(j) *= -1.0;
        break;
      }
    }
  }
  return te;
}

// Linear interpolation of samples y on the uniform grid g at point xq.
inline double interpolate(const Grid1D& g, const Eigen::VectorXd& y, double xq) {
  const double h = g.step();
  const double s = (xq + g.half_width) / h - 1.0;
  if (s < 0.0 || s > g.n_points - 1) return 0.0;
  const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), g.n_points - 2);
  const double f = s - static_cast<double>(i);
  return (1.0 - f) * y(i) + f * y(i + 1);
}

}  // namespace detail

struct GroundState1D {
  Grid1D grid;
  Eigen::VectorXd x;
  Eigen::VectorXd psi;        // normalized, positive
  double lambda_d = 0.0;
  double lambda_d_fine = 0.0;  // same domain, 2n points
  double richardson = 0.0;     // (4 lambda_2n - lambda_n)/3
  std::vector<std::string> warnings;
};

/// Lowest Dirichlet eigenpair of a single well centred at 0.
inline GroundState1D dirichlet_ground_state(const Well1D& w, double hbar, double half_width, int n_points = 4000) {
  w.validate();
  const Grid1D g{half_width, n_points};
  detail::check_grid(g, hbar);
  if (!(half_width > w.radius)) throw ParameterError("domain half width must exceed the well radius");

  GroundState1D out;
  out.grid = g;
  out.x = g.nodes();
  const TridiagonalEigen coarse = detail::solve_chain(w, 1, hbar, g, 1);
  out.lambda_d = coarse.values(0);
  out.psi = coarse.vectors.col(0);
  const TridiagonalEigen fine = detail::solve_chain(w, 1, hbar, Grid1D{half_width, 2 * n_points + 1}, 1);
  out.lambda_d_fine = fine.values(0);
  out.richardson = (4.0 * out.lambda_d_fine - out.lambda_d) / 3.0;
  const double shift = std::abs(out.lambda_d_fine - out.lambda_d);
  if (shift > 1e-6) {
    std::ostringstream msg;
    msg << "grid may be too coarse: lambda_D moves by " << shift << " under grid doubling";
    out.warnings.push_back(msg.str());
  }
  return out;
}

/// Harmonic estimate v(0) + hbar sqrt(mu) with v(x) ~ v(0) + mu x^2 near 0.
inline double harmonic_ground_energy(const Well1D& w, double hbar) {
  const double mu = w.depth / std::numbers::e / (w.radius * w.radius);
  return -w.depth / std::numbers::e + hbar * std::sqrt(mu);
}

struct HoppingEstimate {
  double raw = 0.0;   // 2 hbar^2 psi(ell/2) psi'(ell/2), signed
  double beta = 0.0;  // |raw|
};

/// Hopping from the single-well tail at the midpoint between wells.
inline HoppingEstimate hopping_beta_formula(const GroundState1D& gs, double ell, double hbar) {
  if (!(hbar > 0.0)) throw ParameterError("hbar must be > 0");
  const Grid1D& g = gs.grid;
  const double h = g.step();
  const double xm = ell / 2.0;
  const double s = (xm + g.half_width) / h - 1.0;
  if (!(s >= 1.0 && s <= g.n_points - 3)) throw ParameterError("ell/2 lies outside the computed grid");
  const Eigen::Index i = static_cast<Eigen::Index>(s);
  const double f = s - static_cast<double>(i);
  const double psi = (1.0 - f) * gs.psi(i) + f * gs.psi(i + 1);
  const double d0 = (gs.psi(i + 1) - gs.psi(i - 1)) / (2.0 * h);
  const double d1 = (gs.psi(i + 2) - gs.psi(i)) / (2.0 * h);
  const double dpsi = (1.0 - f) * d0 + f * d1;
  HoppingEstimate est;
  est.raw = 2.0 * hbar * hbar * psi * dpsi;
  est.beta = std::abs(est.raw);
  return est;
}

struct NWellSpectrum {
  int n = 2;
  Grid1D grid;
  Eigen::VectorXd x;
  Eigen::VectorXd eigenvalues;   // lowest N+1
  Eigen::MatrixXd eigenvectors;  // columns, grid-normalized
};

inline NWellSpectrum nwell_spectrum_direct(const Well1D& w, int n, double hbar, const Grid1D& grid) {
  w.validate();
  if (n < 1) throw ParameterError("N must be >= 1");
  detail::check_grid(grid, hbar);
  if (grid.half_width < default_half_width(w, n) - 2.0 * w.radius)
    throw ParameterError("grid does not contain all wells");
  NWellSpectrum out;
  out.n = n;
  out.grid = grid;
  out.x = grid.nodes();
  const TridiagonalEigen te = detail::solve_chain(w, n, hbar, grid, n + 1);
  out.eigenvalues = te.values;
  out.eigenvectors = te.vectors;
  return out;
}

inline NWellSpectrum nwell_spectrum_direct(const Well1D& w, int n, double hbar, int n_points = 4000) {
  return nwell_spectrum_direct(w, n, hbar, Grid1D{default_half_width(w, n), n_points});
}

struct CosineFit {
  double lambda_d_fit = 0.0;
  double beta_fit = 0.0;
  /// Max deviation of the fit over the cluster, divided by lambda_N - lambda_1.
  double residual = 0.0;
  double cluster_width = 0.0;
  double gap = 0.0;  // lambda_{N+1} - lambda_N, when available
  std::vector<std::string> warnings;
};

/// Least-squares fit lambda_j = lambda_fit - 2 beta_fit cos(j pi/(N+1)) to
/// the lowest N values; a further value, if given, measures the gap.
inline CosineFit compare_lemma2(const Eigen::VectorXd& eigs, int n) {
  if (n < 2 || eigs.size() < n) throw ParameterError("need at least N eigenvalues with N >= 2");
  Eigen::MatrixXd design(n, 2);
  for (int j = 1; j <= n; ++j) {
    design(j - 1, 0) = 1.0;
    design(j - 1, 1) = -2.0 * std::cos(j * std::numbers::pi / (n + 1));
  }
  const Eigen::VectorXd lam = eigs.head(n);
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(lam);
  CosineFit fit;
  fit.lambda_d_fit = coef(0);
  fit.beta_fit = coef(1);
  fit.cluster_width = lam(n - 1) - lam(0);
  if (!(fit.cluster_width > 0.0)) throw NumericError("degenerate eigenvalue cluster");
  fit.residual = (design * coef - lam).cwiseAbs().maxCoeff() / fit.cluster_width;
  if (eigs.size() > n) {
    fit.gap = eigs(n) - eigs(n - 1);
    if (fit.gap <= fit.cluster_width) {
      std::ostringstream msg;
      msg << "cluster not separated from level N+1 (gap " << fit.gap << " vs width " << fit.cluster_width
          << "); tunnelling regime not reached";
      fit.warnings.push_back(msg.str());
    }
  }
  return fit;
}

/// Rows j: cluster eigenfunction j projected on the N shifted copies of
/// psi_D, normalized, first significant entry positive.
inline Eigen::MatrixXd well_projection_matrix(const NWellSpectrum& sp, const GroundState1D& gs, const Well1D& w) {
  const int n = sp.n;
  const double h = sp.grid.step();
  Eigen::MatrixXd shifted(sp.x.size(), n);
  for (int k = 1; k <= n; ++k) {
    const double c = well_center(w, n, k);
    for (Eigen::Index i = 0; i < sp.x.size(); ++i) shifted(i, k - 1) = detail::interpolate(gs.grid, gs.psi, sp.x(i) - c);
  }
  Eigen::MatrixXd p = sp.eigenvectors.leftCols(n).transpose() * shifted * h;
  for (int j = 0; j < n; ++j) {
    p.row(j).normalize();
    for (int k = 0; k < n; ++k) {
      if (std::abs(p(j, k)) > 1e-2) {
        if (p(j, k) < 0.0) p.row(j) *= -1.0;
        break;
      }
    }
  }
  return p;
}

}  // namespace nmode
