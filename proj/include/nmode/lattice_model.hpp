#pragma once

// Coupling matrix of N wells and its spectrum.
//
// On a line the hopping matrix is the tridiagonal Toeplitz matrix
//   T = lambda_D * I - beta * tridiag(1, 0, 1)
// with eigenvalues mu_j = lambda_D - 2 beta cos(j pi / (N+1)) and normalized
// eigenvectors alpha_{j,k} = sqrt(2/(N+1)) sin(k j pi / (N+1)).
//
// The square 4-well grid (wells at (+-1, +-1)) has spectrum
// {lambda_D - 2 beta, lambda_D, lambda_D, lambda_D + 2 beta}. Some published
// versions list lambda_D - 2 beta twice; the trace rules that out.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmode/errors.hpp"
#include "nmode/params.hpp"

namespace nmode {

enum class StructureTag { line, graph };

struct CouplingMatrix {
  int n = 0;
  Eigen::MatrixXd entries;
  StructureTag structure_tag = StructureTag::line;
};

/// Rows of `a` are the normalized eigenvectors, `mu` the matching eigenvalues
/// in ascending order.
struct ModeBasis {
  Eigen::MatrixXd a;
  Eigen::VectorXd mu;
};

namespace detail {

inline void validate_lattice(const ModelParams& params) {
  if (params.n < 2) throw ParameterError("N must be >= 2, got " + std::to_string(params.n));
  if (!(params.beta >= 0.0) || !std::isfinite(params.beta))
    throw ParameterError("beta must be finite and >= 0");
  if (!std::isfinite(params.lambda_d)) throw ParameterError("lambda_D must be finite");
}

// First component with magnitude above `tol` made positive.
inline void normalize_sign(Eigen::Ref<Eigen::VectorXd> v, double tol = 1e-12) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > tol) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

inline bool lexicographically_less(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   double tol = 1e-12) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < y(i) - tol) return true;
    if (x(i) > y(i) + tol) return false;
  }
  return false;
}

// Replaces the columns of `v` (an orthonormal basis of a degenerate
// eigenspace) by a basis that depends only on the subspace: Gram-Schmidt on
// the projections of e_1, e_2, ... followed by sign normalization and
// lexicographic ordering.
inline Eigen::MatrixXd canonical_basis(const Eigen::MatrixXd& v) {
  const Eigen::Index n = v.rows();
  const Eigen::Index m = v.cols();
  const Eigen::MatrixXd proj = v * v.transpose();
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index i = 0; i < n && static_cast<Eigen::Index>(basis.size()) < m; ++i) {
    Eigen::VectorXd w = proj.col(i);
    for (const auto& b : basis) w -= b.dot(w) * b;
    const double norm = w.norm();
    if (norm > 1e-8) basis.push_back(w / norm);
  }
  for (auto& b : basis) normalize_sign(b);
  std::sort(basis.begin(), basis.end(),
            [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
              return lexicographically_less(x, y);
            });
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index j = 0; j < m; ++j) out.col(j) = basis[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace detail

/// T = -beta * tridiag(1,0,1) + lambda_D * I.
inline CouplingMatrix build_line_coupling(const ModelParams& params) {
  detail::validate_lattice(params);
  const int n = params.n;
  CouplingMatrix t{n, Eigen::MatrixXd::Zero(n, n), StructureTag::line};
  for (int k = 0; k < n; ++k) {
    t.entries(k, k) = params.lambda_d;
    if (k + 1 < n) {
      t.entries(k, k + 1) = -params.beta;
      t.entries(k + 1, k) = -params.beta;
    }
  }
  return t;
}

/// Coupling on an arbitrary well graph: lambda_D on the diagonal, -beta on
/// every edge of the 0/1 symmetric adjacency matrix.
inline CouplingMatrix build_graph_coupling(const Eigen::MatrixXd& adjacency,
                                           const ModelParams& params) {
  detail::validate_lattice(params);
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n) throw ParameterError("adjacency must be square");
  if (n != params.n)
    throw ParameterError("adjacency size " + std::to_string(n) + " does not match N=" +
                         std::to_string(params.n));
  CouplingMatrix t{static_cast<int>(n), Eigen::MatrixXd::Zero(n, n), StructureTag::graph};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw ParameterError("adjacency must have a zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double e = adjacency(i, j);
      if (e != 0.0 && e != 1.0) throw ParameterError("adjacency entries must be 0 or 1");
      if (e != adjacency(j, i)) throw ParameterError("adjacency must be symmetric");
      if (e == 1.0) t.entries(i, j) = -params.beta;
    }
    t.entries(i, i) = params.lambda_d;
  }
  return t;
}

inline ModeBasis closed_form_spectrum(const ModelParams& params) {
  detail::validate_lattice(params);
  const int n = params.n;
  const double h = std::numbers::pi / (n + 1);
  const double scale = std::sqrt(2.0 / (n + 1));
  ModeBasis basis{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
  for (int j = 1; j <= n; ++j) {
    basis.mu(j - 1) = params.lambda_d - 2.0 * params.beta * std::cos(j * h);
    for (int k = 1; k <= n; ++k) basis.a(j - 1, k - 1) = scale * std::sin(k * j * h);
  }
  return basis;
}

/// Numerical eigen-decomposition used as an oracle for the closed forms.
/// Degenerate clusters get a canonical, sign-normalized, lexicographically
/// ordered basis so the output is deterministic.
inline ModeBasis diagonalize_symmetric(const CouplingMatrix& matrix) {
  const Eigen::MatrixXd& t = matrix.entries;
  if (t.rows() != t.cols()) throw ParameterError("coupling matrix must be square");
  if (t.size() > 0 &&
      (t - t.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, t.cwiseAbs().maxCoeff()))
    throw ParameterError("coupling matrix must be symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(t);
  if (solver.info() != Eigen::Success)
    throw NumericError("symmetric eigensolver did not converge (n=" + std::to_string(t.rows()) +
                       ")");

  const Eigen::Index n = t.rows();
  const Eigen::VectorXd& mu = solver.eigenvalues();
  Eigen::MatrixXd vecs = solver.eigenvectors();
  const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());

  for (Eigen::Index begin = 0; begin < n;) {
    Eigen::Index end = begin + 1;
    while (end < n && std::abs(mu(end) - mu(begin)) <= 1e-10 * scale) ++end;
    if (end - begin > 1) {
      vecs.middleCols(begin, end - begin) = detail::canonical_basis(vecs.middleCols(begin, end - begin));
    } else {
      detail::normalize_sign(vecs.col(begin));
    }
    begin = end;
  }

  const double tnorm = t.norm();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double res = (t * vecs.col(j) - mu(j) * vecs.col(j)).norm();
    if (res > 1e-10 * std::max(tnorm, 1e-300)) {
      std::ostringstream msg;
      msg << "eigenpair " << j << " residual " << res << " exceeds 1e-10*||T||=" << 1e-10 * tnorm;
      throw NumericError(msg.str());
    }
  }
  return ModeBasis{vecs.transpose(), mu};
}

}  // namespace nmode
