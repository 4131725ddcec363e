#pragma once

// Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
// bisection and inverse iteration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nmode/errors.hpp"

namespace nmode {

struct TridiagonalEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // unit columns
};

namespace detail {

// Number of eigenvalues strictly below x.
inline int sturm_count(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double x) {
  const double tiny = std::numeric_limits<double>::min();
  int count = 0;
  double q = d(0) - x;
  if (q < 0.0) ++count;
  for (Eigen::Index i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = tiny;
    q = d(i) - x - e(i - 1) * e(i - 1) / q;
    if (q < 0.0) ++count;
  }
  return count;
}

// Solves (T - shift) x = b with partial pivoting on the tridiagonal band.
inline Eigen::VectorXd shifted_solve(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double shift,
                                     Eigen::VectorXd b) {
  const Eigen::Index n = d.size();
  Eigen::VectorXd diag = d.array() - shift;
  Eigen::VectorXd up = e;                        // superdiagonal
  Eigen::VectorXd up2 = Eigen::VectorXd::Zero(n);  // fill-in from pivoting
  Eigen::VectorXd low = e;                       // subdiagonal
  const double guard = std::numeric_limits<double>::epsilon() *
                       std::max(1.0, d.cwiseAbs().maxCoeff() + 2.0 * e.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(low(i)) > std::abs(diag(i))) {
      // Swap rows i and i+1.
      std::swap(diag(i), low(i));
      std::swap(up(i), diag(i + 1));
      if (i + 1 < n - 1) std::swap(up2(i), up(i + 1));
      std::swap(b(i), b(i + 1));
    }
    if (diag(i) == 0.0) diag(i) = guard;
    const double m = low(i) / diag(i);
    diag(i + 1) -= m * up(i);
    if (i + 1 < n - 1) up(i + 1) -= m * up2(i);
    b(i + 1) -= m * b(i);
  }
  if (diag(n - 1) == 0.0) diag(n - 1) = guard;
  Eigen::VectorXd x(n);
  x(n - 1) = b(n - 1) / diag(n - 1);
  if (n > 1) x(n - 2) = (b(n - 2) - up(n - 2) * x(n - 1)) / diag(n - 2);
  for (Eigen::Index i = n - 3; i >= 0; --i)
    x(i) = (b(i) - up(i) * x(i + 1) - up2(i) * x(i + 2)) / diag(i);
  return x;
}

}  // namespace detail

/// The `count` smallest eigenpairs of the tridiagonal matrix with diagonal d
/// and off-diagonal e.
inline TridiagonalEigen lowest_eigenpairs(const Eigen::VectorXd& d, const Eigen::VectorXd& e, int count) {
  const Eigen::Index n = d.size();
  if (n < 2 || e.size() != n - 1) throw ParameterError("tridiagonal: need n >= 2 and n-1 off-diagonals");
  if (count < 1 || count > n) throw ParameterError("tridiagonal: count must be in 1..n");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e(i - 1)) : 0.0) + (i + 1 < n ? std::abs(e(i)) : 0.0);
    lo = std::min(lo, d(i) - r);
    hi = std::max(hi, d(i) + r);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const double eps = std::numeric_limits<double>::epsilon();

  TridiagonalEigen out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (int k = 0; k < count; ++k) {
    double a = lo, b = hi;
    while (b - a > 2.0 * eps * std::max(scale, 1.0)) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (detail::sturm_count(d, e, mid) > k) {
        b = mid;
      } else {
        a = mid;
      }
    }
    out.values(k) = 0.5 * (a + b);
  }

  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * std::sin(0.7 * static_cast<double>(i + k));
    v.normalize();
    for (int it = 0; it < 4; ++it) {
      v = detail::shifted_solve(d, e, out.values(k), v);
      // Keep members of a tight cluster orthogonal.
      for (int p = 0; p < k; ++p)
        if (std::abs(out.values(k) - out.values(p)) < 1e-3 * scale)
          v -= out.vectors.col(p).dot(v) * out.vectors.col(p);
      const double nv = v.norm();
      if (!(nv > 0.0) || !std::isfinite(nv)) throw NumericError("inverse iteration broke down");
      v /= nv;
    }
    out.vectors.col(k) = v;
  }
  return out;
}

}  // namespace nmode
