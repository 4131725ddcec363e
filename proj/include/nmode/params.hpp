#pragma once

#include <cmath>
#include <string>

#include "nmode/errors.hpp"

namespace nmode {

/// Parameters of the N-well lattice and its nonlinearity.
///
/// `eta` is the effective nonlinearity eps*C/beta; use `from_physical` when
/// the strength eps and the overlap constant C are known separately.
struct ModelParams {
  int n = 4;
  double sigma = 1.0;
  double lambda_d = 0.0;
  double beta = 1.0;
  double eta = 0.0;
  double hbar = 1.0;

  static ModelParams from_physical(int n, double sigma, double lambda_d, double beta,
                                   double epsilon, double c, double hbar) {
    ModelParams p{n, sigma, lambda_d, beta, 0.0, hbar};
    p.validate();
    p.eta = epsilon * c / beta;
    return p;
  }

  /// Nonlinear coefficient eps*C in energy units.
  double nonlinear_strength() const { return eta * beta; }

  void validate() const {
    if (n < 2) throw ParameterError("N must be >= 2, got " + std::to_string(n));
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw ParameterError("sigma must be > 0, got " + std::to_string(sigma));
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw ParameterError("beta must be > 0, got " + std::to_string(beta));
    if (!(hbar > 0.0) || !std::isfinite(hbar))
      throw ParameterError("hbar must be > 0, got " + std::to_string(hbar));
    if (!std::isfinite(lambda_d) || !std::isfinite(eta))
      throw ParameterError("lambda_D and eta must be finite");
  }
};

}  // namespace nmode
