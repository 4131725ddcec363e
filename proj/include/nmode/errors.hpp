#pragma once

#include <stdexcept>
#include <string>

namespace nmode {

/// Invalid input parameters (CLI exit code 2).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure: non-convergence, singular systems, blow-up (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A state violates a chart or normalization precondition.
class StateError : public NumericError {
 public:
  explicit StateError(const std::string& what) : NumericError(what) {}
};

class SolverError : public NumericError {
 public:
  SolverError(const std::string& what, double final_residual, int iterations)
      : NumericError(what), final_residual_(final_residual), iterations_(iterations) {}

  double final_residual() const noexcept { return final_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double final_residual_;
  int iterations_;
};

/// Newton met a (numerically) singular Jacobian; the seed sits on or near a
/// fold or branch point and should be approached by continuation instead.
class NearBifurcationError : public SolverError {
 public:
  NearBifurcationError(const std::string& what, double final_residual, int iterations)
      : SolverError(what, final_residual, iterations) {}
};

/// File system or format failure (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nmode
