#pragma once

// Census of all stationary states at a fixed eta.
//
// Seeds come from several independent sources, each refined by Newton:
//  - continuation of every linear lattice mode from eta = 0,
//  - anti-continuum states: equal weight on a subset of sites with any
//    signs, which become exact solutions as |eta| -> inf,
//  - closed-form points of the four-well symmetric families (N = 4),
//  - optional random multistart.
// Solutions are then filtered, deduplicated up to the global sign and sorted.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmode/continuation.hpp"
#include "nmode/errors.hpp"
#include "nmode/parallel.hpp"
#include "nmode/solution_types.hpp"
#include "nmode/stationary.hpp"

namespace nmode {

enum class SignFilter { all, positive };

inline const char* to_string(SignFilter f) { return f == SignFilter::all ? "all" : "positive"; }

inline SignFilter sign_filter_from_string(const std::string& s) {
  if (s == "all") return SignFilter::all;
  if (s == "positive") return SignFilter::positive;
  throw ParameterError("unknown sign filter '" + s + "' (expected all or positive)");
}

/// Default PRNG seed for random multistart.
inline constexpr std::uint64_t default_census_seed = 20140611;

struct SeedStrategy {
  bool linear_continuation = true;
  bool anti_continuum = true;
  bool symmetric_family = true;
  int random_starts = 0;
  std::uint64_t seed = default_census_seed;
  SignFilter filter = SignFilter::all;
  double dedup_tolerance = 1e-6;
  /// Anti-continuum seeds grow like 3^N; skipped above this size.
  int anti_continuum_max_n = 12;
  int threads = 1;
};

struct Census {
  std::vector<AmplitudeSolution> solutions;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<AmplitudeSolution> anti_continuum_seeds(double eta, double sigma, int n) {
  std::vector<AmplitudeSolution> seeds;
  const unsigned full = 1u << n;
  for (unsigned subset = 1; subset < full; ++subset) {
    std::vector<int> sites;
    for (int k = 0; k < n; ++k)
      if (subset & (1u << k)) sites.push_back(k);
    const int m = static_cast<int>(sites.size());
    const double amp = 1.0 / std::sqrt(static_cast<double>(m));
    // First occupied site fixed positive (gauge).
    for (unsigned signs = 0; signs < (1u << (m - 1)); ++signs) {
      AmplitudeSolution s;
      s.a = Eigen::VectorXd::Zero(n);
      s.a(sites[0]) = amp;
      for (int i = 1; i < m; ++i) s.a(sites[i]) = (signs & (1u << (i - 1))) ? -amp : amp;
      s.omega = eta * std::pow(amp, 2.0 * sigma);
      s.eta = eta;
      s.sigma = sigma;
      seeds.push_back(s);
    }
  }
  return seeds;
}

inline std::optional<AmplitudeSolution> continue_linear_mode(int n, int j, double eta, double sigma) {
  const AmplitudeSolution start = linear_mode(n, j, sigma);
  if (eta == 0.0) return start;
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  sc.initial_direction = eta < 0.0 ? -1 : 1;
  const EtaRange range = eta < 0.0 ? EtaRange{eta, 0.0} : EtaRange{0.0, eta};
  const Branch b = continue_branch(start, range, sc);
  if (b.points.empty() || std::abs(b.points.back().eta - eta) > 1e-12) return std::nullopt;
  return to_solution(b.points.back(), sigma);
}

inline bool passes(const AmplitudeSolution& s, SignFilter f) {
  return f == SignFilter::all || (s.a.array() > 0.0).all();
}

inline bool solution_less(const AmplitudeSolution& x, const AmplitudeSolution& y) {
  if (x.omega != y.omega) return x.omega < y.omega;
  for (Eigen::Index k = 0; k < x.a.size(); ++k)
    if (x.a(k) != y.a(k)) return x.a(k) > y.a(k);
  return false;
}

}  // namespace detail

inline Census enumerate_solutions(double eta, double sigma, int n, const SeedStrategy& strategy = {}) {
  detail::check_sigma(sigma);
  if (n < 2) throw ParameterError("N must be >= 2");
  if (!std::isfinite(eta)) throw ParameterError("eta must be finite");
  if (!(strategy.dedup_tolerance > 0.0)) throw ParameterError("dedup tolerance must be positive");
  if (strategy.random_starts < 0) throw ParameterError("random_starts must be >= 0");

  Census census;
  std::vector<AmplitudeSolution> seeds;
  std::vector<std::optional<AmplitudeSolution>> results;

  // Continuation seeds are already converged; run them as independent jobs.
  if (strategy.linear_continuation) {
    std::vector<std::optional<AmplitudeSolution>> cont(static_cast<std::size_t>(n));
    parallel_for(cont.size(), strategy.threads, [&](std::size_t j) {
      try {
        cont[j] = detail::continue_linear_mode(n, static_cast<int>(j) + 1, eta, sigma);
      } catch (const NumericError&) {
      }
    });
    for (auto& c : cont)
      if (c) seeds.push_back(*c);
  }
  if (strategy.anti_continuum) {
    if (n <= strategy.anti_continuum_max_n) {
      const auto ac = detail::anti_continuum_seeds(eta, sigma, n);
      seeds.insert(seeds.end(), ac.begin(), ac.end());
    } else {
      census.warnings.push_back("anti-continuum seeds skipped for N > " +
                                std::to_string(strategy.anti_continuum_max_n));
    }
  }
  if (strategy.symmetric_family && n == 4) {
    for (int j : {1, 2})
      for (int l : {1, 2}) {
        const SignPattern fam{j, l, 2};
        for (double q : family_roots(eta, sigma, fam)) seeds.push_back(family_solution(q, sigma, fam));
      }
  }
  if (strategy.random_starts > 0) {
    std::mt19937_64 rng(strategy.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-std::abs(eta) - 2.0, std::abs(eta) + 2.0);
    for (int i = 0; i < strategy.random_starts; ++i) {
      AmplitudeSolution s;
      s.a.resize(n);
      for (int k = 0; k < n; ++k) s.a(k) = gauss(rng);
      s.a.normalize();
      s.omega = uni(rng);
      s.eta = eta;
      s.sigma = sigma;
      seeds.push_back(s);
    }
  }

  results.resize(seeds.size());
  parallel_for(seeds.size(), strategy.threads, [&](std::size_t i) {
    AmplitudeSolution s = seeds[i];
    s.eta = eta;
    s.sigma = sigma;
    try {
      results[i] = newton_solve(s);
    } catch (const NumericError&) {
    }
  });

  // Deterministic reduction in seed order.
  std::vector<AmplitudeSolution> found;
  const double tol = strategy.dedup_tolerance;
  for (const auto& r : results) {
    if (!r || !detail::passes(*r, strategy.filter)) continue;
    bool duplicate = false;
    for (const auto& f : found) {
      const double d = std::max((r->a - f.a).cwiseAbs().maxCoeff(), std::abs(r->omega - f.omega));
      if (d <= tol) {
        duplicate = true;
        break;
      }
      if (d <= 10.0 * tol) {
        std::ostringstream msg;
        msg << "near-duplicate solutions at Omega=" << f.omega << " (distance " << d
            << ") retained separately";
        census.warnings.push_back(msg.str());
      }
    }
    if (!duplicate) found.push_back(*r);
  }
  std::sort(found.begin(), found.end(), detail::solution_less);
  census.solutions = std::move(found);
  return census;
}

}  // namespace nmode
