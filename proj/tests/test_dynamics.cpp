#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nmode/dynamics.hpp"

using namespace nmode;
using std::numbers::pi;

namespace {

ModelParams params(int n, double lambda_d = 0.0, double beta = 1.0, double sigma = 1.0) {
  ModelParams p;
  p.n = n;
  p.lambda_d = lambda_d;
  p.beta = beta;
  p.sigma = sigma;
  p.hbar = 1.0;
  return p;
}

Eigen::VectorXd zeros(int n) { return Eigen::VectorXd::Zero(n); }

ModeState random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  ModeState s{Eigen::VectorXcd(n), 0.0};
  for (int k = 0; k < n; ++k) s.d(k) = Complex(gauss(rng), gauss(rng));
  s.d /= s.d.norm();
  return s;
}

ActionAngleState random_action_angle(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0), ang(0.0, 2 * pi);
  ActionAngleState s{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int k = 0; k < n; ++k) {
    s.q(k) = u(rng);
    s.theta(k) = ang(rng);
  }
  s.q /= s.q.sum();
  return s;
}

}  // namespace

TEST(Rhs, FirstSiteMovesIntoSecond) {
  ModeState s{Eigen::VectorXcd::Zero(5), 0.0};
  s.d(0) = 1.0;
  const Eigen::VectorXcd dd = rhs_nmode(s, params(5), zeros(5));
  EXPECT_NEAR(std::abs(dd(0)), 0.0, 1e-15);
  EXPECT_NEAR(dd(1).real(), 0.0, 1e-15);
  EXPECT_NEAR(dd(1).imag(), 1.0, 1e-15);
  for (int k = 2; k < 5; ++k) EXPECT_EQ(dd(k), Complex(0.0));
}

TEST(Rhs, NormIsStationary) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6;
    const ModeState s = random_state(n, rng);
    ModelParams p = params(n, 0.4, 0.8, 1.5);
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -3.0);
    EXPECT_NEAR(s.d.dot(rhs_nmode(s, p, g)).real(), 0.0, 1e-13);
  }
}

TEST(Rhs, TwoWellEigenstateRotates) {
  const ModelParams p = params(2, 0.3, 0.7);
  ModeState s{Eigen::VectorXcd::Constant(2, std::sqrt(0.5)), 0.0};
  const Eigen::VectorXcd dd = rhs_nmode(s, p, zeros(2));
  const Eigen::VectorXcd expect = Complex(0.0, -1.0) * (0.3 - 0.7) * s.d;
  EXPECT_LE((dd - expect).norm(), 1e-15);
}

TEST(Rhs, RejectsUnnormalizedState) {
  ModeState s{Eigen::VectorXcd::Constant(3, 1.0), 0.0};
  EXPECT_THROW(rhs_nmode(s, params(3), zeros(3)), StateError);
}

TEST(Hamiltonian, UniformFourWells) {
  const ActionAngleState s{Eigen::VectorXd::Constant(4, 0.25), Eigen::VectorXd::Zero(4)};
  EXPECT_NEAR(hamiltonian(s, params(4), zeros(4)), -1.5, 1e-15);
}

TEST(Hamiltonian, LinearGroundState) {
  const ModelParams p = params(4, 0.6, 1.3);
  const ModeBasis b = closed_form_spectrum(p);
  const ActionAngleState s{b.a.row(0).transpose().array().square().matrix(), Eigen::VectorXd::Zero(4)};
  EXPECT_NEAR(hamiltonian(s, p, zeros(4)), 0.6 - 2 * 1.3 * std::cos(pi / 5), 1e-14);
}

TEST(Hamiltonian, DecoupledSingleSite) {
  ModelParams p = params(3, -0.5, 0.0, 2.0);
  ActionAngleState s{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
  s.q(0) = 1.0;
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(3, 4.5);
  EXPECT_NEAR(hamiltonian(s, p, g), -0.5 + 4.5 / 3.0, 1e-15);
}

TEST(Hamiltonian, ChartsAgree) {
  std::mt19937_64 rng(11);
  for (int n : {2, 4, 7}) {
    const ModelParams p = params(n, 0.2, 0.9, 1.7);
    const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(n, -2.0, 3.0);
    const ActionAngleState aa = random_action_angle(n, rng);
    EXPECT_NEAR(hamiltonian(aa, p, g), hamiltonian(to_mode_state(aa), p, g), 1e-13);
  }
}

TEST(Chart, RoundTrip) {
  std::mt19937_64 rng(3);
  const ActionAngleState aa = random_action_angle(5, rng);
  const ActionAngleState back = to_action_angle(to_mode_state(aa));
  EXPECT_LE((back.q - aa.q).cwiseAbs().maxCoeff(), 1e-15);
  for (int k = 0; k < 5; ++k) {
    const double diff = std::remainder(back.theta(k) - aa.theta(k), 2 * pi);
    EXPECT_NEAR(diff, 0.0, 1e-13);
    EXPECT_GE(back.theta(k), 0.0);
    EXPECT_LT(back.theta(k), 2 * pi);
  }
}

TEST(Chart, EmptyModeThrows) {
  ModeState s{Eigen::VectorXcd::Zero(3), 0.0};
  s.d(0) = 1.0;
  EXPECT_THROW(to_action_angle(s), StateError);
}

TEST(Reduced, TwoWellFormula) {
  ModelParams p = params(2, 0.4, 1.1, 2.0);
  const Eigen::Vector2d g(1.5, -0.5);
  const double q1 = 0.3, th = 0.7;
  ActionAngleState s{Eigen::Vector2d(q1, 1 - q1), Eigen::Vector2d(th + 0.2, 0.2)};
  const ReducedState r = reduce(s);
  EXPECT_NEAR(r.cumulative_q(0), q1, 1e-15);
  EXPECT_NEAR(r.theta_diff(0), th, 1e-15);
  const double expect = 0.4 - 2 * 1.1 * std::cos(th) * std::sqrt((1 - q1) * q1) +
                        (1.5 * std::pow(q1, 3) - 0.5 * std::pow(1 - q1, 3)) / 3.0;
  EXPECT_NEAR(reduced_hamiltonian(r, p, g), expect, 1e-14);
}

TEST(Reduced, MatchesFullHamiltonian) {
  std::mt19937_64 rng(5);
  const ModelParams p = params(5, 0.3, 0.8, 1.3);
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(5, -4.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const ActionAngleState s = random_action_angle(5, rng);
    EXPECT_NEAR(reduced_hamiltonian(reduce(s), p, g), hamiltonian(s, p, g), 1e-12);
  }
}

TEST(Reduced, UniformFourWells) {
  const ActionAngleState s{Eigen::VectorXd::Constant(4, 0.25), Eigen::VectorXd::Zero(4)};
  EXPECT_NEAR(reduced_hamiltonian(reduce(s), params(4, 0.7, 2.0), zeros(4)), 0.7 - 3.0, 1e-14);
}

TEST(Reduced, NonMonotoneThrows) {
  ReducedState r{Eigen::Vector3d(0.5, 0.3, 0.9), Eigen::Vector3d::Zero()};
  EXPECT_THROW(reduced_hamiltonian(r, params(4), zeros(4)), StateError);
  ActionAngleState s{Eigen::VectorXd::Constant(3, 0.5), Eigen::VectorXd::Zero(3)};
  EXPECT_THROW(reduce(s), StateError);
}

TEST(ActionAngle, AnalyticRhsMatchesComplex) {
  std::mt19937_64 rng(13);
  for (int n : {2, 4, 8}) {
    const ModelParams p = params(n, -0.3, 0.9, 1.5);
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -6.0);
    for (int trial = 0; trial < 10; ++trial) {
      const ActionAngleState s = random_action_angle(n, rng);
      const ActionAngleRate a = action_angle_rhs(s, p, g);
      const ActionAngleRate c = action_angle_rate_from_complex(to_mode_state(s), p, g);
      EXPECT_LE((a.q_dot - c.q_dot).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((a.theta_dot - c.theta_dot).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ActionAngle, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  const double h = 1e-6;
  for (int n : {2, 4, 8}) {
    const ModelParams p = params(n, 0.5, 1.2, 2.0);
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(n, 3.0);
    const ActionAngleState s = random_action_angle(n, rng);
    const HamiltonianGradient grad = hamiltonian_gradient(s, p, g);
    for (int k = 0; k < n; ++k) {
      ActionAngleState up = s, dn = s;
      up.q(k) += h;
      dn.q(k) -= h;
      const double fd_q = (hamiltonian(up, p, g) - hamiltonian(dn, p, g)) / (2 * h);
      EXPECT_NEAR(grad.d_q(k), fd_q, 1e-6 * std::max(1.0, std::abs(fd_q)));
      up = s;
      dn = s;
      up.theta(k) += h;
      dn.theta(k) -= h;
      const double fd_t = (hamiltonian(up, p, g) - hamiltonian(dn, p, g)) / (2 * h);
      EXPECT_NEAR(grad.d_theta(k), fd_t, 1e-6 * std::max(1.0, std::abs(fd_t)));
    }
  }
}

TEST(Integrator, CompositionWeights) {
  EXPECT_EQ(composition_weights(2).size(), 1u);
  EXPECT_EQ(composition_weights(4).size(), 3u);
  EXPECT_EQ(composition_weights(6).size(), 9u);
  for (int order : {2, 4, 6}) {
    double sum = 0.0;
    for (double w : composition_weights(order)) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-14);
  }
  EXPECT_THROW(composition_weights(3), ParameterError);
  EXPECT_THROW(composition_weights(8), ParameterError);
}

TEST(Integrator, LinearEigenstateKeepsModulus) {
  const ModelParams p = params(4, 0.2, 1.0);
  const ModeBasis b = closed_form_spectrum(p);
  for (int j = 0; j < 4; ++j) {
    const ModeState init{b.a.row(j).transpose().cast<Complex>(), 0.0};
    const Trajectory tr = integrate(init, 10.0, default_time_step(p), p, zeros(4), {6, 50});
    const ModeState& last = tr.samples.back();
    EXPECT_EQ(last.t, 10.0);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(last.d(k)), std::abs(init.d(k)), 1e-9);
    const Complex ratio = last.d(0) / init.d(0);
    const Complex expect = std::polar(1.0, -b.mu(j) * 10.0 / p.hbar);
    EXPECT_NEAR(std::abs(ratio - expect), 0.0, 1e-9);
  }
}

TEST(Integrator, Conservation) {
  std::mt19937_64 rng(23);
  for (int n : {2, 4, 8}) {
    ModelParams p = params(n, 0.0, 1.0, 1.0);
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -8.0);
    const ModeState init = random_state(n, rng);
    const Trajectory tr = integrate(init, 100.0, default_time_step(p), p, g);
    EXPECT_LE(tr.report.max_norm_drift, 1e-9);
    EXPECT_LE(tr.report.max_energy_drift, 1e-8);
  }
}

TEST(Integrator, ConvergesAtOrder) {
  const ModelParams p = params(3, 0.0, 1.0, 1.0);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(3, 4.0);
  std::mt19937_64 rng(29);
  const ModeState init = random_state(3, rng);
  const auto end = [&](int order, double dt) {
    return integrate(init, 2.0, dt, p, g, {order, 1000000}).samples.back().d;
  };
  for (int order : {2, 4}) {
    const Eigen::VectorXcd ref = end(6, 1e-3);
    const double e1 = (end(order, 0.04) - ref).norm();
    const double e2 = (end(order, 0.02) - ref).norm();
    EXPECT_NEAR(std::log2(e1 / e2), order, 0.3) << order;
  }
}

TEST(Integrator, TimeReversible) {
  std::mt19937_64 rng(31);
  const ModelParams p = params(4, 0.1, 1.0, 2.0);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(4, -5.0);
  const ModeState init = random_state(4, rng);
  const Trajectory fwd = integrate(init, 20.0, 0.01, p, g);
  const Trajectory back = integrate(fwd.samples.back(), 0.0, 0.01, p, g);
  EXPECT_EQ(back.samples.back().t, 0.0);
  EXPECT_LE((back.samples.back().d - init.d).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Integrator, JosephsonPeriodConverged) {
  const ModelParams p = params(2, 0.0, 1.0, 1.0);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(2, 1.0);
  const ModeState init{Eigen::Vector2cd(std::sqrt(0.8), std::sqrt(0.2)), 0.0};
  const auto period = [&](double dt) {
    const Trajectory tr = integrate(init, 40.0, dt, p, g, {6, 1});
    // Upward crossings of q1 = 1/2, linearly interpolated.
    std::vector<double> cross;
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
      const double a = std::norm(tr.samples[i - 1].d(0)) - 0.5;
      const double b = std::norm(tr.samples[i].d(0)) - 0.5;
      if (a < 0.0 && b >= 0.0) {
        const double t0 = tr.samples[i - 1].t, t1 = tr.samples[i].t;
        cross.push_back(t0 + (t1 - t0) * a / (a - b));
      }
    }
    EXPECT_GE(cross.size(), 3u);
    return (cross.back() - cross.front()) / static_cast<double>(cross.size() - 1);
  };
  const double coarse = period(0.01);
  const double fine = period(0.001);
  EXPECT_GT(coarse, 0.0);
  EXPECT_LE(std::abs(coarse - fine) / fine, 1e-3);
}

TEST(Integrator, RejectsBadInput) {
  const ModelParams p = params(2);
  const ModeState init{Eigen::Vector2cd(1.0, 0.0), 0.0};
  EXPECT_THROW(integrate(init, 1.0, 0.0, p, zeros(2)), ParameterError);
  EXPECT_THROW(integrate(init, 1.0, 0.01, p, zeros(3)), ParameterError);
  const ModeState big{Eigen::Vector2cd(1.0, 1.0), 0.0};
  EXPECT_THROW(integrate(big, 1.0, 0.01, p, zeros(2)), StateError);
  ModelParams frozen = params(2, 0.0, 0.0);
  EXPECT_THROW(default_time_step(frozen), ParameterError);
}
