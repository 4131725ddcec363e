#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "nmode/continuation.hpp"

using namespace nmode;

namespace {

double median_singular_value(const Branch& b) {
  std::vector<double> v;
  for (const auto& p : b.points) v.push_back(p.min_singular_value);
  return detail::median(v);
}

Branch outer_family_branch(double sigma, const SignPattern& fam, double eta_min, double eta_max) {
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  return continue_both_ways(family_solution(0.45, sigma, fam), EtaRange{eta_min, eta_max}, sc,
                            family_label(fam));
}

}  // namespace

TEST(Continuation, PointsAreConvergedAndDense) {
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  const Branch b = continue_branch(linear_mode(4, 1), EtaRange{-12.0, 0.0}, sc, "ground");
  ASSERT_GT(b.points.size(), 10u);
  EXPECT_TRUE(b.truncation_reason.empty()) << b.truncation_reason;
  EXPECT_DOUBLE_EQ(b.points.back().eta, -12.0);
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const BranchPoint& p = b.points[i];
    EXPECT_LE(stationary_residual(p.a, p.omega, p.eta, 1.0).max_abs(), 1e-10);
    EXPECT_NEAR(p.a.squaredNorm(), 1.0, 1e-10);
    if (i > 0) {
      EXPECT_LE(std::abs(p.eta - b.points[i - 1].eta), 0.05 + 1e-12);
      EXPECT_GT(p.arclength, b.points[i - 1].arclength);
    }
  }
}

TEST(Continuation, GroundStateReachesSymmetricTableRow) {
  // The continuation of the unperturbed ground state passes through row (a).
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  const Branch b = continue_branch(linear_mode(4, 1), EtaRange{-12.0, 0.0}, sc);
  const BranchPoint& end = b.points.back();
  EXPECT_NEAR(end.omega, -7.021, 5e-3);
  EXPECT_NEAR(end.a(0) * end.a(0), 0.010, 5e-3);
}

TEST(Continuation, TwoWellSymmetricBranch) {
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  const Branch b = continue_branch(linear_mode(2, 1), EtaRange{-5.0, 0.0}, sc);
  for (const auto& p : b.points) {
    EXPECT_NEAR(p.a(0), p.a(1), 1e-12);
    // Omega = eta / 2 - 1 along q1 = q2 = 1/2.
    EXPECT_NEAR(p.omega, 0.5 * p.eta - 1.0, 1e-10);
  }
}

TEST(Continuation, StaggeredContinuationCommutes) {
  StepControl down;
  down.enforce_mirror_symmetry = true;
  const Branch b = continue_branch(linear_mode(4, 1), EtaRange{-6.0, 0.0}, down);
  StepControl up = down;
  up.initial_direction = 1;
  const Branch s = continue_branch(stagger_solution(linear_mode(4, 1)), EtaRange{0.0, 6.0}, up);
  ASSERT_EQ(b.points.size(), s.points.size());
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const AmplitudeSolution img = stagger_solution(to_solution(s.points[i], 1.0));
    EXPECT_NEAR(img.eta, b.points[i].eta, 1e-9);
    EXPECT_NEAR(img.omega, b.points[i].omega, 1e-9);
    EXPECT_LE((img.a - b.points[i].a).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Continuation, RejectsBadSeed) {
  const AmplitudeSolution asym = newton_solve(AmplitudeSolution{
      Eigen::Vector4d(std::sqrt(0.502), std::sqrt(0.487), std::sqrt(0.011), std::sqrt(0.0002)), -7.0,
      -12.0, 1.0, 0.0});
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  EXPECT_THROW(continue_branch(asym, EtaRange{-13.0, -11.0}, sc), ParameterError);
  EXPECT_THROW(continue_branch(asym, EtaRange{-11.0, -10.0}, StepControl{}), ParameterError);
}

TEST(Folds, SymmetricFamilyAtEachSigma) {
  const double expect[3] = {-8.324, -16.648, -38.775};
  const double tol[3] = {0.01, 0.05, 0.1};
  for (int i = 0; i < 3; ++i) {
    const double sigma = 1.0 + i;
    StepControl sc;
    sc.initial_direction = 1;
    const Branch b = continue_branch(family_solution(0.45, sigma, {2, 2, 2}), EtaRange{-60.0, 20.0}, sc);
    const auto folds = detect_folds(b);
    ASSERT_EQ(folds.size(), 1u) << sigma;
    EXPECT_NEAR(folds[0].eta_c, expect[i], tol[i]);
    EXPECT_EQ(folds[0].kind, EventKind::fold);
    EXPECT_LE(folds[0].min_singular_value, 1e-6 * median_singular_value(b));
    if (i == 0) {
      EXPECT_NEAR(folds[0].emanating_branch_seed.a(0) * folds[0].emanating_branch_seed.a(0), 0.405, 2e-3);
    }
  }
}

TEST(Folds, ExactlyTwoOnSymmetricFamilies) {
  std::vector<double> etas;
  for (const SignPattern fam : {SignPattern{2, 2, 2}, SignPattern{1, 1, 2}}) {
    const Branch b = outer_family_branch(1.0, fam, -20.0, 20.0);
    for (const auto& e : detect_folds(b)) etas.push_back(e.eta_c);
  }
  ASSERT_EQ(etas.size(), 2u);
  std::sort(etas.begin(), etas.end());
  EXPECT_NEAR(etas[0], -8.324, 0.01);
  EXPECT_NEAR(etas[1], 8.324, 0.01);
}

TEST(Folds, NoneOnMonotoneBranch) {
  const Branch b = continue_branch(linear_mode(4, 1), EtaRange{-1.0, 0.0}, StepControl{});
  EXPECT_TRUE(detect_folds(b).empty());
  Branch tiny;
  tiny.points = {b.points[0], b.points[1]};
  EXPECT_THROW(detect_folds(tiny), ParameterError);
}

TEST(Pitchfork, TwoWellAtMinusTwo) {
  const BifurcationTableRow row = ground_state_bifurcation(2, 1.0);
  EXPECT_NEAR(row.eta_bif, -2.0, 1e-3);
  EXPECT_EQ(row.classification, Classification::supercritical);
}

TEST(Pitchfork, EventIsSingularAndSwitchesBranch) {
  StepControl sc;
  sc.enforce_mirror_symmetry = true;
  const Branch b = continue_branch(linear_mode(4, 1), EtaRange{-3.0, 0.0}, sc, "ground");
  const auto events = detect_pitchfork_and_classify(b, 1.0);
  ASSERT_EQ(events.size(), 1u);
  const BifurcationEvent& e = events[0];
  EXPECT_EQ(e.kind, EventKind::pitchfork);
  EXPECT_NEAR(e.eta_c, -2.29, 0.05);
  EXPECT_LE(e.min_singular_value, 1e-6 * median_singular_value(b));
  const AmplitudeSolution& s = e.emanating_branch_seed;
  EXPECT_EQ(mirror_parity(s.a, 1e-4), 0);
  EXPECT_LE(stationary_residual(s.a, s.omega, s.eta, 1.0).max_abs(), 1e-10);
  // Supercritical: the asymmetric branch lives below eta_c.
  EXPECT_LT(s.eta, e.eta_c);
  EXPECT_EQ(e.classification, Classification::supercritical);
}

TEST(Pitchfork, RequiresSymmetricBranch) {
  const AmplitudeSolution asym = newton_solve(AmplitudeSolution{
      Eigen::Vector4d(std::sqrt(0.502), std::sqrt(0.487), std::sqrt(0.011), std::sqrt(0.0002)), -7.0,
      -12.0, 1.0, 0.0});
  const Branch b = continue_branch(asym, EtaRange{-12.5, -12.0}, StepControl{});
  EXPECT_THROW(detect_pitchfork_and_classify(b, 1.0), ParameterError);
}

TEST(BifurcationTable, EvenN) {
  const double expect[4] = {-2.00, -2.29, -2.37, -2.33};
  const double tol[4] = {0.02, 0.05, 0.05, 0.05};
  for (int i = 0; i < 4; ++i) {
    const BifurcationTableRow row = ground_state_bifurcation(2 * (i + 1), 1.0);
    EXPECT_NEAR(row.eta_bif, expect[i], tol[i]) << row.n;
    EXPECT_EQ(row.classification, Classification::supercritical) << row.n;
  }
}

TEST(BifurcationTable, ThresholdBracketedBySigma) {
  // (3 + sqrt 3) / 2 ~ 2.366 separates the two regimes.
  EXPECT_EQ(ground_state_bifurcation(4, 2.0).classification, Classification::supercritical);
  EXPECT_EQ(ground_state_bifurcation(4, 3.0).classification, Classification::subcritical);
  EXPECT_EQ(ground_state_bifurcation(4, 4.0).classification, Classification::subcritical);
}

TEST(Asymptotics, TableLocalizedRows) {
  const LocalizedState edge = asymptotic_localized_seed(-12.0, 1.0, 4, 1);
  EXPECT_NEAR(edge.solution.a(0) * edge.solution.a(0), 0.993, 1e-3);
  EXPECT_NEAR(edge.solution.omega, -11.999, 2e-3);
  const LocalizedState inner = asymptotic_localized_seed(-12.0, 1.0, 4, 3);
  const Eigen::VectorXd q = inner.solution.q();
  EXPECT_NEAR(q(0), 0.0, 1e-3);
  EXPECT_NEAR(q(1), 0.007, 1e-3);
  EXPECT_NEAR(q(2), 0.986, 1e-3);
  EXPECT_NEAR(q(3), 0.007, 1e-3);
  EXPECT_NEAR(inner.solution.omega, -12.000, 2e-3);
}

TEST(Asymptotics, DeepRegimeSigmaTwo) {
  const LocalizedState s = asymptotic_localized_seed(-1000.0, 2.0, 4, 1);
  EXPECT_NEAR(s.report.s1_measured, -1.0, 0.01);
  EXPECT_NEAR(s.report.gamma_measured, -1.0, 0.01);
}

TEST(Asymptotics, DeviationsDecreaseMonotonically) {
  for (double sigma : {1.0, 2.0})
    for (int site : {1, 2}) {
      double prev_s = INFINITY, prev_g = INFINITY;
      for (double eta : {-50.0, -100.0, -200.0, -400.0}) {
        const AsymptoticReport r = asymptotic_localized_seed(eta, sigma, 4, site).report;
        const double ds = std::abs(r.s1_measured - r.s1_expected);
        const double dg = std::abs(r.gamma_measured - r.gamma_expected);
        EXPECT_LT(ds, prev_s) << sigma << " " << site << " " << eta;
        EXPECT_LT(dg, prev_g) << sigma << " " << site << " " << eta;
        prev_s = ds;
        prev_g = dg;
      }
    }
}

TEST(Asymptotics, LocalizedOnRequestedSite) {
  for (int n : {2, 4, 5})
    for (int site = 1; site <= n; ++site) {
      const LocalizedState s = asymptotic_localized_seed(-12.0, 1.0, n, site);
      Eigen::Index arg = 0;
      s.solution.q().maxCoeff(&arg);
      EXPECT_EQ(arg, site - 1);
      EXPECT_GE(s.report.q_site, s.report.localization_bound);
      // End sites satisfy the sharper single-neighbour bound.
      if (site == 1 || site == n) {
        EXPECT_GE(s.report.q_site, 1.0 - 2.0 / 144.0);
      }
    }
}

TEST(Asymptotics, RejectsShallowEta) {
  EXPECT_THROW(asymptotic_localized_seed(-5.0, 1.0, 4, 1), ParameterError);
  EXPECT_THROW(asymptotic_localized_seed(-12.0, 1.0, 4, 5), ParameterError);
}
