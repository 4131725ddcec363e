#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nmode {

/// A stationary state in real signed-amplitude form: d_k = a_k exp(-i omega t),
/// scaled frequency Omega = -(lambda_D + hbar omega) / beta.
struct AmplitudeSolution {
  Eigen::VectorXd a;
  double omega = 0.0;
  double eta = 0.0;
  double sigma = 1.0;
  double residual_norm = 0.0;

  int n() const { return static_cast<int>(a.size()); }
  Eigen::VectorXd q() const { return a.array().square().matrix(); }
};

/// Phase-difference indices of the four-well family: cos(theta_{k+1}-theta_k)
/// equals (-1)^j, (-1)^l, (-1)^m for k = 1, 2, 3.
struct SignPattern {
  int j = 2;
  int l = 2;
  int m = 2;
};

enum class EventKind { fold, pitchfork };
enum class Classification { supercritical, subcritical, none };

inline const char* to_string(EventKind k) { return k == EventKind::fold ? "fold" : "pitchfork"; }

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::supercritical: return "supercritical";
    case Classification::subcritical: return "subcritical";
    default: return "none";
  }
}

struct BifurcationEvent {
  EventKind kind = EventKind::fold;
  double eta_c = 0.0;
  double omega_c = 0.0;
  Classification classification = Classification::none;
  /// For folds: the state at the fold. For pitchforks: a point on the
  /// emanating asymmetric branch.
  AmplitudeSolution emanating_branch_seed;
  /// Smallest singular value of the bordered Jacobian at eta_c.
  double min_singular_value = 0.0;
  std::string family_label;
};

struct BranchPoint {
  double eta = 0.0;
  double omega = 0.0;
  Eigen::VectorXd a;
  double min_singular_value = 0.0;
  double arclength = 0.0;
};

struct Branch {
  std::vector<BranchPoint> points;
  std::vector<BifurcationEvent> events;
  std::string family_label;
  double sigma = 1.0;
  /// Empty when the branch ended normally (range exit or point budget).
  std::string truncation_reason;
};

}  // namespace nmode
