#pragma once

#include <vector>

#include "tiltlab/linalg.hpp"
#include "tiltlab/walk.hpp"

namespace tl {

struct GapResult {
  double lambda1 = 0.0;  // <f, -S f>, should vanish
  double lambda2 = 0.0;
  double residual = 0.0;  // |(-S) v - lambda2 v| for the returned vector
  int iterations = 0;
  bool dense = false;
  Vec vec;  // eigenvector of -S (symmetric form), orthogonal to the ground state
};

// Second eigenvalue of a symmetric positive semidefinite A whose kernel is
// spanned by `ground`. Dense below `dense_below` rows, shift-invert Lanczos
// on a sparse Cholesky factor above.
GapResult symmetric_gap(const SpMat& A, const Vec& ground, std::size_t dense_below = 1500);

// lambda_2 of -L~ through -S = -F L~ F^{-1}; refuses above `cap` sites
GapResult exact_spectral_gap(const ConfinedWalkModel& m, std::size_t cap = 200000);

// gamma(x,y): first the coordinates with |x_i| >= |y_i| are moved to y_i in
// increasing i, then the remaining ones. Each move is a straight run.
struct CanonicalPathPlan {
  int d = 3;
  std::vector<Point> path(const Point& x, const Point& y) const;
  static int length(const Point& x, const Point& y);
};

struct Congestion {
  double A = 0.0;
  double bound = 0.0;  // 1/A
  Point edge_lo;       // the maximising edge {edge_lo, edge_lo + e_axis}
  int edge_axis = 0;
  double max_pairs = 0.0;   // most ordered pairs routed through one edge
  double mean_pairs = 0.0;  // average over edges
  std::size_t edges = 0;
  // per edge (lo site id in the profile box, axis) -> pair count, for sampling
  std::vector<std::vector<double>> pairs_through;  // [axis][box id]
};
// Sum over ordered pairs x != y of U^N; edges unordered with W = f(x)f(y)/2d.
Congestion congestion_bound(const ConfinedWalkModel& m, const CanonicalPathPlan& plan, bool keep_counts = false);

struct RelaxationReport {
  double lambda2 = 0.0;
  std::vector<double> times, deviation, bound;
  bool holds = true;     // deviation <= bound at every time
  bool monotone = true;  // deviation non-increasing in t
};
// max_{x,y} |P_x[X_t = y] - pi(y)| against max sqrt(pi(y)/pi(x)) e^{-lambda t},
// from a dense eigendecomposition
RelaxationReport relaxation_check(const ConfinedWalkModel& m, const std::vector<double>& times,
                                  std::size_t cap = 5000);

}  // namespace tl
