#pragma once

#include <vector>

#include "tiltlab/hitting.hpp"
#include "tiltlab/linalg.hpp"
#include "tiltlab/walk.hpp"

namespace tl {

// L~ restricted to D (rows and columns of D); jumps into the removed set are
// killed, rows are sub-Markovian. S is the f-conjugate, symmetric.
struct KilledOperator {
  std::vector<int> sites;  // local U^N index of each D site
  std::vector<int> pos;    // local U^N index -> D index or -1
  SpMat L, S;
  Vec f;   // f on D
  Vec pi;  // pi^D: pi restricted to D, renormalised
  std::vector<int> rim;  // D indices with a neighbour in the removed set
  std::size_t n() const { return sites.size(); }
};
KilledOperator killed_operator(const ConfinedWalkModel& m, const SiteSet& removed);
// D = U^N \ A2
KilledOperator killed_operator(const ConfinedWalkModel& m, const MesoscopicBoxes& b);

struct QuasiStationary {
  double lambda1 = 0;
  double lambda2 = 0;              // next eigenvalue of -L^D
  std::vector<double> spectrum;    // first k eigenvalues, ascending
  Vec f1;                          // > 0, sum pi^D f1^2 = 1
  Vec sigma;                       // sums to 1
  double residual = 0;             // |(-L^D) f1 - lambda1 f1| in l2(pi^D)
};
// k >= 2 eigenvalues; throws when D is disconnected
QuasiStationary principal_eigenpair(const KilledOperator& K, int k = 2, std::size_t dense_below = 1500);

// E~_sigma[H_removed], from a linear solve
double qsd_exit_time(const KilledOperator& K, const Vec& sigma);

struct QsdConvergence {
  std::vector<double> times, tv;  // max over the start set
  std::size_t starts = 0;         // all of D when exact, else a fixed sample
  bool all_starts = false;
  bool monotone = true;
};
// max_x TV(P~_x[X_t = . | H > t], sigma). Every x in D when |D| <= all_below,
// otherwise `sample` starts (the sites next to the removed set first).
QsdConvergence qsd_convergence_check(const KilledOperator& K, const QuasiStationary& q, std::vector<double> times,
                                     std::size_t all_below = 1500, std::size_t sample = 48);

struct QsdHitting {
  std::vector<Point> sites;        // inner boundary of A1
  std::vector<double> p;           // P~_sigma[X_{H_A1} = x]
  std::vector<double> e_tilde;     // e_A1(x) / cap(A1)
  double total = 0;                // sum of p
  double max_dev = 0;              // max |p / e_tilde - 1|
  double fitted_c = 0;             // max_dev = N^{-c}
};
QsdHitting hitting_distribution_from_qsd(const ConfinedWalkModel& m, const MesoscopicBoxes& b,
                                         const KilledOperator& K, const QuasiStationary& q);

// pi(x) P~_x[X_t = y, H > t] against the same with x and y swapped, from the
// unsymmetrised killed generator; max relative violation over the pairs
double reversibility_exchange_check(const KilledOperator& K, const std::vector<std::pair<int, int>>& pairs, double t);

struct SigmaComparison {
  double C = 0;       // min pi^D / max pi^D
  double worst = 0;   // min over pairs of sigma(y) / (C P_y[H_x < H_removed] sigma(x)); >= 1 when it holds
  bool holds = true;
};
SigmaComparison sigma_comparison_check(const ConfinedWalkModel& m, const KilledOperator& K, const QuasiStationary& q,
                                       const std::vector<std::pair<int, int>>& pairs);

}  // namespace tl
