#pragma once

#include <array>
#include <vector>

#include "tiltlab/lattice.hpp"
#include "tiltlab/linalg.hpp"
#include "tiltlab/walk.hpp"

namespace tl {

// Radii of A1..A6 around x0. Without overrides a_i = floor(N^{r_i}) for
// i <= 5, bumped to stay strictly increasing and a1 >= 1, and
// a6 = max(floor(delta N / 100), a5 + 1). auto_a2 replaces a2 by the largest
// radius whose closed box still has h_N = 1 (then a3.. are re-bumped).
struct BoxRadii {
  std::array<double, 5> r = {0.10, 0.25, 0.40, 0.55, 0.70};
  std::vector<int> a;  // explicit a1..a5 or a1..a6
  bool auto_a2 = false;
};

struct MesoscopicBoxes {
  Point x0;
  std::array<int, 6> a{};
  std::array<SiteSet, 6> A;  // over the profile box
  SiteSet D;                 // U^N \ A2
  int flat_levels = 0;       // closure of A_k has h_N = 1 for k <= flat_levels
};

// Gamma^N: outer boundary of blow_up(K^{delta/2}, N)
SiteSet gamma_sites(const TiltProfile& P);
// largest a with h_N = 1 on the closure of B_inf(x0, a); -1 if none
int max_flat_radius(const TiltProfile& P, const Point& x0);
// up to `count` sites of Gamma^N with max_flat_radius >= min_flat: the
// flattest first (ties in box order), then farthest-point picks (l_inf)
std::vector<Point> spread_centers(const TiltProfile& P, int count, int min_flat = 2);
MesoscopicBoxes make_boxes(const TiltProfile& P, const Point& x0, const BoxRadii& radii = {});

// E~_x[H_target] for every site of U^N (zero on the target); one solve
Vec expected_hitting_times(const ConfinedWalkModel& m, const SiteSet& target);
double pi_average(const ConfinedWalkModel& m, const Vec& v);

// P~_x[H_one <= T_domain] for every site of U^N (one inside `domain`)
Vec harmonic_measure(const ConfinedWalkModel& m, const SiteSet& one, const SiteSet& domain);
// g = P~_x[H_A1 <= T_A2]
Vec relative_potential_g(const ConfinedWalkModel& m, const MesoscopicBoxes& b);
// max |L~ g| over A2 \ A1
double harmonic_residual(const ConfinedWalkModel& m, const MesoscopicBoxes& b, const Vec& g);

// Simple random walk, pure lattice: P_y[T_B < H~_A] for y in A (order of
// A.ids()), by a Dirichlet solve on B \ A and one step of conditioning
std::vector<double> srw_escape(const SiteSet& A, const SiteSet& B);

struct DirichletIdentity {
  double lhs = 0;          // E~(g,g), edge by edge
  double rhs = 0;          // u(1+eps)/T_N sum_{y in inner bd A1} P_y[T_A2 < H~_A1]
  double escape_sum = 0;   // the sum above
  double capA1 = 0;
  double sandwich_c = 0;   // escape_sum = (1 + N^{-c}) cap(A1)
};
// requires the closure of A2 to be flat (h_N = 1)
DirichletIdentity dirichlet_identity_check(const ConfinedWalkModel& m, const MesoscopicBoxes& b);

struct EmestChain {
  std::vector<double> e, p6, p3, p2;  // per site of the inner boundary of A1
  bool holds = true;
  double worst = 0;  // largest violation (0 when it holds)
};
EmestChain emest_chain(const MesoscopicBoxes& b);

struct Bracket {
  double Epi = 0;       // E~_pi[H_A1]
  double Egg = 0;
  double sup_fA1 = 0;   // sup over D of |f_A1|
  double min_fA1 = 0;   // over U^N
  double piD = 0;
  double lhs = 0, mid = 0, rhs = 0;
  bool holds = false;
  double capA1 = 0;
  double ratio = 0;     // 1 / (E_pi * u(1+eps) cap(A1) / T_N)
};
Bracket entrance_bracket(const ConfinedWalkModel& m, const MesoscopicBoxes& b);

struct ShortHorizon {
  double max_D_A1 = 0;   // max over D of P~_x[H_A1 < t]
  double max_A3c_A2 = 0; // max over U^N \ A3 of P~_x[H_A2 < t]
};
// exact, through the killed semigroup
ShortHorizon short_horizon_escape(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double t);
// P~_x[H_target < t] for every site of U^N
Vec hit_before(const ConfinedWalkModel& m, const SiteSet& target, double t);
Estimate hit_before_mc(const ConfinedWalkModel& m, const Point& x, const SiteSet& target, double t, long n, Rng& rng);

// one coordinate of the rate-1 walk leaves [-a+1, a-1] (reaches +-a) before t:
// exponential-martingale bound 2 exp(-theta a + (t/d)(cosh theta - 1)) at the
// optimal theta, and a Monte Carlo estimate
double doob_exit_bound(int a, double t, int d);
Estimate exit_probability_mc(int a, double t, int d, long n, Rng& rng);

}  // namespace tl
