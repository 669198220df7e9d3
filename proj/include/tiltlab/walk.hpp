#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "tiltlab/common.hpp"
#include "tiltlab/linalg.hpp"
#include "tiltlab/potential.hpp"
#include "tiltlab/rng.hpp"

namespace tl {

// Skeleton Z_0, Z_1, ... with holding times; the walk sits at Z_k during
// [t0 + tau_k, t0 + tau_{k+1}). The last hold may be cut at the horizon.
struct TrajectorySegment {
  int d = 3;
  double t0 = 0.0;
  std::vector<int> xs;  // d coordinates per skeleton site
  std::vector<double> holds;

  std::size_t size() const { return holds.size(); }
  const int* at(std::size_t k) const { return xs.data() + k * d; }
  Point site(std::size_t k) const { return Point(at(k), at(k) + d); }
  void push(const int* x, double hold) {
    xs.insert(xs.end(), x, x + d);
    holds.push_back(hold);
  }
  double duration() const;
  double end_time() const { return t0 + duration(); }
  // site occupied at absolute time t (right-continuous)
  Point at_time(double t) const;
  // skeleton steps are nearest-neighbour, holds positive
  bool valid() const;
  // SiteSet-style text: "d W count" header, then d integers and the hold
  void write(std::ostream& os) const;
  static TrajectorySegment read(std::istream& is);
};

// The confined walk on U^N: jumps x -> y at rate f(y)/(2d f(x)).
class ConfinedWalkModel {
 public:
  explicit ConfinedWalkModel(std::shared_ptr<const TiltProfile> prof);

  const TiltProfile& profile() const { return *prof_; }
  std::shared_ptr<const TiltProfile> profile_ptr() const { return prof_; }
  std::size_t n() const { return prof_->n(); }
  int d() const { return prof_->d(); }
  // neighbour j of local site i, -1 outside U^N
  int nbr(std::size_t i, int j) const { return nbr_[i * 2 * d() + j]; }
  double rate(std::size_t i) const { return rate_[i]; }
  double pi(std::size_t i) const { return prof_->f[i] * prof_->f[i]; }
  int origin() const { return origin_; }
  // pick the neighbour slot for a jump from i given uniform u in [0,1)
  int jump(std::size_t i, double u) const;

  SpMat generator() const;  // L~, rows sum to zero
  // S = F L~ F^{-1} with F = diag(f): (1/2d) adjacency on U^N - diag(rate),
  // symmetric with S f = 0
  SpMat symmetrized() const;
  double edge_weight(std::size_t i, int j) const;  // f(x) f(y) / 2d
  // sum over edges W(e) (g(x) - g(y))^2
  double dirichlet(const Vec& g) const;

  struct Balance {
    double max_row_sum = 0;    // |sum_y L~_xy|
    double max_imbalance = 0;  // |pi(x) L~_xy - pi(y) L~_yx| / pi(x) L~_xy
    double max_weight_err = 0; // |pi(x) L~_xy - f(x) f(y)/2d| relative
  };
  Balance detailed_balance() const;

 private:
  std::shared_ptr<const TiltProfile> prof_;
  std::vector<int> nbr_;
  std::vector<double> rate_, cum_;
  int origin_ = -1;
};

// One holding interval of a simulated path: site coordinates, absolute start
// time and length (the last one is cut at the horizon).
using HoldVisitor = std::function<void(const int* x, double start, double len)>;

TrajectorySegment simulate_srw(const Point& x0, double horizon, Rng& rng);
TrajectorySegment simulate_confined(const ConfinedWalkModel& m, const Point& x0, double horizon, Rng& rng);
// confined up to T_N, simple random walk afterwards
TrajectorySegment simulate_tilted(const ConfinedWalkModel& m, double horizon, Rng& rng, const Point& x0 = {});

// Streaming forms, no path stored. Each returns the final site.
Point run_srw(const Point& x0, double t0, double t1, Rng& rng, const HoldVisitor& visit);
int run_confined(const ConfinedWalkModel& m, int i0, double t0, double t1, Rng& rng,
                 const std::function<void(int i, double start, double len)>& visit);

// M_T = f(X_T)/f(x) exp(int_0^T v(X_s) ds) along an SRW segment; 0 once the
// path has left U^N
double radon_nikodym(const ConfinedWalkModel& m, const TrajectorySegment& seg, double T);

// exact E_x[M_T] from the Feynman-Kac semigroup e^{T S} applied to f
double feynman_kac_mean(const ConfinedWalkModel& m, const Point& x, double T);

struct EntropyReport {
  Estimate I, II, III, H;
  double split = 0;            // tstar clamped to [0, T_N]
  double int_v_dpi = 0;        // sum v pi, exact
  Estimate II_rate;            // II / (T_N - split)
  double bound_main = 0;       // u(1+eps) E(h_N, h_N)
  double log_f_ratio = 0;      // log(max f / min f)
  long III_violations = 0;     // samples with |III| > log_f_ratio
};
EntropyReport relative_entropy_estimate(const ConfinedWalkModel& m, long n_samples, Rng& rng);

// p exp(-(H + 1/e)/p)
double entropy_lower_bound(double p_tilt, double entropy);

// E_SRW[M_T Phi] against E_confined[Phi], Phi = time spent in B_inf(0, r)
// during [0, T]
struct ChangeOfMeasure {
  Estimate srw_weighted, confined, srw_mean_M;
};
ChangeOfMeasure change_of_measure_check(const ConfinedWalkModel& m, double T, int box_radius, long n, Rng& rng);

// Monte Carlo E_x[M_t] at several times from the same SRW paths
std::vector<Estimate> martingale_means(const ConfinedWalkModel& m, const Point& x,
                                       const std::vector<double>& times, long n, Rng& rng);

}  // namespace tl
