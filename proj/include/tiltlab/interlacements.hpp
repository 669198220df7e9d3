#pragma once

#include <vector>

#include "tiltlab/common.hpp"
#include "tiltlab/lattice.hpp"
#include "tiltlab/rng.hpp"

namespace tl {

struct InterlacementTrace {
  double u = 0;
  long count = 0;                   // number of trajectories that reached A
  std::vector<Point> starts;
  std::vector<std::uint8_t> hit;    // over A.ids(): 1 when in the trace
  std::size_t size() const;         // |trace|
  bool vacant_on(const std::vector<int>& Q) const;  // Q: positions in A.ids()
};

// Exit site of the simple random walk started at the centre of B_inf(0, s):
// probabilities over one face {x_1 = s+1, |x_2|, |x_3| <= s}, row-major in
// (x_2, x_3); the six faces are equally likely. d = 3, cached per s.
const std::vector<double>& cube_exit_face(int s);

// Trace of random interlacements in a finite A (d = 3): Poisson(u cap(A))
// forward simple random walks from e_A / cap(A). Away from A a walk jumps to
// its exit site from the largest cube (radius <= 32) that misses A, and it is
// dropped once it is farther than `kill_radius` from A.
class InterlacementSampler {
 public:
  // kill_radius <= 0 picks max(1024, 64 * radius of A); refuses below 4 * radius
  explicit InterlacementSampler(const SiteSet& A, int kill_radius = 0);
  const SiteSet& set() const { return A_; }
  double cap() const { return cap_; }
  const std::vector<double>& e_tilde() const { return et_; }
  int kill_radius() const { return R_; }

  InterlacementTrace sample(double u, Rng& rng) const;
  // one Poisson cloud at level u_max with uniform marks; trace at each level
  // keeps the trajectories with mark <= u (coupled, monotone in u)
  std::vector<InterlacementTrace> sample_levels(const std::vector<double>& us, Rng& rng) const;
  // range of one walk from A.ids()[k] marked into `hit`
  void walk(int k, Rng& rng, std::vector<std::uint8_t>& hit) const;

 private:
  SiteSet A_;
  std::vector<Point> pts_;
  int lo_[3], hi_[3], c_[3];
  std::vector<int> apos_;  // bounding box of A (row-major) -> position in A.ids() or -1
  std::vector<double> et_, cum_;
  double cap_ = 0;
  int R_ = 0, radius_ = 0;
};

struct DecayPoint {
  double u = 0;
  int N = 0;
  Estimate p;  // P[0 <-> dB_inf(0,N) in V^u]
};
struct DecayCurve {
  std::vector<DecayPoint> points;
  std::vector<double> exponent;  // per u: slope of log(-log p) in log N, NAN when undefined
  double u_proxy = NAN;          // smallest u with p decreasing in N and a positive exponent
};
// trace sampled in B_inf(0, N+1); N_grid ascending
DecayCurve connectivity_decay_curve(const std::vector<double>& u_grid, const std::vector<int>& N_grid, long n_runs,
                                    Rng& rng, int kill_radius = 0);

}  // namespace tl
