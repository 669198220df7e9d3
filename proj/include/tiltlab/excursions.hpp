#pragma once

#include <string>
#include <vector>

#include "tiltlab/hitting.hpp"
#include "tiltlab/qsd.hpp"
#include "tiltlab/walk.hpp"

namespace tl {

// R_i: entrance times into A1 after V_{i-1}; V_i: first time after R_i at
// which the walk has spent tbar consecutive time outside A2. The last
// excursion may be unfinished (V has one entry less than R).
struct ExcursionDecomposition {
  std::vector<double> R, V;
  std::vector<std::size_t> L;            // hold index in which V_i falls
  std::vector<std::vector<int>> traces;  // positions in A1.ids() visited in [R_i, V_i)
  std::size_t size() const { return R.size(); }
  bool complete() const { return V.size() == R.size(); }
};

// Streaming form. Holds are fed in time order as (box id of the site, start,
// length); id -1 means a site off the box (outside A2).
class ExcursionScanner {
 public:
  ExcursionScanner(const MesoscopicBoxes& b, double tbar);
  void feed(std::int64_t id, double start, double len);
  const ExcursionDecomposition& result() const { return out_; }
  bool inside() const { return open_; }
  int a1_pos(std::int64_t id) const { return id < 0 ? -1 : a1_[id]; }
  void reset();

 private:
  double tbar_;
  std::vector<int> a1_;          // box id -> position in A1 or -1
  std::vector<std::uint8_t> a2_;
  std::vector<std::uint32_t> seen_;
  std::uint32_t stamp_ = 0;
  ExcursionDecomposition out_;
  bool open_ = false;
  double out_since_ = -1;  // start of the current stretch outside A2, -1 inside
  std::size_t holds_ = 0;
};

ExcursionDecomposition decompose(const TrajectorySegment& traj, const MesoscopicBoxes& b, double tbar);

enum class ExcursionKind { kappa1, kappa2, kappa2prime };
std::string kind_name(ExcursionKind k);

struct ExcursionProcess {
  ExcursionKind kind = ExcursionKind::kappa2;
  double intensity = 0;
  long count = 0;
  std::vector<int> starts;               // local U^N index
  std::vector<std::vector<int>> ranges;  // positions in A1 per excursion
  std::vector<std::uint8_t> hit;         // trace over A1.ids()
  bool vacant_on(const std::vector<int>& Q) const;
};

// Excursions of the confined walk around one set of boxes. Long ones stop at
// V_1, short ones at the exit time of A2. kappa1 starts from the QSD on
// U^N \ A2 and is recorded from its entrance into A1; kappa2 / kappa2prime
// start from e_A1 / cap(A1).
class ExcursionSampler {
 public:
  ExcursionSampler(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double tbar = -1);

  const MesoscopicBoxes& boxes() const { return b_; }
  double tbar() const { return tbar_; }
  double cap() const { return cap_; }
  const std::vector<double>& e_tilde() const { return et_; }  // over A1.ids()
  const QuasiStationary& qsd() const { return q_; }
  const KilledOperator& killed() const { return K_; }
  const std::vector<int>& a1_local() const { return a1_local_; }  // A1 position -> local index

  struct Excursion {
    int start = -1;  // local index where the recording began
    std::vector<int> range_long, range_short;
    double length = 0;  // V_1 minus the start of the recording
  };
  Excursion run(int start, Rng& rng, bool wait_for_A1) const;

  ExcursionProcess sample(ExcursionKind kind, double intensity, Rng& rng) const;
  // kappa2 and kappa2prime driven by the same excursions (short = prefix)
  std::pair<ExcursionProcess, ExcursionProcess> sample_long_short(double intensity, Rng& rng) const;

 private:
  ExcursionProcess fill(ExcursionKind kind, double intensity, long count) const;
  const ConfinedWalkModel& m_;
  MesoscopicBoxes b_;
  double tbar_;
  double cap_ = 0;
  std::vector<double> et_, et_cum_, sigma_cum_;
  std::vector<int> a1_local_, a1_pos_;  // local index -> A1 position or -1
  std::vector<std::uint8_t> in_a2_;
  KilledOperator K_;
  QuasiStationary q_;
};

// J = floor((1 + eps/2) u cap(A1)); throws when J = 0
int excursion_target(double u, double eps, double capA1);

struct CountTail {
  int J = 0;
  double T = 0;
  Estimate tail;                // P[R_J >= T_N] from the origin
  std::vector<long> histogram;  // number of entrances R_i < T_N
  MeanAcc count;
  MeanAcc cycle;                // R_{i+1} - R_i
  double renewal_proxy = 0;     // T_N / mean cycle
};
CountTail excursion_count_tail(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double u, double eps, long n_runs,
                               Rng& rng, double tbar = -1);

struct QFamily {
  std::vector<std::string> names;
  std::vector<std::vector<int>> sets;  // positions in A1.ids()
};
// empty set, the inner boundary of A1 site by site, x0, three random 2-boxes
QFamily default_q_family(const MesoscopicBoxes& b, Rng& rng);

struct DominationReport {
  int J = 0;
  double eta1 = 0, eta2 = 0, u_ri = 0;
  QFamily Q;
  std::vector<std::string> laws;              // in the domination order
  std::vector<std::vector<Estimate>> vacancy;  // [law][Q]
  std::vector<std::string> violations;         // "law_a<law_b:Q" beyond 3 combined SE
  long prefix_violations = 0;                  // paths with vacancy(long) > vacancy(short)
  bool holds = true;
};
// laws: true excursions first_index..J from the origin, I1 (kappa1 at
// (1+eps/3) u cap), I2 and I2' ((1+eps/4) u cap), interlacements at u(1+eps/8)
DominationReport domination_diagnostics(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double u, double eps,
                                        long n_runs, Rng& rng, int first_index = 2, double tbar = -1,
                                        const QFamily* family = nullptr);

// Tilted walk from the origin: confined up to T_N, then simple random walk
// until it leaves B_inf(0, window). One pass gives the disconnection of K_N
// from the window boundary and, per x0, the event x0 <-> inner boundary of
// A1(x0) inside A1(x0), both for the whole path and for the part in [R_2, T_N).
struct TiltedEvents {
  int window = 0;
  Estimate disconnect;
  std::vector<Point> x0;
  std::vector<Estimate> connect, connect_restricted;
  long pathwise_violations = 0;  // connected on the whole path but not on the restricted part
};
TiltedEvents tilted_events(const ConfinedWalkModel& m, const std::vector<MesoscopicBoxes>& boxes, int window,
                           long n_runs, Rng& rng, double tbar = -1);
TiltedEvents local_blocking_probability(const ConfinedWalkModel& m, const MesoscopicBoxes& b, int window, long n_runs,
                                        Rng& rng);

// simple random walk from the origin until it leaves B_inf(0, window):
// P[K_N not joined to the window boundary by a vacant path]
Estimate srw_disconnection_mc(const CompactShape& K, int N, int window, long n_runs, Rng& rng);

struct Khasminskii {
  std::vector<double> sup_m;  // n = 0..n_max
  std::vector<double> bound;  // n! (sup m_1)^n
  bool holds = true;
};
// m_n = n (-L^D)^{-1} m_{n-1}, m_0 = 1
Khasminskii khasminskii_check(const KilledOperator& K, int n_max);
Khasminskii khasminskii_check(const ConfinedWalkModel& m, const SiteSet& target, int n_max);

}  // namespace tl
