#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "tiltlab/lattice.hpp"

namespace tl {

// 1 inside the inner radius, (r^{2-d} - R^{2-d})/(rho^{2-d} - R^{2-d}) on the
// annulus, 0 outside B_R
struct RadialPotential {
  double inner = 0.0;
  double R = 0.0;
  int d = 3;
  static RadialPotential w1(double delta, double R, int d) { return {delta, R, d}; }
  static RadialPotential w2(double R, int d) { return {R / 50.0, R, d}; }
  double operator()(double r) const;
};

// C^2, non-decreasing, concave; identity below 1/2 and 1 above 1 + eta/2.
// Between the two, psi' stays 1 up to a knot and then drops to 0 along a
// reversed cubic smoothstep whose width is fixed by psi(1 + eta/2) = 1.
class SmoothingPsi {
 public:
  explicit SmoothingPsi(double eta);
  double eta() const { return eta_; }
  double operator()(double z) const;
  double d1(double z) const;
  double d2(double z) const;

 private:
  double eta_, len_, c_, w_;
};

struct GridPotential;  // finite-difference continuum solve, non-ball K

class HTilde {
 public:
  HTilde(CompactShape K, double delta, double eta, int R, int d, std::shared_ptr<const GridPotential> grid);
  // relative equilibrium potential of K^{2delta} in B_(R) (before smoothing)
  double h(const std::vector<double>& z) const;
  double operator()(const std::vector<double>& z) const { return psi_((1.0 + eta_) * h(z)); }
  double radial_h(double r) const;  // only for centred balls
  bool radial() const { return radial_; }
  double inner_radius() const { return a_; }
  const CompactShape& K() const { return K_; }
  double delta() const { return delta_; }
  int R() const { return R_; }
  int d() const { return d_; }

 private:
  CompactShape K_, K2_;
  double delta_, eta_;
  int R_, d_;
  bool radial_ = false;
  double a_ = 0.0;
  SmoothingPsi psi_;
  std::shared_ptr<const GridPotential> grid_;
};

// grid_step <= 0 picks R/32
HTilde build_h_tilde(const CompactShape& K, double delta, double eta, int R, int d, double grid_step = 0.0);

struct SandwichReport {
  double c_lower = 0.0;  // min h~/w1 where w1 > 0
  double c_upper = 0.0;  // max h~/w2 where h~ > 0
  bool radially_monotone = true;
  int samples = 0;
};
SandwichReport h_tilde_sandwich(const HTilde& ht, int samples = 2000);

struct TiltParams {
  int d = 3;
  CompactShape K = CompactShape::point({0, 0, 0});
  double delta = 0.7, eta = 0.9, eps = 0.5;
  int R = 3;
  int N = 4;
  double u = 10.0;
  double tstar = -1.0;     // <0: N^2 log^2 N
  double grid_step = 0.0;  // non-ball K only
};
void validate(const TiltParams& p);

enum Region : std::uint8_t { kInner = 0, kOuter = 1, kSide = 2 };

struct TiltProfile {
  TiltParams params;
  Box box;                          // B_inf(0, NR+1)
  std::vector<std::int64_t> ids;    // U^N, sorted box ids
  std::vector<int> local;           // box id -> index into ids, -1 off U^N
  std::vector<double> hN, f, v;     // per site of U^N
  std::vector<std::uint8_t> region;  // I^N / O^N / S^N
  double norm2 = 0.0, TN = 0.0, tstar = 0.0;

  std::size_t n() const { return ids.size(); }
  int d() const { return box.d(); }
  int N() const { return params.N; }
  int index(const Point& x) const { return box.contains(x) ? local[box.id(x)] : -1; }
  double hN_at(std::int64_t id) const { return local[id] < 0 ? 0.0 : hN[local[id]]; }
  double f_at(std::int64_t id) const { return local[id] < 0 ? 0.0 : f[local[id]]; }
  SiteSet U() const { return SiteSet(box, ids); }
  SiteSet part(Region r) const;

  void save(std::ostream& os) const;
  static TiltProfile load(std::istream& is);
};

TiltProfile build_tilt_profile(const TiltParams& p);

struct VBounds {
  double max_v, min_v, max_I, max_O, max_S;
  double trivial_lower;  // -max h_N / min h_N
  double max_v_N2;
  double v_flat_max;     // max |v| over sites whose neighbourhood has h_N = 1
};
VBounds v_bounds_check(const TiltProfile& prof);

// finite-N analogues of the h_N bounds
struct HNBounds {
  double min_hN_N2;      // min over U^N of h_N * N^2
  double max_inner_N;    // max over the inner boundary of h_N * N
  double norm2_over_Nd;  // ||h_N||^2 / N^d
  double min_O_N;        // min over O^N of h_N * N
};
HNBounds hN_bounds(const TiltProfile& prof);

// ---------------------------------------------------------------- fields

// finitely supported function; must vanish on the faces of its box
struct Field {
  Box box;
  std::vector<double> v;
};
Field profile_field(const TiltProfile& prof);  // h_N on its box
double dirichlet_form(const Field& g);
double laplacian_at(const Field& g, std::int64_t id);  // (1/2d) sum g(x+e) - g(x)

struct GreenGauss {
  double lhs = 0.0, rhs = 0.0;
};
GreenGauss green_gauss_identity(const Field& h);

// ---------------------------------------------------------------- capacity

struct EquilibriumResult {
  std::vector<double> e;  // aligned with M.ids()
  double cap = 0.0;       // probabilistic route, extrapolated
  double cap_variational = 0.0;
  int window = 0;                // smallest window radius L (the others are 2L, 3L)
  double cap_L[3] = {0, 0, 0};   // raw finite-window values
  double var_L[3] = {0, 0, 0};
};

// escape probabilities with absorption outside B_inf(c, kL), k = 1,2,3, then
// extrapolated in L; outer_radius <= 0 picks max(2 r_M, 8)
EquilibriumResult equilibrium_measure(const SiteSet& M, int outer_radius = 0, bool variational = true);
double capacity(const SiteSet& M, int outer_radius = 0);

}  // namespace tl
