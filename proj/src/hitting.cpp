#include "tiltlab/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tiltlab/potential.hpp"

namespace tl {

namespace {

SiteSet cube(const Box& box, const Point& c, int a) {
  std::vector<Point> pts;
  int d = box.d();
  Point x(d);
  std::vector<int> o(d, -a);
  while (true) {
    for (int k = 0; k < d; ++k) x[k] = c[k] + o[k];
    if (!box.contains(x)) throw Error("box leaves the lattice window");
    pts.push_back(x);
    int k = d - 1;
    for (; k >= 0; --k) {
      if (o[k] < a) {
        ++o[k];
        break;
      }
      o[k] = -a;
    }
    if (k < 0) break;
  }
  return SiteSet::from_points(box, pts);
}

// -S restricted to the sites with sel[i] >= 0 (sel numbers them)
SpMat restricted(const ConfinedWalkModel& m, const std::vector<int>& sel, int n) {
  int D = 2 * m.d();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(n) * (D + 1));
  for (std::size_t i = 0; i < m.n(); ++i) {
    int r = sel[i];
    if (r < 0) continue;
    t.emplace_back(r, r, m.rate(i));
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(i, j);
      if (y >= 0 && sel[y] >= 0) t.emplace_back(r, sel[y], -1.0 / D);
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// local mask over U^N of a SiteSet on the profile box
std::vector<std::uint8_t> local_mask(const TiltProfile& P, const SiteSet& s) {
  std::vector<std::uint8_t> in(P.n(), 0);
  for (auto id : s.ids()) {
    int i = id < P.box.size() ? P.local[id] : -1;
    if (i < 0) throw Error("set leaves U^N");
    in[i] = 1;
  }
  return in;
}

}  // namespace

// ---------------------------------------------------------------- boxes

SiteSet gamma_sites(const TiltProfile& P) {
  auto K = P.params.K.dilated(P.params.delta / 2);
  return blow_up(K, P.N(), P.box).boundary();
}

int max_flat_radius(const TiltProfile& P, const Point& x0) {
  if (P.d() != 3) throw Error("flat radius is implemented for d = 3");
  int best = -1;
  for (int a = 0;; ++a) {
    bool flat = true;
    Point x(P.d());
    // closure of B_inf(x0, a) is B_inf(x0, a+1) minus its corners; checking
    // the full cube is simpler and only slightly stricter
    for (int dx = -a - 1; dx <= a + 1 && flat; ++dx)
      for (int dy = -a - 1; dy <= a + 1 && flat; ++dy)
        for (int dz = -a - 1; dz <= a + 1 && flat; ++dz) {
          int far = (std::abs(dx) > a) + (std::abs(dy) > a) + (std::abs(dz) > a);
          if (far > 1) continue;
          x = {x0[0] + dx, x0[1] + dy, x0[2] + dz};
          int i = P.index(x);
          flat = i >= 0 && P.hN[i] == 1.0;
        }
    if (!flat) return best;
    best = a;
  }
}

std::vector<Point> spread_centers(const TiltProfile& P, int count, int min_flat) {
  std::vector<Point> cand;
  std::vector<int> flat;
  SiteSet gamma = gamma_sites(P);
  for (auto id : gamma.ids()) {
    Point x = P.box.point(id);
    int a = max_flat_radius(P, x);
    if (a < min_flat) continue;
    cand.push_back(x);
    flat.push_back(a);
  }
  std::vector<Point> out;
  if (cand.empty() || count < 1) return out;
  std::size_t first = std::max_element(flat.begin(), flat.end()) - flat.begin();
  out.push_back(cand[first]);
  std::vector<int> dist(cand.size(), 1 << 30);
  while (int(out.size()) < count) {
    const Point& y = out.back();
    std::size_t best = 0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      int dk = 0;
      for (int j = 0; j < P.d(); ++j) dk = std::max(dk, std::abs(cand[k][j] - y[j]));
      dist[k] = std::min(dist[k], dk);
      if (dist[k] > dist[best]) best = k;
    }
    if (dist[best] == 0) break;
    out.push_back(cand[best]);
  }
  return out;
}

MesoscopicBoxes make_boxes(const TiltProfile& P, const Point& x0, const BoxRadii& radii) {
  if (P.d() != 3) throw Error("mesoscopic boxes are implemented for d = 3");
  if (int(x0.size()) != P.d()) throw Error("x0 dimension mismatch");
  if (!gamma_sites(P).contains(x0)) throw Error("x0 not in Gamma^N");
  MesoscopicBoxes b;
  b.x0 = x0;
  double N = P.N();
  if (!radii.a.empty()) {
    if (radii.a.size() != 5 && radii.a.size() != 6) throw Error("radius override needs 5 or 6 values");
    for (std::size_t k = 0; k < radii.a.size(); ++k) b.a[k] = radii.a[k];
    if (radii.a.size() == 5) b.a[5] = std::max(int(P.params.delta * N / 100), b.a[4] + 1);
  } else {
    for (int k = 0; k < 5; ++k) {
      if (k > 0 && !(radii.r[k] > radii.r[k - 1])) throw Error("exponents must increase");
      b.a[k] = int(std::floor(std::pow(N, radii.r[k])));
      if (k == 0) b.a[0] = std::max(1, b.a[0]);
      if (k > 0) b.a[k] = std::max(b.a[k], b.a[k - 1] + 1);
    }
    b.a[5] = std::max(int(P.params.delta * N / 100), b.a[4] + 1);
  }
  if (radii.auto_a2) {
    int f = max_flat_radius(P, x0);
    if (f <= b.a[0]) throw Error("no flat room for A2 around x0");
    b.a[1] = f;
    for (int k = 2; k < 6; ++k) b.a[k] = std::max(b.a[k], b.a[k - 1] + 1);
  }
  if (b.a[0] < 0) throw Error("negative radius");
  for (int k = 1; k < 6; ++k)
    if (b.a[k] <= b.a[k - 1]) throw Error("box radii must be strictly increasing");
  for (int k = 0; k < 6; ++k) b.A[k] = cube(P.box, x0, b.a[k]);
  for (auto id : b.A[5].ids())
    if (P.local[id] < 0) throw Error("A6 leaves U^N");
  if (b.A[5].size() == P.n()) throw Error("A6 fills U^N");
  b.D = P.U().minus(b.A[1]);
  int fl = max_flat_radius(P, x0);
  b.flat_levels = 0;
  while (b.flat_levels < 6 && b.a[b.flat_levels] <= fl) ++b.flat_levels;
  return b;
}

// ---------------------------------------------------------------- solves

Vec expected_hitting_times(const ConfinedWalkModel& m, const SiteSet& target) {
  const auto& P = m.profile();
  if (target.empty()) throw Error("empty target: hitting time system is singular");
  auto in = local_mask(P, target);
  std::vector<int> sel(m.n(), -1);
  int n = 0;
  for (std::size_t i = 0; i < m.n(); ++i)
    if (!in[i]) sel[i] = n++;
  Vec out = Vec::Zero(m.n());
  if (n == 0) return out;
  // (-L~) h = 1  <=>  (-S)(f h) = f
  Vec b(n);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (sel[i] >= 0) b[sel[i]] = P.f[i];
  SpdSolver chol(restricted(m, sel, n));
  Vec y = chol.solve(b);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (sel[i] >= 0) out[i] = y[sel[i]] / P.f[i];
  return out;
}

double pi_average(const ConfinedWalkModel& m, const Vec& v) {
  double s = 0;
  for (std::size_t i = 0; i < m.n(); ++i) s += m.pi(i) * v[i];
  return s;
}

Vec harmonic_measure(const ConfinedWalkModel& m, const SiteSet& one, const SiteSet& domain) {
  const auto& P = m.profile();
  auto in1 = local_mask(P, one), inD = local_mask(P, domain);
  int D = 2 * m.d();
  std::vector<int> sel(m.n(), -1);
  int n = 0;
  for (std::size_t i = 0; i < m.n(); ++i)
    if (inD[i] && !in1[i]) sel[i] = n++;
  Vec out = Vec::Zero(m.n());
  for (std::size_t i = 0; i < m.n(); ++i)
    if (in1[i]) out[i] = 1.0;
  if (n == 0) return out;
  Vec b = Vec::Zero(n);
  for (std::size_t i = 0; i < m.n(); ++i) {
    if (sel[i] < 0) continue;
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(i, j);
      if (y >= 0 && in1[y]) b[sel[i]] += P.f[y] / D;
    }
  }
  SpdSolver chol(restricted(m, sel, n));
  Vec y = chol.solve(b);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (sel[i] >= 0) out[i] = y[sel[i]] / P.f[i];
  return out;
}

Vec relative_potential_g(const ConfinedWalkModel& m, const MesoscopicBoxes& b) {
  return harmonic_measure(m, b.A[0], b.A[1]);
}

double harmonic_residual(const ConfinedWalkModel& m, const MesoscopicBoxes& b, const Vec& g) {
  const auto& P = m.profile();
  double worst = 0;
  const auto& f = P.f;
  int D = 2 * m.d();
  auto shell = b.A[1].minus(b.A[0]);
  for (auto id : shell.ids()) {
    int i = P.local[id];
    double s = 0;
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(i, j);
      double gy = y >= 0 ? g[y] : 0.0;
      double fy = y >= 0 ? f[y] : 0.0;
      s += fy / (D * f[i]) * (gy - g[i]);
    }
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

std::vector<double> srw_escape(const SiteSet& A, const SiteSet& B) {
  if (!A.subset_of(B)) throw Error("A must lie inside B");
  if (A.size() == B.size()) throw Error("degenerate boxes: A equals B");
  const Box& box = A.box();
  int d = box.d(), D = 2 * d;
  auto inA = A.mask(), inB = B.mask();
  std::vector<int> sel(box.size(), -1);
  int n = 0;
  for (auto id : B.ids()) {
    if (!box.interior(id)) throw Error("B touches the lattice window");
    if (!inA[id]) sel[id] = n++;
  }
  std::vector<Eigen::Triplet<double>> t;
  Vec rhs = Vec::Zero(n);
  for (auto id : B.ids()) {
    int r = sel[id];
    if (r < 0) continue;
    t.emplace_back(r, r, 1.0);
    for (int j = 0; j < D; ++j) {
      auto y = box.nbr(id, j);
      if (sel[y] >= 0) t.emplace_back(r, sel[y], -1.0 / D);
      else if (inA[y]) rhs[r] += 1.0 / D;
    }
  }
  SpMat M(n, n);
  M.setFromTriplets(t.begin(), t.end());
  SpdSolver chol(M);
  Vec phi = chol.solve(rhs);  // P_x[H_A < T_B]
  std::vector<double> out;
  out.reserve(A.size());
  for (auto id : A.ids()) {
    double e = 0;
    for (int j = 0; j < D; ++j) {
      auto y = box.nbr(id, j);
      double p = inA[y] ? 1.0 : sel[y] >= 0 ? phi[sel[y]] : 0.0;
      e += (1.0 - p) / D;
    }
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------- identities

DirichletIdentity dirichlet_identity_check(const ConfinedWalkModel& m, const MesoscopicBoxes& b) {
  const auto& P = m.profile();
  if (b.a[0] >= b.a[1]) throw Error("degenerate boxes: A1 must be strictly inside A2");
  if (b.flat_levels < 2) throw Error("h_N is not constant on the closure of A2");
  DirichletIdentity r;
  Vec g = relative_potential_g(m, b);
  r.lhs = m.dirichlet(g);
  auto esc = srw_escape(b.A[0], b.A[1]);
  for (double e : esc) r.escape_sum += e;
  r.rhs = P.params.u * (1 + P.params.eps) / P.TN * r.escape_sum;
  r.capA1 = capacity(b.A[0]);
  double ex = r.escape_sum / r.capA1 - 1;
  r.sandwich_c = ex > 0 ? -std::log(ex) / std::log(double(P.N())) : INFINITY;
  return r;
}

EmestChain emest_chain(const MesoscopicBoxes& b) {
  EmestChain c;
  auto eq = equilibrium_measure(b.A[0], 0, false);
  auto p6 = srw_escape(b.A[0], b.A[5]);
  auto p3 = srw_escape(b.A[0], b.A[2]);
  auto p2 = srw_escape(b.A[0], b.A[1]);
  auto bd = b.A[0].inner_boundary();
  const auto& ids = b.A[0].ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!bd.contains(ids[k])) continue;
    c.e.push_back(eq.e[k]);
    c.p6.push_back(p6[k]);
    c.p3.push_back(p3[k]);
    c.p2.push_back(p2[k]);
    double v = std::max({eq.e[k] - p6[k], p6[k] - p3[k], p3[k] - p2[k], 0.0});
    c.worst = std::max(c.worst, v);
  }
  c.holds = c.worst == 0.0;
  return c;
}

Bracket entrance_bracket(const ConfinedWalkModel& m, const MesoscopicBoxes& b) {
  const auto& P = m.profile();
  Bracket r;
  Vec h = expected_hitting_times(m, b.A[0]);
  r.Epi = pi_average(m, h);
  auto inD = local_mask(P, b.D);
  r.min_fA1 = 1e300;
  for (std::size_t i = 0; i < m.n(); ++i) {
    double fa = 1 - h[i] / r.Epi;
    r.min_fA1 = std::min(r.min_fA1, fa);
    if (inD[i]) {
      r.sup_fA1 = std::max(r.sup_fA1, std::abs(fa));
      r.piD += m.pi(i);
    }
  }
  Vec g = relative_potential_g(m, b);
  r.Egg = m.dirichlet(g);
  r.lhs = r.Egg * (1 - 2 * r.sup_fA1);
  r.mid = 1 / r.Epi;
  r.rhs = r.Egg / (r.piD * r.piD);
  r.holds = r.lhs <= r.mid && r.mid <= r.rhs;
  r.capA1 = capacity(b.A[0]);
  r.ratio = 1 / (r.Epi * P.params.u * (1 + P.params.eps) * r.capA1 / P.TN);
  return r;
}

// ---------------------------------------------------------------- short horizon

Vec hit_before(const ConfinedWalkModel& m, const SiteSet& target, double t) {
  const auto& P = m.profile();
  Vec out = Vec::Zero(m.n());
  if (t <= 0) return out;
  auto in = local_mask(P, target);
  std::vector<int> sel(m.n(), -1);
  int n = 0;
  for (std::size_t i = 0; i < m.n(); ++i)
    if (!in[i]) sel[i] = n++;
  // survival e^{t L~_killed} 1 = e^{t S_killed} f / f
  Vec f(n);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (sel[i] >= 0) f[sel[i]] = P.f[i];
  SpMat S = -restricted(m, sel, n);
  Vec w = expmv_sym(S, f, t);
  for (std::size_t i = 0; i < m.n(); ++i) out[i] = sel[i] >= 0 ? std::clamp(1 - w[sel[i]] / f[sel[i]], 0.0, 1.0) : 1.0;
  return out;
}

ShortHorizon short_horizon_escape(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double t) {
  const auto& P = m.profile();
  ShortHorizon s;
  Vec h1 = hit_before(m, b.A[0], t);
  auto inD = local_mask(P, b.D);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (inD[i]) s.max_D_A1 = std::max(s.max_D_A1, h1[i]);
  Vec h2 = hit_before(m, b.A[1], t);
  auto in3 = local_mask(P, b.A[2]);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (!in3[i]) s.max_A3c_A2 = std::max(s.max_A3c_A2, h2[i]);
  return s;
}

Estimate hit_before_mc(const ConfinedWalkModel& m, const Point& x, const SiteSet& target, double t, long n, Rng& rng) {
  const auto& P = m.profile();
  int i0 = P.index(x);
  if (i0 < 0) throw Error("start outside U^N");
  auto in = local_mask(P, target);
  long hits = 0;
  for (long s = 0; s < n; ++s) {
    Rng r = rng.split(std::uint64_t(s));
    int i = i0;
    double clock = 0;
    while (!in[i]) {
      clock += r.exponential(m.rate(i));
      if (clock >= t) break;
      i = m.nbr(i, m.jump(i, r.uniform()));
    }
    if (in[i] && clock < t) ++hits;
  }
  return wilson(hits, n);
}

double doob_exit_bound(int a, double t, int d) {
  if (t <= 0) return 0.0;
  double theta = std::asinh(a * d / t);
  return std::min(1.0, 2 * std::exp(-theta * a + t / d * (std::cosh(theta) - 1)));
}

Estimate exit_probability_mc(int a, double t, int d, long n, Rng& rng) {
  long out = 0;
  for (long s = 0; s < n; ++s) {
    Rng r = rng.split(std::uint64_t(s));
    int x = 0;
    double clock = 0;
    while (true) {
      clock += r.exponential(1.0 / d);
      if (clock >= t) break;
      x += r.below(2) ? 1 : -1;
      if (std::abs(x) >= a) {
        ++out;
        break;
      }
    }
  }
  return wilson(out, n);
}

}  // namespace tl
