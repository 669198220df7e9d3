#include <cmath>
#include <memory>

#include <Eigen/SparseLU>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "tiltlab/hitting.hpp"
#include "tiltlab/spectral.hpp"

using namespace tl;

namespace {

std::shared_ptr<const TiltProfile> profile(int N, double delta = 0.7) {
  auto p = small_params(N);
  p.delta = delta;
  return std::make_shared<const TiltProfile>(build_tilt_profile(p));
}

// first site of Gamma^N on the positive first axis
Point axis_gamma(const TiltProfile& P) {
  auto G = gamma_sites(P);
  for (int x = 0;; ++x)
    if (G.contains(Point{x, 0, 0})) return {x, 0, 0};
}

// E_x[H_target] straight from the rates f(y)/(2d f(x)), sparse LU on the
// unsymmetrized generator
Vec lu_hitting(const ConfinedWalkModel& m, const std::vector<std::uint8_t>& in) {
  const auto& f = m.profile().f;
  int n = int(m.n()), D = 2 * m.d();
  std::vector<Eigen::Triplet<double>> t;
  Vec b = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (in[i]) {
      t.emplace_back(i, i, 1.0);
      continue;
    }
    b[i] = 1;
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(i, j);
      if (y < 0) continue;
      double q = f[y] / (D * f[i]);
      t.emplace_back(i, i, q);
      t.emplace_back(i, y, -q);
    }
  }
  SpMat Q(n, n);
  Q.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<SpMat> lu(Q);
  return lu.solve(b);
}

double mc_hitting(const ConfinedWalkModel& m, int i0, const std::vector<std::uint8_t>& in, long n, Rng& rng,
                  double& se) {
  double s = 0, s2 = 0;
  for (long k = 0; k < n; ++k) {
    Rng r = rng.split(std::uint64_t(k));
    int i = i0;
    double t = 0;
    while (!in[i]) {
      t += r.exponential(m.rate(i));
      i = m.nbr(i, m.jump(i, r.uniform()));
    }
    s += t;
    s2 += t * t;
  }
  double mean = s / n;
  se = std::sqrt((s2 / n - mean * mean) / n);
  return mean;
}

std::vector<std::uint8_t> local(const TiltProfile& P, const SiteSet& s) {
  std::vector<std::uint8_t> in(P.n(), 0);
  for (auto id : s.ids()) in[P.local[id]] = 1;
  return in;
}

}  // namespace

TEST_CASE("hitting times: symmetrized Cholesky vs generator LU") {
  auto prof = profile(4);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  auto b = make_boxes(P, axis_gamma(P), BoxRadii{.a = {0, 1, 2, 3, 4}});
  auto h = expected_hitting_times(m, b.A[0]);
  auto in = local(P, b.A[0]);
  Vec o = lu_hitting(m, in);
  CHECK((h - o).cwiseAbs().maxCoeff() <= 1e-9 * o.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < m.n(); ++i)
    if (in[i]) CHECK(h[i] == 0.0);
  CHECK_THROWS_AS(expected_hitting_times(m, SiteSet(P.box)), Error);

  // commute time: E_y[H_A] <= R_eff(y, A) with conductances pi(x) q(x,y), pi summing to 1
  std::vector<oracle::Edge> edges;
  for (std::size_t i = 0; i < m.n(); ++i)
    for (int j = 0; j < 6; j += 2) {
      int y = m.nbr(i, j);
      if (y >= 0) edges.push_back({int(i), y, m.pi(i) * P.f[y] / (6 * P.f[i])});
    }
  double total = 0;
  for (std::size_t i = 0; i < m.n(); ++i) total += m.pi(i);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<int> ys;
  for (std::size_t i = 0; i < m.n(); i += 37)
    if (!in[i]) ys.push_back(int(i));
  auto R = oracle::effective_resistance(int(m.n()), edges, in, ys);
  for (std::size_t k = 0; k < ys.size(); ++k) CHECK(h[ys[k]] <= R[k] * (1 + 1e-9));
}

TEST_CASE("hitting time by Monte Carlo") {
  auto prof = profile(4);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  auto b = make_boxes(P, axis_gamma(P), BoxRadii{.a = {0, 1, 2, 3, 4}});
  auto h = expected_hitting_times(m, b.A[0]);
  auto in = local(P, b.A[0]);
  Rng rng(2024);
  for (Point x : {Point{0, 0, 0}, Point{-4, 2, 1}}) {
    int i = P.index(x);
    double se = 0;
    double mean = mc_hitting(m, i, in, 4000, rng, se);
    MESSAGE("x=" << x[0] << "," << x[1] << "," << x[2] << " exact " << h[i] << " mc " << mean << " +- " << se);
    CHECK(std::abs(mean - h[i]) <= 3.6 * se);
    rng = rng.split(99);
  }
}

TEST_CASE("relative potential g") {
  auto prof = profile(4);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  auto b = make_boxes(P, axis_gamma(P), BoxRadii{.a = {0, 1, 2, 3, 4}});
  Vec g = relative_potential_g(m, b);
  auto in1 = local(P, b.A[0]), in2 = local(P, b.A[1]);
  for (std::size_t i = 0; i < m.n(); ++i) {
    if (in1[i]) CHECK(g[i] == 1.0);
    else if (!in2[i]) CHECK(g[i] == 0.0);
    else CHECK((g[i] > 0 && g[i] < 1));
  }
  CHECK(harmonic_residual(m, b, g) <= 1e-10);
  // Rayleigh minimiser: perturbations inside A2 \ A1 only raise the form
  double E0 = m.dirichlet(g);
  for (int s = 0; s < 20; ++s) {
    Rng r(1000 + s);
    Vec p = g;
    for (std::size_t i = 0; i < m.n(); ++i)
      if (in2[i] && !in1[i]) p[i] += 0.05 * (r.uniform() - 0.5);
    CHECK(m.dirichlet(p) >= E0);
  }
}

TEST_CASE("lattice escape probabilities vs Gauss-Seidel") {
  Box box(3, 8);
  auto cube = [&](int a) {
    std::vector<Point> pts;
    for (int x = -a; x <= a; ++x)
      for (int y = -a; y <= a; ++y)
        for (int z = -a; z <= a; ++z) pts.push_back({x, y, z});
    return SiteSet::from_points(box, pts);
  };
  auto A = cube(1), B = cube(4);
  auto esc = srw_escape(A, B);
  // phi = P_x[H_A < T_B] by sweeping phi(x) = mean of neighbours
  auto inA = A.mask(), inB = B.mask();
  std::vector<double> phi(box.size(), 0.0);
  for (auto id : A.ids()) phi[id] = 1.0;
  for (int it = 0; it < 4000; ++it)
    for (auto id : B.ids()) {
      if (inA[id]) continue;
      double s = 0;
      for (int j = 0; j < 6; ++j) s += phi[box.nbr(id, j)];
      phi[id] = s / 6;
    }
  double sum = 0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    auto id = A.ids()[k];
    double e = 0;
    for (int j = 0; j < 6; ++j) e += (1 - phi[box.nbr(id, j)]) / 6;
    CHECK(esc[k] == doctest::Approx(e).epsilon(1e-9));
    sum += esc[k];
  }
  // a wider box lets fewer walks escape
  double wide = 0;
  for (double e : srw_escape(A, cube(7))) wide += e;
  CHECK(wide < sum);
  CHECK(wide > capacity(A));
  CHECK_THROWS_AS(srw_escape(A, A), Error);
}

TEST_CASE("box construction") {
  auto prof = profile(6, 0.75);
  const auto& P = *prof;
  Point x0 = axis_gamma(P);
  CHECK(x0 == Point{4, 0, 0});
  BoxRadii r;
  r.auto_a2 = true;
  auto b = make_boxes(P, x0, r);
  for (int k = 1; k < 6; ++k) CHECK(b.a[k] > b.a[k - 1]);
  for (int k = 1; k < 6; ++k) CHECK(b.A[k - 1].subset_of(b.A[k]));
  CHECK(b.flat_levels >= 2);
  CHECK(b.a[1] == max_flat_radius(P, x0));
  auto cs = spread_centers(P, 3);
  REQUIRE(cs.size() == 3);
  CHECK(max_flat_radius(P, cs[0]) >= max_flat_radius(P, x0));
  for (auto& c : cs) CHECK(max_flat_radius(P, c) >= 2);
  CHECK(cs[1] != cs[0]);
  CHECK(cs[2] != cs[1]);
  CHECK(spread_centers(P, 3, 50).empty());
  CHECK_THROWS_AS(make_boxes(P, {0, 0, 0}), Error);
  CHECK_THROWS_AS(make_boxes(P, x0, BoxRadii{.a = {2, 2, 3, 4, 5}}), Error);
  CHECK_THROWS_AS(make_boxes(P, x0, BoxRadii{.a = {1, 2, 3, 4, 40}}), Error);
}

TEST_CASE("Dirichlet identity, escape chain and entrance bracket at N = 6") {
  auto prof = profile(6, 0.75);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  BoxRadii r;
  r.auto_a2 = true;
  auto b = make_boxes(P, axis_gamma(P), r);
  auto di = dirichlet_identity_check(m, b);
  MESSAGE("a = " << b.a[0] << " " << b.a[1] << " " << b.a[2] << " " << b.a[3] << " " << b.a[4] << " " << b.a[5]);
  MESSAGE("E(g,g) " << di.lhs << " identity " << di.rhs << " escape " << di.escape_sum << " cap " << di.capA1);
  CHECK(di.lhs == doctest::Approx(di.rhs).epsilon(1e-8));
  CHECK(di.capA1 <= di.escape_sum);

  auto c = emest_chain(b);
  CHECK(c.holds);
  CHECK(c.e.size() == b.A[0].inner_boundary().size());

  auto br = entrance_bracket(m, b);
  MESSAGE("bracket " << br.lhs << " <= " << br.mid << " <= " << br.rhs << " sup|fA1| " << br.sup_fA1 << " ratio "
                     << br.ratio);
  CHECK(br.holds);
  CHECK(br.Egg == doctest::Approx(di.lhs).epsilon(1e-12));
  CHECK(br.piD < 1);
  CHECK(br.min_fA1 <= 0);

  // the non-flat case is refused
  auto bad = make_boxes(P, axis_gamma(P), BoxRadii{.a = {1, 4, 5, 6, 7}});
  CHECK_THROWS_AS(dirichlet_identity_check(m, bad), Error);
}

TEST_CASE("short-horizon hitting: killed semigroup vs Monte Carlo") {
  auto prof = profile(4);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  auto b = make_boxes(P, axis_gamma(P), BoxRadii{.a = {0, 1, 2, 3, 4}});
  double t = 6.0;
  Vec h = hit_before(m, b.A[0], t);
  CHECK(hit_before(m, b.A[0], 0.0).cwiseAbs().maxCoeff() == 0.0);
  Rng rng(77);
  Point x{0, 0, 0};
  auto e = hit_before_mc(m, x, b.A[0], t, 20000, rng);
  MESSAGE("P[H_A1 < t] exact " << h[P.index(x)] << " mc " << e.value << " +- " << e.se);
  CHECK(within_se(e, h[P.index(x)], 3.6));
  auto s = short_horizon_escape(m, b, t);
  CHECK(s.max_D_A1 >= h[P.index(x)]);
  CHECK(s.max_A3c_A2 <= 1.0);
  // longer horizons only add paths
  CHECK(hit_before(m, b.A[0], 2 * t)[P.index(x)] >= h[P.index(x)]);
}

TEST_CASE("Doob exit bound dominates Monte Carlo") {
  Rng rng(5);
  for (auto [a, t] : {std::pair{3, 2.0}, {5, 4.0}, {8, 10.0}, {4, 1.0}}) {
    double bnd = doob_exit_bound(a, t, 3);
    auto e = exit_probability_mc(a, t, 3, 20000, rng);
    MESSAGE("a=" << a << " t=" << t << " bound " << bnd << " mc " << e.value);
    CHECK(e.value - 3.6 * e.se <= bnd);
    rng = rng.split(1);
  }
  CHECK(doob_exit_bound(3, 0.0, 3) == 0.0);
}

TEST_CASE("spectral sandwich with the relative potential") {
  auto prof = profile(4);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  auto b = make_boxes(P, axis_gamma(P), BoxRadii{.a = {0, 1, 2, 3, 4}});
  Vec g = relative_potential_g(m, b);
  double mean = pi_average(m, g), var = 0;
  for (std::size_t i = 0; i < m.n(); ++i) var += m.pi(i) * (g[i] - mean) * (g[i] - mean);
  double rq = m.dirichlet(g) / var;
  auto gap = exact_spectral_gap(m);
  auto cong = congestion_bound(m, CanonicalPathPlan{3});
  MESSAGE("1/A " << cong.bound << " lambda2 " << gap.lambda2 << " RQ(g) " << rq);
  CHECK(cong.bound <= gap.lambda2);
  CHECK(gap.lambda2 <= rq);
}
