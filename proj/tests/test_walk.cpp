#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "tiltlab/walk.hpp"

using namespace tl;

namespace {

std::shared_ptr<const TiltProfile> profile(int N, double u = 2.0) {
  return std::make_shared<const TiltProfile>(build_tilt_profile(small_params(N, u)));
}

// dense transition matrix e^{t L~} through the symmetric form
Mat dense_transition(const ConfinedWalkModel& m, double t) {
  Mat S = Mat(m.symmetrized());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  Mat E = es.eigenvectors() * (es.eigenvalues() * t).array().exp().matrix().asDiagonal() *
          es.eigenvectors().transpose();
  const auto& f = m.profile().f;
  for (int x = 0; x < E.rows(); ++x)
    for (int y = 0; y < E.cols(); ++y) E(x, y) *= f[y] / f[x];
  return E;
}

// two-sample Kolmogorov-Smirnov statistic
double ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double D = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    D = std::max(D, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return D;
}

}  // namespace

TEST_CASE("simple random walk statistics") {
  Rng rng(11);
  MeanAcc jumps;
  for (int s = 0; s < 10000; ++s) {
    Rng r = rng.split(s);
    auto seg = simulate_srw({0, 0, 0}, 0.5, r);
    REQUIRE(seg.valid());
    REQUIRE(std::abs(seg.duration() - 0.5) < 1e-12);
    jumps.add(double(seg.size() - 1));
  }
  CHECK(within_se({jumps.mean, jumps.se(), jumps.n}, 0.5));

  const double t = 5.0;
  MeanAcc m[3], q[3];
  for (int s = 0; s < 20000; ++s) {
    Rng r = rng.split(100000 + s);
    Point x = run_srw({0, 0, 0}, 0, t, r, nullptr);
    for (int k = 0; k < 3; ++k) {
      m[k].add(x[k]);
      q[k].add(double(x[k]) * x[k]);
    }
  }
  // six simultaneous checks: Bonferroni level matching a single 3 SE test
  for (int k = 0; k < 3; ++k) {
    CHECK(within_se({m[k].mean, m[k].se(), m[k].n}, 0.0, 3.6));
    CHECK(within_se({q[k].mean, q[k].se(), q[k].n}, t / 3, 3.6));
  }
}

TEST_CASE("trajectory text round trip") {
  Rng r(3);
  auto seg = simulate_srw({1, -2, 0}, 20.0, r);
  std::stringstream ss;
  seg.write(ss);
  auto back = TrajectorySegment::read(ss);
  CHECK(back.xs == seg.xs);
  CHECK(back.holds == seg.holds);
  CHECK(back.at_time(0.0) == Point{1, -2, 0});
}

TEST_CASE("confined generator: rows, detailed balance, edge weights") {
  for (int N : {2, 4}) {
    ConfinedWalkModel m(profile(N));
    auto b = m.detailed_balance();
    CHECK(b.max_row_sum < 1e-12);
    CHECK(b.max_imbalance < 1e-12);
    CHECK(b.max_weight_err < 1e-12);
    const auto& P = m.profile();
    for (std::size_t i = 0; i < m.n(); ++i) REQUIRE(std::abs(m.rate(i) - (1 - P.v[i])) < 1e-12);
    // symmetrized form annihilates f and is symmetric
    SpMat S = m.symmetrized();
    CHECK(asymmetry(S) == 0.0);
    Vec f = Eigen::Map<const Vec>(P.f.data(), Eigen::Index(P.n()));
    CHECK((S * f).cwiseAbs().maxCoeff() < 1e-15);
    // pi L~ = 0
    Vec pi = f.cwiseProduct(f);
    Vec row = m.generator().transpose() * pi;
    CHECK(row.cwiseAbs().maxCoeff() < 1e-15);
    // Dirichlet form matches -<g, pi L~ g>
    Rng r(5);
    Vec g(m.n());
    for (auto& x : g) x = r.uniform();
    double lhs = m.dirichlet(g);
    double rhs = -g.dot(pi.cwiseProduct(m.generator() * g));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("confined walk: jumps uniform where f is locally constant") {
  ConfinedWalkModel m(profile(4));
  const auto& P = m.profile();
  int flat = -1;
  for (std::size_t i = 0; i < P.n() && flat < 0; ++i) {
    bool ok = P.hN[i] == 1.0;
    for (int j = 0; j < 6 && ok; ++j) ok = m.nbr(i, j) >= 0 && P.hN[m.nbr(i, j)] == 1.0;
    if (ok) flat = int(i);
  }
  REQUIRE(flat >= 0);
  CHECK(m.rate(flat) == doctest::Approx(1.0).epsilon(1e-15));
  // chi-square on 60000 jump directions, 5 dof; 99.9% quantile 20.5
  Rng r(9);
  int cnt[6] = {};
  for (int s = 0; s < 60000; ++s) ++cnt[m.jump(flat, r.uniform())];
  double chi = 0;
  for (int c : cnt) chi += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi < 20.5);
}

TEST_CASE("confined walk: occupation fractions match pi") {
  ConfinedWalkModel m(profile(2));
  const int batches = 50;
  const double len = 40000;
  // batch means need many visits per batch; sites near the edge of U^N are
  // rarely visited and get pooled into one bin
  std::vector<int> bin(m.n());
  int nb = 0;
  for (std::size_t i = 0; i < m.n(); ++i) bin[i] = m.pi(i) * m.rate(i) * len >= 20 ? nb++ : -1;
  for (auto& b : bin)
    if (b < 0) b = nb;
  std::vector<double> target(nb + 1, 0.0);
  for (std::size_t i = 0; i < m.n(); ++i) target[bin[i]] += m.pi(i);
  std::vector<MeanAcc> occ(nb + 1);
  std::vector<double> cur(nb + 1);
  Rng rng(21);
  int start = m.origin();
  for (int b = 0; b < batches; ++b) {
    std::fill(cur.begin(), cur.end(), 0.0);
    Rng r = rng.split(b);
    start = run_confined(m, start, 0, len, r, [&](int i, double, double l) { cur[bin[i]] += l; });
    for (int k = 0; k <= nb; ++k) occ[k].add(cur[k] / len);
  }
  int bad = 0;
  for (int k = 0; k <= nb; ++k)
    if (std::abs(occ[k].mean - target[k]) > 5 * occ[k].se()) ++bad;
  MESSAGE(nb << " individually tested sites, pooled mass " << target[nb]);
  CHECK(bad == 0);
}

TEST_CASE("confined walk: marginal against dense matrix exponential") {
  ConfinedWalkModel m(profile(2));
  const auto& P = m.profile();
  const double t = 2.0;
  Mat E = dense_transition(m, t);
  int x = m.origin();
  CHECK(E.row(x).sum() == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> emp(m.n(), 0.0);
  Rng rng(31);
  const int n = 100000;
  for (int s = 0; s < n; ++s) {
    Rng r = rng.split(s);
    emp[run_confined(m, x, 0, t, r, nullptr)] += 1.0 / n;
  }
  double tv = 0;
  for (std::size_t y = 0; y < m.n(); ++y) tv += 0.5 * std::abs(emp[y] - E(x, y));
  MESSAGE("TV at t=2: " << tv);
  CHECK(tv < 0.01);
  (void)P;
}

TEST_CASE("tilted walk: confined before T_N, SRW after") {
  auto prof = profile(2, 0.3);
  ConfinedWalkModel m(prof);
  const auto& P = *prof;
  double TN = P.TN;
  Rng rng(41);
  MeanAcc drift[3];
  for (int s = 0; s < 2000; ++s) {
    Rng r = rng.split(s);
    auto seg = simulate_tilted(m, TN + 50, r);
    REQUIRE(seg.valid());
    REQUIRE(std::abs(seg.duration() - (TN + 50)) < 1e-9 * TN);
    double t = 0;
    std::size_t k = 0;
    for (; k < seg.size() && t < TN; ++k) {
      REQUIRE(P.index(seg.site(k)) >= 0);
      t += seg.holds[k];
    }
    Point a = seg.at_time(TN), b = seg.at_time(TN + 50);
    for (int q = 0; q < 3; ++q) drift[q].add(b[q] - a[q]);
  }
  for (auto& dq : drift) CHECK(within_se({dq.mean, dq.se(), dq.n}, 0.0));

  // horizon = T_N: same law as the confined walk (KS on the final coordinate)
  std::vector<double> a, b;
  for (int s = 0; s < 10000; ++s) {
    Rng r1 = rng.split(1000000 + s), r2 = rng.split(2000000 + s);
    a.push_back(simulate_tilted(m, TN, r1).at_time(TN)[0]);
    b.push_back(P.box.coord(P.ids[run_confined(m, m.origin(), 0, TN, r2, nullptr)], 0));
  }
  // 99.9% two-sample critical value 1.95 sqrt(2/n), conservative for ties
  CHECK(ks(a, b) < 1.95 * std::sqrt(2.0 / 10000));
}

TEST_CASE("Radon-Nikodym martingale") {
  ConfinedWalkModel m(profile(2));
  Rng rng(51);
  auto seg = simulate_srw({0, 0, 0}, 30.0, rng);
  CHECK(radon_nikodym(m, seg, 0.0) == 1.0);
  // a walk that steps out of U^N (radius 6) gets weight 0
  TrajectorySegment out;
  out.d = 3;
  for (int x = 0; x <= 7; ++x) {
    int p[3] = {x, 0, 0};
    out.push(p, 0.1);
  }
  CHECK(radon_nikodym(m, out, 0.8) == 0.0);
  CHECK(radon_nikodym(m, out, 0.55) > 0.0);

  // exact Feynman-Kac: e^{T S} f = f
  for (double T : {0.5, 5.0, 40.0}) CHECK(std::abs(feynman_kac_mean(m, {0, 0, 0}, T) - 1.0) < 1e-10);
  CHECK(std::abs(feynman_kac_mean(m, {3, 1, 0}, 12.0) - 1.0) < 1e-10);

  // Monte Carlo at several times
  const double T = 8.0;
  auto est = martingale_means(m, {0, 0, 0}, {0.0, T / 4, T / 2, T}, 40000, rng);
  CHECK(est[0].value == 1.0);
  for (auto& e : est) CHECK(within_se(e, 1.0));
  // the stored-path route agrees with the streaming one on average
  MeanAcc ms;
  for (int s = 0; s < 20000; ++s) {
    Rng r = rng.split(7000000 + s);
    ms.add(radon_nikodym(m, simulate_srw({0, 0, 0}, T, r), T));
  }
  CHECK(within_se({ms.mean, ms.se(), ms.n}, 1.0));
}

TEST_CASE("change of measure: occupation time of a box") {
  ConfinedWalkModel m(profile(2));
  Rng rng(61);
  auto c = change_of_measure_check(m, 10.0, 2, 40000, rng);
  MESSAGE("E_srw[M Phi] = " << c.srw_weighted.value << " +- " << c.srw_weighted.se << ", E_conf[Phi] = "
                            << c.confined.value << " +- " << c.confined.se);
  CHECK(agree_se(c.srw_weighted, c.confined));
  CHECK(within_se(c.srw_mean_M, 1.0));
}

TEST_CASE("relative entropy estimate and split") {
  ConfinedWalkModel m(profile(4, 2.0));
  Rng rng(71);
  auto rep = relative_entropy_estimate(m, 400, rng);
  const auto& P = m.profile();
  MESSAGE("H = " << rep.H.value << " +- " << rep.H.se << " bound " << rep.bound_main << " II rate "
                 << rep.II_rate.value << " +- " << rep.II_rate.se << " vs " << rep.int_v_dpi);
  CHECK(rep.III_violations == 0);
  CHECK(rep.H.value == doctest::Approx(rep.I.value + rep.II.value + rep.III.value).epsilon(1e-12));
  CHECK(within_se(rep.II_rate, rep.int_v_dpi));
  // sum v pi is the Dirichlet form of f
  Field F = profile_field(P);
  CHECK(rep.int_v_dpi == doctest::Approx(dirichlet_form(F) / P.norm2).epsilon(1e-10));
  double lnN = std::log(4.0);
  CHECK(rep.H.value <= rep.bound_main + 3 * rep.H.se + 2 * lnN * lnN);
  CHECK(rep.log_f_ratio <= 4 * std::log(4.0) + std::log(1.0 / 0.185));
  CHECK_THROWS_AS(relative_entropy_estimate(m, 10, rng), Error);
}

TEST_CASE("entropy lower bound") {
  CHECK(entropy_lower_bound(1.0, 0.0) == doctest::Approx(std::exp(-std::exp(-1.0))).epsilon(1e-15));
  CHECK(entropy_lower_bound(1.0, 0.0) == doctest::Approx(0.6922).epsilon(1e-4));
  CHECK_THROWS_WITH_AS(entropy_lower_bound(0.0, 1.0), "inequality vacuous", Error);
  // two-point space P = (1/2, 1/2), P~ = (0.9, 0.1), A = {first point}
  double H = 0.9 * std::log(0.9 / 0.5) + 0.1 * std::log(0.1 / 0.5);
  CHECK(entropy_lower_bound(0.9, H) <= 0.5);
  double a = entropy_lower_bound(0.3, 0.1), b = entropy_lower_bound(0.3, 1.0), c = entropy_lower_bound(0.3, 5.0);
  CHECK(a > b);
  CHECK(b > c);
}
