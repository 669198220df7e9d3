#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tiltlab/common.hpp"
#include "tiltlab/lattice.hpp"
#include "tiltlab/rng.hpp"

using namespace tl;

TEST_CASE("lattice model basics") {
  CHECK_THROWS_AS(LatticeModel(2, 5), Error);
  LatticeModel L(3, 4);
  CHECK(L.neighbours({0, 0, 0}).size() == 6);
  const Box& b = L.box();
  for (std::int64_t i = 0; i < b.size(); ++i) REQUIRE(b.id(b.point(i)) == i);
  auto id = b.id({1, -2, 3});
  CHECK(b.coord(id, 0) == 1);
  CHECK(b.coord(id, 1) == -2);
  CHECK(b.point(b.nbr(id, 3)) == Point{1, -3, 3});
}

TEST_CASE("blow-up examples") {
  Box box(3, 12);
  auto K0 = CompactShape::point({0, 0, 0});
  for (int N : {1, 3, 7}) CHECK(blow_up(K0, N, box).size() == 27);
  auto cube = CompactShape::box({-1, -1, -1}, {1, 1, 1});
  auto B = blow_up(cube, 2, box);
  CHECK(B.size() == 343);
  CHECK(B.linf_radius({0, 0, 0}) == 3);

  // ball(0, 0.5), N = 4: the scaled ball has radius 2; oracle samples the
  // ball on a 0.05 grid (axis tangency points included) and marks every site
  // whose unit l_inf cube catches a sample
  auto ball = CompactShape::ball({0, 0, 0}, 0.5);
  auto S = blow_up(ball, 4, box);
  std::vector<std::uint8_t> hit(box.size(), 0);
  const double h = 0.05;
  for (int i = -40; i <= 40; ++i)
    for (int j = -40; j <= 40; ++j)
      for (int k = -40; k <= 40; ++k) {
        double z[3] = {i * h, j * h, k * h};
        if (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] > 4.0 + 1e-12) continue;
        for (int a = -4; a <= 4; ++a)
          for (int b = -4; b <= 4; ++b)
            for (int c = -4; c <= 4; ++c)
              if (std::abs(a - z[0]) <= 1 + 1e-12 && std::abs(b - z[1]) <= 1 + 1e-12 &&
                  std::abs(c - z[2]) <= 1 + 1e-12)
                hit[box.id({a, b, c})] = 1;
      }
  std::size_t count = 0;
  for (auto x : hit) count += x;
  CHECK(S.size() == count);
  CHECK(S == SiteSet::from_mask(box, hit));

  CHECK_THROWS_AS(blow_up(CompactShape(), 2, box), Error);
}

TEST_CASE("blow-up is monotone in the shape") {
  Box box(3, 14);
  for (int N : {2, 3, 5}) {
    auto a = blow_up(CompactShape::ball({0, 0, 0}, 0.5), N, box);
    auto b = blow_up(CompactShape::ball({0, 0, 0}, 0.8), N, box);
    auto c = blow_up(CompactShape::ball({0.1, 0, 0}, 1.0), N, box);
    CHECK(a.subset_of(b));
    CHECK(b.subset_of(c));
  }
}

TEST_CASE("boundaries on random sets") {
  Rng rng(11);
  Box box(3, 6);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::uint8_t> m(box.size(), 0);
    for (std::int64_t i = 0; i < box.size(); ++i)
      if (box.interior(i) && box.point(i)[0] * box.point(i)[0] < 16 && rng.uniform() < 0.3) m[i] = 1;
    // keep one layer free so that boundaries stay in the box
    for (std::int64_t i = 0; i < box.size(); ++i) {
      auto p = box.point(i);
      for (int c : p)
        if (std::abs(c) >= 5) m[i] = 0;
    }
    auto S = SiteSet::from_mask(box, m);
    auto bd = S.boundary(), in = S.inner_boundary();
    CHECK(bd.intersect(S).empty());
    CHECK(in.subset_of(S));
    CHECK(S.closure() == S.unite(bd));
    // the inner boundary of S is the boundary of its complement, seen from inside
    for (auto id : S.ids()) {
      bool touches = false;
      for (int j = 0; j < 6; ++j) touches |= bd.contains(box.nbr(id, j));
      CHECK(touches == in.contains(id));
    }
  }
}

TEST_CASE("connectivity against union-find") {
  Box box(3, 1);
  auto U = SiteSet::from_points(box, {{0, 0, 0}});
  CHECK(connectivity(U, U, U));
  Box box2(3, 3);
  auto two = SiteSet::from_points(box2, {{0, 0, 0}, {2, 0, 0}});
  CHECK_FALSE(connectivity(two, SiteSet::from_points(box2, {{0, 0, 0}}), SiteSet::from_points(box2, {{2, 0, 0}})));
  CHECK_FALSE(connectivity(two, SiteSet(box2), two));

  Box big(3, 10);  // 21^3, percolation on the inner 20^3 would need an even side
  Rng rng(2024);
  for (int seed = 0; seed < 100; ++seed) {
    Rng r = rng.split(seed);
    std::vector<std::uint8_t> open(big.size(), 0);
    for (auto& o : open) o = r.uniform() < 0.7;
    auto Us = SiteSet::from_mask(big, open);
    auto A = SiteSet::from_points(big, {{-9, -9, -9}, {-9, 0, 0}});
    auto B = SiteSet::from_points(big, {{9, 9, 9}, {3, 2, 1}});
    CHECK(connectivity(Us, A, B) == oracle::uf_connected(big, open, A.ids(), B.ids()));
  }
}

namespace {
// flood fill from the window faces through vacant sites
bool flood_disconnected(const Box& box, const std::vector<std::uint8_t>& occ, const SiteSet& KN, int W) {
  std::vector<std::uint8_t> seen(box.size(), 0);
  std::vector<std::int64_t> q;
  for (std::int64_t i = 0; i < box.size(); ++i) {
    auto p = box.point(i);
    int m = 0;
    for (int c : p) m = std::max(m, std::abs(c));
    if (m == W && !occ[i]) {
      seen[i] = 1;
      q.push_back(i);
    }
  }
  for (std::size_t h = 0; h < q.size(); ++h) {
    auto p = box.point(q[h]);
    for (int j = 0; j < 6; ++j) {
      auto y = p;
      y[j / 2] += (j % 2) ? -1 : 1;
      int m = 0;
      for (int c : y) m = std::max(m, std::abs(c));
      if (m > W) continue;
      auto id = box.id(y);
      if (!occ[id] && !seen[id]) {
        seen[id] = 1;
        q.push_back(id);
      }
    }
  }
  for (auto k : KN.ids())
    if (seen[k]) return false;
  return true;
}
}  // namespace

TEST_CASE("disconnection from infinity") {
  const int W = 12;
  Box box(3, W + 1);
  auto KN = blow_up(CompactShape::point({0, 0, 0}), 1, box);
  std::vector<std::uint8_t> all(box.size(), 1);
  CHECK_FALSE(disconnected_from_infinity(SiteSet::from_mask(box, all), KN, W));

  // occupied shell of radius 4
  std::vector<std::uint8_t> vac(box.size(), 1);
  for (std::int64_t i = 0; i < box.size(); ++i) {
    int m = 0;
    for (int c : box.point(i)) m = std::max(m, std::abs(c));
    if (m == 4) vac[i] = 0;
  }
  CHECK(disconnected_from_infinity(SiteSet::from_mask(box, vac), KN, W));
  CHECK_THROWS_AS(disconnected_from_infinity(SiteSet::from_mask(box, vac), KN, 2), Error);

  // SRW traces around the 3^3 box: generic BFS, fast variant, flood-fill oracle
  const int W2 = 30;
  Box world(3, W2 + 1);
  auto KN2 = blow_up(CompactShape::point({0, 0, 0}), 1, world);
  Disconnection fast(world);
  int agree = 0, disc = 0;
  for (int run = 0; run < 50; ++run) {
    Rng r(7, run);
    std::vector<std::uint8_t> occ(world.size(), 0);
    Point x{0, 0, 0}, lo = x, hi = x;
    for (int s = 0; s < 10000; ++s) {
      occ[world.id(x)] = 1;
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], x[k]);
        hi[k] = std::max(hi[k], x[k]);
      }
      int j = r.below(6);
      Point y = x;
      y[j / 2] += (j % 2) ? -1 : 1;
      int m = 0;
      for (int c : y) m = std::max(m, std::abs(c));
      if (m > W2 - 1) continue;  // keep inside for the oracle comparison
      x = y;
    }
    std::vector<std::uint8_t> vacant(world.size());
    for (std::size_t i = 0; i < vacant.size(); ++i) vacant[i] = !occ[i];
    bool a = disconnected_from_infinity(SiteSet::from_mask(world, vacant), KN2, W2);
    bool b = fast.disconnected(occ, lo, hi, KN2.ids(), W2);
    bool c = flood_disconnected(world, occ, KN2, W2);
    agree += (a == c) && (b == c);
    disc += c;
  }
  CHECK(agree == 50);
  MESSAGE("disconnected runs: " << disc);
}

TEST_CASE("disconnection monotone and window-stable") {
  Rng rng(5);
  const int W = 10;
  Box box(3, 2 * W + 1);
  auto KN = blow_up(CompactShape::point({0, 0, 0}), 1, box);
  for (int rep = 0; rep < 30; ++rep) {
    // occupied sites only within radius 4
    std::vector<std::uint8_t> big(box.size(), 1), small(box.size(), 1);
    for (std::int64_t i = 0; i < box.size(); ++i) {
      int m = 0;
      for (int c : box.point(i)) m = std::max(m, std::abs(c));
      if (m <= 4 && m >= 2) {
        double u = rng.uniform();
        if (u < 0.85) small[i] = 0;
        if (u < 0.75) big[i] = 0;
      }
    }
    // small ⊆ big as vacant sets
    auto vs = SiteSet::from_mask(box, small), vb = SiteSet::from_mask(box, big);
    REQUIRE(vs.subset_of(vb));
    if (disconnected_from_infinity(vb, KN, W)) CHECK(disconnected_from_infinity(vs, KN, W));
    CHECK(disconnected_from_infinity(vs, KN, W) == disconnected_from_infinity(vs, KN, 2 * W));
    CHECK(disconnected_from_infinity(vb, KN, 7) == disconnected_from_infinity(vb, KN, 2 * W));
  }
}

TEST_CASE("site set text round trip") {
  Box box(3, 5);
  Rng rng(3);
  std::vector<std::uint8_t> m(box.size());
  for (auto& x : m) x = rng.uniform() < 0.2;
  auto S = SiteSet::from_mask(box, m);
  std::stringstream ss;
  S.write(ss);
  std::string first = ss.str();
  auto T = SiteSet::read(ss);
  CHECK(T == S);
  std::stringstream s2;
  T.write(s2);
  CHECK(s2.str() == first);
}

TEST_CASE("shape spec parsing") {
  auto K = CompactShape::parse("ball:0,0,0:0.5+box:1,1,1:2,2,2", 3);
  CHECK(K.pieces().size() == 2);
  CHECK(CompactShape::parse(K.spec(), 3).spec() == K.spec());
  CHECK_THROWS_AS(CompactShape::parse("ball:0,0:0.5", 3), Error);
  CHECK_THROWS_AS(CompactShape::ball({0, 0, 0}, 0.0), Error);
  CHECK_THROWS_AS(CompactShape::box({0, 0, 0}, {1, 0, 1}), Error);
}
