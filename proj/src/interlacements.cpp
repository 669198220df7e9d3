#include "tiltlab/interlacements.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "tiltlab/linalg.hpp"
#include "tiltlab/potential.hpp"

namespace tl {

std::size_t InterlacementTrace::size() const {
  return std::size_t(std::count(hit.begin(), hit.end(), std::uint8_t(1)));
}

bool InterlacementTrace::vacant_on(const std::vector<int>& Q) const {
  for (int k : Q)
    if (hit[k]) return false;
  return true;
}

const std::vector<double>& cube_exit_face(int s) {
  static std::map<int, std::vector<double>> cache;
  auto it = cache.find(s);
  if (it != cache.end()) return it->second;
  if (s < 0) throw Error("negative cube radius");
  // expected visits G before leaving the cube, then one step out
  const int w = 2 * s + 1;
  const int n = w * w * w;
  auto id = [&](int x, int y, int z) { return ((x + s) * w + (y + s)) * w + (z + s); };
  std::vector<Eigen::Triplet<double>> t;
  for (int x = -s; x <= s; ++x)
    for (int y = -s; y <= s; ++y)
      for (int z = -s; z <= s; ++z) {
        int i = id(x, y, z);
        t.emplace_back(i, i, 1.0);
        int nb[6][3] = {{x + 1, y, z}, {x - 1, y, z}, {x, y + 1, z}, {x, y - 1, z}, {x, y, z + 1}, {x, y, z - 1}};
        for (auto& q : nb)
          if (std::abs(q[0]) <= s && std::abs(q[1]) <= s && std::abs(q[2]) <= s)
            t.emplace_back(i, id(q[0], q[1], q[2]), -1.0 / 6);
      }
  SpMat M(n, n);
  M.setFromTriplets(t.begin(), t.end());
  Vec rhs = Vec::Zero(n);
  rhs[id(0, 0, 0)] = 1;
  Vec G = cg_solve(M, rhs, 1e-13, "cube exit");
  std::vector<double> face(w * w);
  for (int y = -s; y <= s; ++y)
    for (int z = -s; z <= s; ++z) face[(y + s) * w + (z + s)] = std::max(0.0, G[id(s, y, z)]) / 6;
  return cache[s] = std::move(face);
}

namespace {

struct FaceTable {
  int s;
  std::vector<double> cum;
};

const std::vector<FaceTable>& face_tables() {
  static std::vector<FaceTable> tabs;
  if (tabs.empty())
    for (int s : {1, 2, 4, 8, 16, 32}) {
      FaceTable f{s, cube_exit_face(s)};
      for (std::size_t k = 1; k < f.cum.size(); ++k) f.cum[k] += f.cum[k - 1];
      for (double& c : f.cum) c /= f.cum.back();
      tabs.push_back(std::move(f));
    }
  return tabs;
}

}  // namespace

InterlacementSampler::InterlacementSampler(const SiteSet& A, int kill_radius) : A_(A) {
  if (A.empty()) throw Error("interlacement target is empty");
  if (A.box().d() != 3) throw Error("interlacement sampler is implemented for d = 3");
  Point lo, hi;
  A.bounds(lo, hi);
  for (int k = 0; k < 3; ++k) {
    lo_[k] = lo[k];
    hi_[k] = hi[k];
    c_[k] = (lo[k] + hi[k]) / 2;
    radius_ = std::max({radius_, hi[k] - c_[k], c_[k] - lo[k]});
  }
  R_ = kill_radius > 0 ? kill_radius : std::max(1024, 64 * radius_);
  if (R_ < 4 * radius_) throw Error("kill radius below 4 times the radius of A");
  pts_ = A.points();
  int sy = hi_[1] - lo_[1] + 1, sz = hi_[2] - lo_[2] + 1;
  apos_.assign(std::size_t(hi_[0] - lo_[0] + 1) * sy * sz, -1);
  for (std::size_t k = 0; k < pts_.size(); ++k) {
    auto& p = pts_[k];
    apos_[(std::size_t(p[0] - lo_[0]) * sy + (p[1] - lo_[1])) * sz + (p[2] - lo_[2])] = int(k);
  }
  auto eq = equilibrium_measure(A, 0, false);
  cap_ = eq.cap;
  double s = 0;
  for (double e : eq.e) s += e;
  for (double e : eq.e) {
    et_.push_back(e / cap_);
    cum_.push_back((cum_.empty() ? 0.0 : cum_.back()) + e / s);
  }
  cum_.back() = 1.0;
  face_tables();
}

void InterlacementSampler::walk(int k, Rng& rng, std::vector<std::uint8_t>& hit) const {
  const auto& tabs = face_tables();
  int p[3] = {pts_[k][0], pts_[k][1], pts_[k][2]};
  const int sy = hi_[1] - lo_[1] + 1, sz = hi_[2] - lo_[2] + 1;
  hit[k] = 1;
  while (true) {
    int dist = 0, far = 0;
    for (int q = 0; q < 3; ++q) {
      dist = std::max({dist, lo_[q] - p[q], p[q] - hi_[q]});
      far = std::max(far, std::abs(p[q] - c_[q]));
    }
    if (far > R_) return;
    if (dist <= 0) {
      int a = apos_[(std::size_t(p[0] - lo_[0]) * sy + (p[1] - lo_[1])) * sz + (p[2] - lo_[2])];
      if (a >= 0) hit[a] = 1;
    }
    if (dist >= 3) {
      // largest tabulated cube around p that stays clear of A's bounding box
      int t = 0;
      while (t + 1 < int(tabs.size()) && tabs[t + 1].s <= dist - 2) ++t;
      const auto& f = tabs[t];
      int face = rng.below(6);
      int cell = int(std::lower_bound(f.cum.begin(), f.cum.end(), rng.uniform()) - f.cum.begin());
      cell = std::min(cell, int(f.cum.size()) - 1);
      int w = 2 * f.s + 1;
      int q = face >> 1, q1 = (q + 1) % 3, q2 = (q + 2) % 3;
      p[q] += (face & 1) ? -(f.s + 1) : f.s + 1;
      p[q1] += cell / w - f.s;
      p[q2] += cell % w - f.s;
    } else {
      int j = rng.below(6);
      p[j >> 1] += (j & 1) ? -1 : 1;
    }
  }
}

InterlacementTrace InterlacementSampler::sample(double u, Rng& rng) const {
  if (u < 0) throw Error("negative level");
  InterlacementTrace t;
  t.u = u;
  t.hit.assign(A_.size(), 0);
  t.count = rng.poisson(u * cap_);
  const auto& pts = pts_;
  for (long n = 0; n < t.count; ++n) {
    int k = int(std::lower_bound(cum_.begin(), cum_.end(), rng.uniform()) - cum_.begin());
    k = std::min(k, int(cum_.size()) - 1);
    t.starts.push_back(pts[k]);
    walk(k, rng, t.hit);
  }
  return t;
}

std::vector<InterlacementTrace> InterlacementSampler::sample_levels(const std::vector<double>& us, Rng& rng) const {
  double umax = 0;
  for (double u : us) {
    if (u < 0) throw Error("negative level");
    umax = std::max(umax, u);
  }
  std::vector<InterlacementTrace> out(us.size());
  for (std::size_t l = 0; l < us.size(); ++l) {
    out[l].u = us[l];
    out[l].hit.assign(A_.size(), 0);
  }
  long n = rng.poisson(umax * cap_);
  const auto& pts = pts_;
  std::vector<std::uint8_t> one(A_.size());
  for (long c = 0; c < n; ++c) {
    double mark = rng.uniform() * umax;
    int k = int(std::lower_bound(cum_.begin(), cum_.end(), rng.uniform()) - cum_.begin());
    k = std::min(k, int(cum_.size()) - 1);
    std::fill(one.begin(), one.end(), 0);
    walk(k, rng, one);
    for (std::size_t l = 0; l < us.size(); ++l) {
      if (mark > us[l]) continue;
      auto& t = out[l];
      ++t.count;
      t.starts.push_back(pts[k]);
      for (std::size_t a = 0; a < one.size(); ++a) t.hit[a] |= one[a];
    }
  }
  return out;
}

// ---------------------------------------------------------------- decay curve

namespace {

// vacant path from 0 to a site with |x|_inf = N, inside B_inf(0, N)
bool reaches(const SiteSet& A, const std::vector<int>& pos, const std::vector<std::uint8_t>& hit, int N) {
  const Box& box = A.box();
  Point o(box.d(), 0);
  int s = pos[box.id(o)];
  if (hit[s]) return false;
  std::vector<std::uint8_t> seen(A.size(), 0);
  std::deque<std::int64_t> q{box.id(o)};
  seen[s] = 1;
  while (!q.empty()) {
    auto id = q.front();
    q.pop_front();
    int linf = 0;
    for (int k = 0; k < box.d(); ++k) linf = std::max(linf, std::abs(box.coord(id, k)));
    if (linf == N) return true;
    for (int j = 0; j < 2 * box.d(); ++j) {
      auto y = box.nbr(id, j);
      int p = pos[y];
      if (p < 0 || seen[p] || hit[p]) continue;
      seen[p] = 1;
      q.push_back(y);
    }
  }
  return false;
}

}  // namespace

DecayCurve connectivity_decay_curve(const std::vector<double>& u_grid, const std::vector<int>& N_grid, long n_runs,
                                    Rng& rng, int kill_radius) {
  if (u_grid.empty() || N_grid.empty()) throw Error("empty grid");
  DecayCurve c;
  std::vector<std::vector<Estimate>> p(u_grid.size());
  for (std::size_t b = 0; b < N_grid.size(); ++b) {
    int N = N_grid[b];
    if (N < 1) throw Error("N must be positive");
    Box box(3, N + 2);
    std::vector<Point> pts;
    for (int x = -N - 1; x <= N + 1; ++x)
      for (int y = -N - 1; y <= N + 1; ++y)
        for (int z = -N - 1; z <= N + 1; ++z) pts.push_back({x, y, z});
    InterlacementSampler S(SiteSet::from_points(box, pts), kill_radius);
    std::vector<int> pos(box.size(), -1);
    for (std::size_t a = 0; a < S.set().size(); ++a) pos[S.set().ids()[a]] = int(a);
    std::vector<long> k(u_grid.size(), 0);
    Rng base = rng.split(std::uint64_t(N));
    for (long r = 0; r < n_runs; ++r) {
      Rng g = base.split(std::uint64_t(r));
      auto traces = S.sample_levels(u_grid, g);
      for (std::size_t l = 0; l < u_grid.size(); ++l)
        if (reaches(S.set(), pos, traces[l].hit, N)) ++k[l];
    }
    for (std::size_t l = 0; l < u_grid.size(); ++l) {
      auto e = wilson(k[l], n_runs);
      c.points.push_back({u_grid[l], N, e});
      p[l].push_back(e);
    }
  }
  for (std::size_t l = 0; l < u_grid.size(); ++l) {
    // slope of log(-log p) against log N over the usable points
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    bool decreasing = true;
    for (std::size_t b = 0; b < N_grid.size(); ++b) {
      double v = p[l][b].value;
      if (b > 0 && v >= p[l][b - 1].value) decreasing = false;
      if (v <= 0 || v >= 1) continue;
      double x = std::log(double(N_grid[b])), y = std::log(-std::log(v));
      sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
    }
    double slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : NAN;
    c.exponent.push_back(slope);
    if (std::isnan(c.u_proxy) && decreasing && N_grid.size() > 1 && slope > 0) c.u_proxy = u_grid[l];
  }
  return c;
}

}  // namespace tl
