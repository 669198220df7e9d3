#include "tiltlab/excursions.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tiltlab/interlacements.hpp"
#include "tiltlab/potential.hpp"

namespace tl {

// ---------------------------------------------------------------- decomposition

ExcursionScanner::ExcursionScanner(const MesoscopicBoxes& b, double tbar) : tbar_(tbar) {
  if (!(tbar >= 0)) throw Error("tbar must be nonnegative");
  const Box& box = b.A[0].box();
  a1_.assign(box.size(), -1);
  a2_.assign(box.size(), 0);
  const auto& ids = b.A[0].ids();
  for (std::size_t k = 0; k < ids.size(); ++k) a1_[ids[k]] = int(k);
  for (auto id : b.A[1].ids()) a2_[id] = 1;
  seen_.assign(ids.size(), 0);
}

void ExcursionScanner::reset() {
  out_ = {};
  open_ = false;
  out_since_ = -1;
  holds_ = 0;
}

void ExcursionScanner::feed(std::int64_t id, double start, double len) {
  std::size_t k = holds_++;
  int p = a1_pos(id);
  if (!open_) {
    if (p < 0) return;
    open_ = true;
    out_.R.push_back(start);
    out_.traces.emplace_back();
    if (++stamp_ == 0) {
      std::fill(seen_.begin(), seen_.end(), 0);
      stamp_ = 1;
    }
    out_since_ = -1;
  }
  if (p >= 0 && seen_[p] != stamp_) {
    seen_[p] = stamp_;
    out_.traces.back().push_back(p);
  }
  if (id >= 0 && a2_[id]) {
    out_since_ = -1;
    return;
  }
  if (out_since_ < 0) out_since_ = start;
  if (start + len >= out_since_ + tbar_) {
    out_.V.push_back(out_since_ + tbar_);
    out_.L.push_back(k);
    open_ = false;
  }
}

ExcursionDecomposition decompose(const TrajectorySegment& traj, const MesoscopicBoxes& b, double tbar) {
  ExcursionScanner sc(b, tbar);
  const Box& box = b.A[0].box();
  double t = traj.t0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    Point x = traj.site(k);
    sc.feed(box.contains(x) ? box.id(x) : -1, t, traj.holds[k]);
    t += traj.holds[k];
  }
  return sc.result();
}

// ---------------------------------------------------------------- excursion processes

std::string kind_name(ExcursionKind k) {
  switch (k) {
    case ExcursionKind::kappa1: return "kappa1";
    case ExcursionKind::kappa2: return "kappa2";
    case ExcursionKind::kappa2prime: return "kappa2prime";
  }
  return "?";
}

bool ExcursionProcess::vacant_on(const std::vector<int>& Q) const {
  for (int k : Q)
    if (hit[k]) return false;
  return true;
}

namespace {

int draw(const std::vector<double>& cum, Rng& rng) {
  int k = int(std::lower_bound(cum.begin(), cum.end(), rng.uniform()) - cum.begin());
  return std::min(k, int(cum.size()) - 1);
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0;
  for (std::size_t k = 0; k < w.size(); ++k) c[k] = s += w[k];
  for (double& x : c) x /= s;
  c.back() = 1.0;
  return c;
}

}  // namespace

ExcursionSampler::ExcursionSampler(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double tbar)
    : m_(m), b_(b), tbar_(tbar < 0 ? m.profile().tstar : tbar) {
  const auto& P = m.profile();
  if (!(b.A[0].box() == P.box)) throw Error("boxes do not live on the profile box");
  auto eq = equilibrium_measure(b.A[0], 0, false);
  cap_ = eq.cap;
  for (double e : eq.e) et_.push_back(e / cap_);
  et_cum_ = cumulative(eq.e);
  a1_pos_.assign(m.n(), -1);
  for (auto id : b.A[0].ids()) {
    int i = P.local[id];
    if (i < 0) throw Error("A1 leaves U^N");
    a1_pos_[i] = int(a1_local_.size());
    a1_local_.push_back(i);
  }
  in_a2_.assign(m.n(), 0);
  for (auto id : b.A[1].ids()) in_a2_[P.local[id]] = 1;
  K_ = killed_operator(m, b);
  q_ = principal_eigenpair(K_);
  sigma_cum_ = cumulative(std::vector<double>(q_.sigma.data(), q_.sigma.data() + q_.sigma.size()));
}

ExcursionSampler::Excursion ExcursionSampler::run(int start, Rng& rng, bool wait_for_A1) const {
  int i = start;
  if (wait_for_A1)
    while (a1_pos_[i] < 0) i = m_.nbr(i, m_.jump(i, rng.uniform()));
  Excursion e;
  e.start = i;
  std::vector<std::uint8_t> seen_long(a1_local_.size(), 0), seen_short(a1_local_.size(), 0);
  bool short_open = true;
  double t = 0, out_since = -1;
  while (true) {
    int p = a1_pos_[i];
    if (p >= 0) {
      if (!seen_long[p]) {
        seen_long[p] = 1;
        e.range_long.push_back(p);
      }
      if (short_open && !seen_short[p]) {
        seen_short[p] = 1;
        e.range_short.push_back(p);
      }
    }
    double h = rng.exponential(m_.rate(i));
    if (in_a2_[i]) {
      out_since = -1;
    } else {
      short_open = false;
      if (out_since < 0) out_since = t;
      if (t + h >= out_since + tbar_) {
        e.length = out_since + tbar_;
        return e;
      }
    }
    t += h;
    i = m_.nbr(i, m_.jump(i, rng.uniform()));
  }
}

ExcursionProcess ExcursionSampler::fill(ExcursionKind kind, double intensity, long count) const {
  ExcursionProcess p;
  p.kind = kind;
  p.intensity = intensity;
  p.count = count;
  p.hit.assign(a1_local_.size(), 0);
  return p;
}

ExcursionProcess ExcursionSampler::sample(ExcursionKind kind, double intensity, Rng& rng) const {
  if (intensity < 0) throw Error("negative intensity");
  auto p = fill(kind, intensity, rng.poisson(intensity));
  for (long c = 0; c < p.count; ++c) {
    int s = kind == ExcursionKind::kappa1 ? K_.sites[draw(sigma_cum_, rng)] : a1_local_[draw(et_cum_, rng)];
    auto e = run(s, rng, kind == ExcursionKind::kappa1);
    auto& r = kind == ExcursionKind::kappa2prime ? e.range_short : e.range_long;
    for (int a : r) p.hit[a] = 1;
    p.starts.push_back(s);
    p.ranges.push_back(std::move(r));
  }
  return p;
}

std::pair<ExcursionProcess, ExcursionProcess> ExcursionSampler::sample_long_short(double intensity, Rng& rng) const {
  if (intensity < 0) throw Error("negative intensity");
  long n = rng.poisson(intensity);
  auto L = fill(ExcursionKind::kappa2, intensity, n), S = fill(ExcursionKind::kappa2prime, intensity, n);
  for (long c = 0; c < n; ++c) {
    int s = a1_local_[draw(et_cum_, rng)];
    auto e = run(s, rng, false);
    for (int a : e.range_long) L.hit[a] = 1;
    for (int a : e.range_short) S.hit[a] = 1;
    L.starts.push_back(s);
    S.starts.push_back(s);
    L.ranges.push_back(std::move(e.range_long));
    S.ranges.push_back(std::move(e.range_short));
  }
  return {std::move(L), std::move(S)};
}

// ---------------------------------------------------------------- counting

int excursion_target(double u, double eps, double capA1) {
  int J = int(std::floor((1 + eps / 2) * u * capA1));
  if (J < 1) throw Error("A1 too small for meaningful J");
  return J;
}

CountTail excursion_count_tail(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double u, double eps, long n_runs,
                               Rng& rng, double tbar) {
  const auto& P = m.profile();
  CountTail c;
  c.J = excursion_target(u, eps, capacity(b.A[0]));
  c.T = P.TN;
  ExcursionScanner sc(b, tbar < 0 ? P.tstar : tbar);
  long short_runs = 0;
  for (long r = 0; r < n_runs; ++r) {
    Rng g = rng.split(std::uint64_t(r));
    sc.reset();
    if (c.T > 0)
      run_confined(m, m.origin(), 0.0, c.T, g, [&](int i, double s, double len) { sc.feed(P.ids[i], s, len); });
    const auto& R = sc.result().R;
    long k = long(R.size());
    short_runs += k < c.J;
    if (std::size_t(k) >= c.histogram.size()) c.histogram.resize(k + 1, 0);
    ++c.histogram[k];
    c.count.add(double(k));
    for (std::size_t j = 1; j < R.size(); ++j) c.cycle.add(R[j] - R[j - 1]);
  }
  c.tail = wilson(short_runs, n_runs);
  c.renewal_proxy = c.cycle.n > 0 ? c.T / c.cycle.mean : 0.0;
  return c;
}

// ---------------------------------------------------------------- domination

QFamily default_q_family(const MesoscopicBoxes& b, Rng& rng) {
  const SiteSet& A1 = b.A[0];
  const Box& box = A1.box();
  auto pos = [&](std::int64_t id) {
    return int(std::lower_bound(A1.ids().begin(), A1.ids().end(), id) - A1.ids().begin());
  };
  QFamily q;
  q.names.push_back("empty");
  q.sets.push_back({});
  auto ib = A1.inner_boundary();
  for (auto id : ib.ids()) {
    Point x = box.point(id);
    std::string n = "site";
    for (int c : x) n += ":" + std::to_string(c);
    q.names.push_back(n);
    q.sets.push_back({pos(id)});
  }
  if (!ib.contains(box.id(b.x0))) {
    q.names.push_back("x0");
    q.sets.push_back({pos(box.id(b.x0))});
  }
  int a = b.a[0];
  if (a >= 1) {
    // corners of 2-boxes inside A1: x0 + [-a, a-1]^d
    for (int k = 0; k < 3; ++k) {
      Point lo = b.x0;
      for (auto& c : lo) c += rng.below(2 * a) - a;
      std::vector<int> s;
      int d = box.d();
      for (int mask = 0; mask < (1 << d); ++mask) {
        Point y = lo;
        for (int j = 0; j < d; ++j) y[j] += (mask >> j) & 1;
        s.push_back(pos(box.id(y)));
      }
      std::string n = "box2";
      for (int c : lo) n += ":" + std::to_string(c);
      q.names.push_back(n);
      q.sets.push_back(s);
    }
  }
  return q;
}

DominationReport domination_diagnostics(const ConfinedWalkModel& m, const MesoscopicBoxes& b, double u, double eps,
                                        long n_runs, Rng& rng, int first_index, double tbar, const QFamily* family) {
  const auto& P = m.profile();
  ExcursionSampler S(m, b, tbar);
  InterlacementSampler I(b.A[0]);
  DominationReport rep;
  rep.J = excursion_target(u, eps, S.cap());
  rep.eta1 = (1 + eps / 3) * u * S.cap();
  rep.eta2 = (1 + eps / 4) * u * S.cap();
  rep.u_ri = u * (1 + eps / 8);
  {
    Rng qr = rng.split(0xfa);
    rep.Q = family ? *family : default_q_family(b, qr);
  }
  rep.laws = {"walk", "I1", "I2", "I2prime", "interlacement"};
  const std::size_t nl = rep.laws.size(), nq = rep.Q.sets.size();
  std::vector<std::vector<long>> vac(nl, std::vector<long>(nq, 0));
  ExcursionScanner sc(b, S.tbar());
  std::vector<std::uint8_t> walk_hit(b.A[0].size());
  for (long r = 0; r < n_runs; ++r) {
    Rng g = rng.split(std::uint64_t(r) + 1);
    // true excursions first_index..J of the confined walk from the origin
    {
      Rng w = g.split(0);
      sc.reset();
      int i = m.origin();
      double t = 0;
      while (sc.result().V.size() < std::size_t(rep.J)) {
        double h = w.exponential(m.rate(i));
        sc.feed(P.ids[i], t, h);
        t += h;
        i = m.nbr(i, m.jump(i, w.uniform()));
      }
      std::fill(walk_hit.begin(), walk_hit.end(), 0);
      const auto& tr = sc.result().traces;
      for (int k = std::max(first_index, 1) - 1; k < rep.J; ++k)
        for (int p : tr[k]) walk_hit[p] = 1;
    }
    Rng g1 = g.split(1), g2 = g.split(2), g3 = g.split(3);
    auto i1 = S.sample(ExcursionKind::kappa1, rep.eta1, g1);
    auto [i2, i2p] = S.sample_long_short(rep.eta2, g2);
    auto ri = I.sample(rep.u_ri, g3);
    for (std::size_t a = 0; a < i2.hit.size(); ++a)
      if (i2p.hit[a] > i2.hit[a]) {
        ++rep.prefix_violations;
        break;
      }
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& Q = rep.Q.sets[q];
      bool wv = true;
      for (int p : Q) wv = wv && !walk_hit[p];
      vac[0][q] += wv;
      vac[1][q] += i1.vacant_on(Q);
      vac[2][q] += i2.vacant_on(Q);
      vac[3][q] += i2p.vacant_on(Q);
      vac[4][q] += ri.vacant_on(Q);
    }
  }
  rep.vacancy.assign(nl, {});
  for (std::size_t l = 0; l < nl; ++l)
    for (std::size_t q = 0; q < nq; ++q) rep.vacancy[l].push_back(wilson(vac[l][q], n_runs));
  for (std::size_t l = 0; l + 1 < nl; ++l)
    for (std::size_t q = 0; q < nq; ++q) {
      const auto &a = rep.vacancy[l][q], &c = rep.vacancy[l + 1][q];
      if (a.value > c.value + 3 * std::hypot(a.se, c.se))
        rep.violations.push_back(rep.laws[l] + "<" + rep.laws[l + 1] + ":" + rep.Q.names[q]);
    }
  rep.holds = rep.violations.empty() && rep.prefix_violations == 0;
  return rep;
}

// ---------------------------------------------------------------- tilted path events

namespace {

// x0 <-> inner boundary of A1 inside A1, vacant sites only
struct LocalBlock {
  int start = -1;
  std::vector<std::int64_t> world;       // per A1 position
  std::vector<std::array<int, 6>> nb;    // A1 positions, -1 outside A1
  std::vector<std::uint8_t> rim;

  bool connected(const std::vector<std::uint8_t>& vacant, std::vector<int>& queue,
                 std::vector<std::uint8_t>& seen) const {
    if (!vacant[start]) return false;
    seen.assign(world.size(), 0);
    queue.assign(1, start);
    seen[start] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int x = queue[h];
      if (rim[x]) return true;
      for (int y : nb[x])
        if (y >= 0 && !seen[y] && vacant[y]) {
          seen[y] = 1;
          queue.push_back(y);
        }
    }
    return false;
  }
};

}  // namespace

TiltedEvents tilted_events(const ConfinedWalkModel& m, const std::vector<MesoscopicBoxes>& boxes, int window,
                           long n_runs, Rng& rng, double tbar) {
  const auto& P = m.profile();
  const int d = m.d();
  if (d != 3) throw Error("tilted events are implemented for d = 3");
  TiltedEvents ev;
  ev.window = window > 0 ? window : 4 * P.N();
  Box world(d, std::max(ev.window, P.box.half()) + 1);
  const int edge = world.half() - 1;
  std::vector<std::int64_t> KN = blow_up(P.params.K, P.N(), world).ids();
  std::vector<std::int64_t> wid(m.n());
  std::vector<int> xs(m.n() * d);
  for (std::size_t i = 0; i < m.n(); ++i) {
    Point x = P.box.point(P.ids[i]);
    wid[i] = world.id(x);
    for (int k = 0; k < d; ++k) xs[i * d + k] = x[k];
  }
  std::vector<LocalBlock> blocks;
  std::vector<ExcursionScanner> scanners;
  const double tb = tbar < 0 ? P.tstar : tbar;
  for (auto& b : boxes) {
    const SiteSet& A1 = b.A[0];
    LocalBlock lb;
    auto ib = A1.inner_boundary();
    for (auto id : A1.ids()) {
      Point x = P.box.point(id);
      lb.world.push_back(world.id(x));
      lb.rim.push_back(ib.contains(id));
      std::array<int, 6> nb;
      for (int j = 0; j < 6; ++j) {
        auto y = P.box.nbr(id, j);
        nb[j] = A1.contains(y) ? int(std::lower_bound(A1.ids().begin(), A1.ids().end(), y) - A1.ids().begin()) : -1;
      }
      lb.nb.push_back(nb);
    }
    lb.start = int(std::lower_bound(A1.ids().begin(), A1.ids().end(), P.box.id(b.x0)) - A1.ids().begin());
    blocks.push_back(std::move(lb));
    scanners.emplace_back(b, tb);
    ev.x0.push_back(b.x0);
  }
  const std::size_t nb = boxes.size();
  std::vector<long> full(nb, 0), restr(nb, 0);
  long disc = 0;
  Disconnection dis(world);
  std::vector<std::uint8_t> occ(world.size(), 0);
  std::vector<std::vector<std::uint8_t>> late(nb);
  std::vector<std::uint8_t> vac, seen;
  std::vector<int> queue;
  for (long r = 0; r < n_runs; ++r) {
    Rng g = rng.split(std::uint64_t(r));
    std::fill(occ.begin(), occ.end(), 0);
    Point lo(d, 1 << 30), hi(d, -(1 << 30));
    auto mark = [&](std::int64_t id, const int* x) {
      occ[id] = 1;
      for (int k = 0; k < d; ++k) lo[k] = std::min(lo[k], x[k]), hi[k] = std::max(hi[k], x[k]);
    };
    for (std::size_t k = 0; k < nb; ++k) {
      scanners[k].reset();
      late[k].assign(blocks[k].world.size(), 0);
    }
    int last = m.origin();
    if (P.TN > 0)
      last = run_confined(m, m.origin(), 0.0, P.TN, g, [&](int i, double s, double len) {
        mark(wid[i], &xs[i * d]);
        for (std::size_t k = 0; k < nb; ++k) {
          auto& sc = scanners[k];
          sc.feed(P.ids[i], s, len);
          int p = sc.a1_pos(P.ids[i]);
          if (p >= 0 && sc.result().size() >= 2) late[k][p] = 1;
        }
      });
    else
      mark(wid[last], &xs[last * d]);
    // simple random walk after T_N until it leaves the world box interior
    int x[3] = {xs[last * d], xs[last * d + 1], xs[last * d + 2]};
    while (std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])}) <= edge) {
      mark(world.id(Point{x[0], x[1], x[2]}), x);
      int j = g.below(6);
      x[j >> 1] += (j & 1) ? -1 : 1;
    }
    disc += dis.disconnected(occ, lo, hi, KN, ev.window);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& lb = blocks[k];
      vac.resize(lb.world.size());
      for (std::size_t p = 0; p < vac.size(); ++p) vac[p] = !occ[lb.world[p]];
      bool cf = lb.connected(vac, queue, seen);
      for (std::size_t p = 0; p < vac.size(); ++p) vac[p] = !late[k][p];
      bool cr = lb.connected(vac, queue, seen);
      full[k] += cf;
      restr[k] += cr;
      ev.pathwise_violations += cf && !cr;
    }
  }
  ev.disconnect = wilson(disc, n_runs);
  for (std::size_t k = 0; k < nb; ++k) {
    ev.connect.push_back(wilson(full[k], n_runs));
    ev.connect_restricted.push_back(wilson(restr[k], n_runs));
  }
  return ev;
}

TiltedEvents local_blocking_probability(const ConfinedWalkModel& m, const MesoscopicBoxes& b, int window, long n_runs,
                                        Rng& rng) {
  return tilted_events(m, {b}, window, n_runs, rng);
}

Estimate srw_disconnection_mc(const CompactShape& K, int N, int window, long n_runs, Rng& rng) {
  if (K.d() != 3) throw Error("direct disconnection estimate is implemented for d = 3");
  if (window < 1) throw Error("window must be positive");
  Box world(3, window + 1);
  auto KN = blow_up(K, N, world).ids();
  std::vector<std::uint8_t> occ(world.size(), 0);
  std::vector<std::int64_t> touched;
  Disconnection dis(world);
  long k = 0;
  for (long r = 0; r < n_runs; ++r) {
    Rng g = rng.split(std::uint64_t(r));
    for (auto id : touched) occ[id] = 0;
    touched.clear();
    Point lo(3, 0), hi(3, 0);
    int x[3] = {0, 0, 0};
    while (std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])}) <= window) {
      auto id = world.id(Point{x[0], x[1], x[2]});
      if (!occ[id]) {
        occ[id] = 1;
        touched.push_back(id);
        for (int j = 0; j < 3; ++j) lo[j] = std::min(lo[j], x[j]), hi[j] = std::max(hi[j], x[j]);
      }
      int j = g.below(6);
      x[j >> 1] += (j & 1) ? -1 : 1;
    }
    k += dis.disconnected(occ, lo, hi, KN, window);
  }
  return wilson(k, n_runs);
}

// ---------------------------------------------------------------- Khasminskii

Khasminskii khasminskii_check(const KilledOperator& K, int n_max) {
  if (n_max < 1) throw Error("n_max must be at least 1");
  // (-L) m = b  <=>  (-S)(f m) = f b
  SpdSolver chol(SpMat(-K.S));
  Khasminskii k;
  Vec mn = Vec::Ones(K.n());
  k.sup_m.push_back(1.0);
  k.bound.push_back(1.0);
  for (int n = 1; n <= n_max; ++n) {
    mn = double(n) * chol.solve(K.f.cwiseProduct(mn)).cwiseQuotient(K.f);
    k.sup_m.push_back(mn.maxCoeff());
    k.bound.push_back(std::tgamma(n + 1.0) * std::pow(k.sup_m[1], n));
    if (k.sup_m[n] > k.bound[n] * (1 + 1e-8)) k.holds = false;
  }
  return k;
}

Khasminskii khasminskii_check(const ConfinedWalkModel& m, const SiteSet& target, int n_max) {
  return khasminskii_check(killed_operator(m, target), n_max);
}

}  // namespace tl
