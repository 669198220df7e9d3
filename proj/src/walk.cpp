#include "tiltlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace tl {

namespace {

struct Kahan {
  double s = 0, c = 0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

bool adjacent(const int* a, const int* b, int d) {
  int diff = 0;
  for (int k = 0; k < d; ++k) diff += std::abs(a[k] - b[k]);
  return diff == 1;
}

// appends a holding interval, merging with the previous one when the site
// did not change (confined -> SRW handover)
void append(TrajectorySegment& s, const int* x, double len) {
  if (s.size() > 0 && std::equal(x, x + s.d, s.at(s.size() - 1))) {
    s.holds.back() += len;
    return;
  }
  s.push(x, len);
}

}  // namespace

// ---------------------------------------------------------------- segment

double TrajectorySegment::duration() const {
  double t = 0;
  for (double h : holds) t += h;
  return t;
}

Point TrajectorySegment::at_time(double t) const {
  if (size() == 0) throw Error("empty trajectory");
  double s = t0;
  for (std::size_t k = 0; k + 1 < size(); ++k) {
    s += holds[k];
    if (t < s) return site(k);
  }
  return site(size() - 1);
}

bool TrajectorySegment::valid() const {
  if (xs.size() != holds.size() * d) return false;
  for (std::size_t k = 0; k < size(); ++k) {
    if (!(holds[k] > 0)) return false;
    if (k > 0 && !adjacent(at(k - 1), at(k), d)) return false;
  }
  return true;
}

void TrajectorySegment::write(std::ostream& os) const {
  int W = 0;
  for (int c : xs) W = std::max(W, std::abs(c));
  os << d << ' ' << W << ' ' << size() << '\n';
  char buf[64];
  for (std::size_t k = 0; k < size(); ++k) {
    for (int j = 0; j < d; ++j) os << at(k)[j] << ' ';
    std::snprintf(buf, sizeof buf, "%a", holds[k]);
    os << buf << '\n';
  }
}

TrajectorySegment TrajectorySegment::read(std::istream& is) {
  TrajectorySegment s;
  long W, count;
  if (!(is >> s.d >> W >> count) || s.d < 1 || count < 0) throw Error("bad trajectory header");
  s.xs.resize(std::size_t(count) * s.d);
  s.holds.resize(count);
  std::string tok;
  for (long k = 0; k < count; ++k) {
    for (int j = 0; j < s.d; ++j)
      if (!(is >> s.xs[k * s.d + j])) throw Error("truncated trajectory");
    if (!(is >> tok)) throw Error("truncated trajectory");
    s.holds[k] = std::strtod(tok.c_str(), nullptr);
  }
  return s;
}

// ---------------------------------------------------------------- model

ConfinedWalkModel::ConfinedWalkModel(std::shared_ptr<const TiltProfile> prof) : prof_(std::move(prof)) {
  const auto& P = *prof_;
  int d = P.d(), D = 2 * d;
  nbr_.assign(P.n() * D, -1);
  rate_.assign(P.n(), 0.0);
  cum_.assign(P.n() * D, 0.0);
  for (std::size_t i = 0; i < P.n(); ++i) {
    double s = 0;
    for (int j = 0; j < D; ++j) {
      int y = P.local[P.box.nbr(P.ids[i], j)];
      nbr_[i * D + j] = y;
      if (y >= 0) s += P.f[y];
      cum_[i * D + j] = s;
    }
    rate_[i] = s / (D * P.f[i]);
    for (int j = 0; j < D; ++j) cum_[i * D + j] /= s;
  }
  origin_ = P.index(Point(d, 0));
}

int ConfinedWalkModel::jump(std::size_t i, double u) const {
  int D = 2 * d();
  const double* c = cum_.data() + i * D;
  for (int j = 0; j < D - 1; ++j)
    if (u < c[j] && nbr_[i * D + j] >= 0) return j;
  for (int j = D - 1; j >= 0; --j)
    if (nbr_[i * D + j] >= 0) return j;
  return -1;
}

SpMat ConfinedWalkModel::generator() const {
  const auto& f = prof_->f;
  int D = 2 * d();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(n() * (D + 1));
  for (std::size_t i = 0; i < n(); ++i) {
    double diag = 0;
    for (int j = 0; j < D; ++j) {
      int y = nbr(i, j);
      if (y < 0) continue;
      double q = f[y] / (D * f[i]);
      t.emplace_back(int(i), y, q);
      diag += q;
    }
    t.emplace_back(int(i), int(i), -diag);
  }
  SpMat L(n(), n());
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

SpMat ConfinedWalkModel::symmetrized() const {
  int D = 2 * d();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(n() * (D + 1));
  for (std::size_t i = 0; i < n(); ++i) {
    for (int j = 0; j < D; ++j)
      if (nbr(i, j) >= 0) t.emplace_back(int(i), nbr(i, j), 1.0 / D);
    t.emplace_back(int(i), int(i), -rate_[i]);
  }
  SpMat S(n(), n());
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

double ConfinedWalkModel::edge_weight(std::size_t i, int j) const {
  int y = nbr(i, j);
  return y < 0 ? 0.0 : prof_->f[i] * prof_->f[y] / (2.0 * d());
}

double ConfinedWalkModel::dirichlet(const Vec& g) const {
  int D = 2 * d();
  double s = 0;
  for (std::size_t i = 0; i < n(); ++i)
    for (int j = 0; j < D; j += 2) {  // +e_k only, each edge once
      int y = nbr(i, j);
      if (y < 0) continue;
      double dg = g[i] - g[y];
      s += edge_weight(i, j) * dg * dg;
    }
  return s;
}

ConfinedWalkModel::Balance ConfinedWalkModel::detailed_balance() const {
  Balance b;
  SpMat L = generator();
  SpMat Lt = L.transpose();
  const auto& f = prof_->f;
  for (int i = 0; i < L.outerSize(); ++i) {
    // column i of L is row i of L^T
    double rs = 0;
    for (SpMat::InnerIterator it(Lt, i); it; ++it) rs += it.value();
    b.max_row_sum = std::max(b.max_row_sum, std::abs(rs));
  }
  for (int k = 0; k < L.outerSize(); ++k)
    for (SpMat::InnerIterator it(L, k); it; ++it) {
      int x = int(it.row()), y = int(it.col());
      if (x == y) continue;
      double a = pi(x) * it.value();
      double bb = pi(y) * L.coeff(y, x);
      b.max_imbalance = std::max(b.max_imbalance, std::abs(a - bb) / a);
      double w = f[x] * f[y] / (2.0 * d());
      b.max_weight_err = std::max(b.max_weight_err, std::abs(a - w) / w);
    }
  return b;
}

// ---------------------------------------------------------------- simulation

Point run_srw(const Point& x0, double t0, double t1, Rng& rng, const HoldVisitor& visit) {
  Point x = x0;
  int d = int(x.size());
  double t = t0;
  while (true) {
    double h = rng.exponential(1.0);
    double len = std::min(h, t1 - t);
    if (visit) visit(x.data(), t, len);
    t += h;
    if (t >= t1) break;
    int j = rng.below(2 * d);
    x[j >> 1] += (j & 1) ? -1 : 1;
  }
  return x;
}

int run_confined(const ConfinedWalkModel& m, int i0, double t0, double t1, Rng& rng,
                 const std::function<void(int, double, double)>& visit) {
  int i = i0;
  double t = t0;
  while (true) {
    double h = rng.exponential(m.rate(i));
    double len = std::min(h, t1 - t);
    if (visit) visit(i, t, len);
    t += h;
    if (t >= t1) break;
    i = m.nbr(i, m.jump(i, rng.uniform()));
  }
  return i;
}

TrajectorySegment simulate_srw(const Point& x0, double horizon, Rng& rng) {
  if (!(horizon > 0)) throw Error("horizon must be positive");
  TrajectorySegment s;
  s.d = int(x0.size());
  run_srw(x0, 0.0, horizon, rng, [&](const int* x, double, double len) { s.push(x, len); });
  return s;
}

TrajectorySegment simulate_confined(const ConfinedWalkModel& m, const Point& x0, double horizon, Rng& rng) {
  if (!(horizon > 0)) throw Error("horizon must be positive");
  int i0 = m.profile().index(x0);
  if (i0 < 0) throw Error("start outside U^N");
  const auto& P = m.profile();
  TrajectorySegment s;
  s.d = m.d();
  Point x(s.d);
  run_confined(m, i0, 0.0, horizon, rng, [&](int i, double, double len) {
    for (int k = 0; k < s.d; ++k) x[k] = P.box.coord(P.ids[i], k);
    s.push(x.data(), len);
  });
  return s;
}

TrajectorySegment simulate_tilted(const ConfinedWalkModel& m, double horizon, Rng& rng, const Point& x0) {
  if (!(horizon > 0)) throw Error("horizon must be positive");
  const auto& P = m.profile();
  Point start = x0.empty() ? Point(m.d(), 0) : x0;
  int i0 = P.index(start);
  if (i0 < 0) throw Error("start outside U^N");
  TrajectorySegment s;
  s.d = m.d();
  double T = std::min(P.TN, horizon);
  Point x(s.d);
  int last = i0;
  if (T > 0)
    last = run_confined(m, i0, 0.0, T, rng, [&](int i, double, double len) {
      for (int k = 0; k < s.d; ++k) x[k] = P.box.coord(P.ids[i], k);
      append(s, x.data(), len);
    });
  if (horizon > T) {
    for (int k = 0; k < s.d; ++k) x[k] = P.box.coord(P.ids[last], k);
    run_srw(x, T, horizon, rng, [&](const int* y, double, double len) { append(s, y, len); });
  }
  return s;
}

// ---------------------------------------------------------------- martingale

double radon_nikodym(const ConfinedWalkModel& m, const TrajectorySegment& seg, double T) {
  if (seg.size() == 0) throw Error("empty trajectory");
  const auto& P = m.profile();
  int i0 = P.index(seg.site(0));
  if (i0 < 0) throw Error("start outside U^N");
  if (T <= 0) return 1.0;
  if (seg.duration() < T * (1 - 1e-12)) throw Error("segment shorter than T");
  Kahan I;
  double t = 0;
  int cur = i0;
  for (std::size_t k = 0; k < seg.size() && t < T; ++k) {
    cur = P.index(seg.site(k));
    if (cur < 0) return 0.0;
    double len = std::min(seg.holds[k], T - t);
    I.add(P.v[cur] * len);
    t += seg.holds[k];
  }
  return P.f[cur] / P.f[i0] * std::exp(I.s);
}

double feynman_kac_mean(const ConfinedWalkModel& m, const Point& x, double T) {
  const auto& P = m.profile();
  int i = P.index(x);
  if (i < 0) throw Error("start outside U^N");
  Vec f = Eigen::Map<const Vec>(P.f.data(), Eigen::Index(P.n()));
  Vec g = expmv_sym(m.symmetrized(), f, T);
  return g[i] / f[i];
}

std::vector<Estimate> martingale_means(const ConfinedWalkModel& m, const Point& x,
                                       const std::vector<double>& times, long n, Rng& rng) {
  const auto& P = m.profile();
  int i0 = P.index(x);
  if (i0 < 0) throw Error("start outside U^N");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  double horizon = ts.empty() ? 0.0 : ts.back();
  std::vector<MeanAcc> acc(ts.size());
  std::vector<double> val(ts.size());
  for (long s = 0; s < n; ++s) {
    Rng r = rng.split(std::uint64_t(s));
    std::fill(val.begin(), val.end(), 0.0);
    std::size_t next = 0;
    while (next < ts.size() && ts[next] <= 0) val[next++] = 1.0;
    Kahan I;
    bool alive = true;
    if (horizon > 0)
      run_srw(x, 0.0, horizon, r, [&](const int* y, double start, double len) {
        if (!alive) return;
        int i = P.index(Point(y, y + P.d()));
        if (i < 0) {
          alive = false;
          return;
        }
        while (next < ts.size() && ts[next] < start + len) {
          val[next] = P.f[i] / P.f[i0] * std::exp(I.s + P.v[i] * (ts[next] - start));
          ++next;
        }
        I.add(P.v[i] * len);
        // the final interval is cut at the horizon, so t = horizon lands here
        if (start + len >= horizon)
          while (next < ts.size()) val[next++] = P.f[i] / P.f[i0] * std::exp(I.s);
      });
    for (std::size_t k = 0; k < ts.size(); ++k) acc[k].add(val[k]);
  }
  std::vector<Estimate> out;
  for (auto& a : acc) out.push_back({a.mean, a.se(), a.n});
  // back to the caller's order
  std::vector<Estimate> res(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    auto pos = std::lower_bound(ts.begin(), ts.end(), times[k]) - ts.begin();
    res[k] = out[pos];
  }
  return res;
}

ChangeOfMeasure change_of_measure_check(const ConfinedWalkModel& m, double T, int box_radius, long n, Rng& rng) {
  const auto& P = m.profile();
  int d = P.d();
  auto in_box = [&](const int* y) {
    for (int k = 0; k < d; ++k)
      if (std::abs(y[k]) > box_radius) return false;
    return true;
  };
  Point x0(d, 0);
  int i0 = m.origin();
  if (i0 < 0) throw Error("origin outside U^N");
  MeanAcc w, c, mm;
  Rng rs = rng.split(1), rc = rng.split(2);
  for (long s = 0; s < n; ++s) {
    Rng r = rs.split(std::uint64_t(s));
    Kahan I;
    double occ = 0;
    bool alive = true;
    int last = i0;
    run_srw(x0, 0.0, T, r, [&](const int* y, double, double len) {
      if (!alive) return;
      int i = P.index(Point(y, y + d));
      if (i < 0) {
        alive = false;
        return;
      }
      I.add(P.v[i] * len);
      if (in_box(y)) occ += len;
      last = i;
    });
    double M = alive ? P.f[last] / P.f[i0] * std::exp(I.s) : 0.0;
    w.add(M * occ);
    mm.add(M);
  }
  Point y(d);
  for (long s = 0; s < n; ++s) {
    Rng r = rc.split(std::uint64_t(s));
    double occ = 0;
    run_confined(m, i0, 0.0, T, r, [&](int i, double, double len) {
      for (int k = 0; k < d; ++k) y[k] = P.box.coord(P.ids[i], k);
      if (in_box(y.data())) occ += len;
    });
    c.add(occ);
  }
  return {{w.mean, w.se(), w.n}, {c.mean, c.se(), c.n}, {mm.mean, mm.se(), mm.n}};
}

// ---------------------------------------------------------------- entropy

EntropyReport relative_entropy_estimate(const ConfinedWalkModel& m, long n_samples, Rng& rng) {
  if (n_samples < 100) throw Error("need at least 100 samples");
  const auto& P = m.profile();
  int i0 = m.origin();
  if (i0 < 0) throw Error("origin outside U^N");
  EntropyReport rep;
  double TN = P.TN;
  rep.split = std::clamp(P.tstar, 0.0, TN);
  double fmax = *std::max_element(P.f.begin(), P.f.end());
  double fmin = *std::min_element(P.f.begin(), P.f.end());
  rep.log_f_ratio = std::log(fmax / fmin);
  Kahan ivp;
  for (std::size_t i = 0; i < P.n(); ++i) ivp.add(P.v[i] * m.pi(i));
  rep.int_v_dpi = ivp.s;
  // u(1+eps) E(h_N,h_N) = T_N * sum v pi
  rep.bound_main = TN * rep.int_v_dpi;
  MeanAcc a1, a2, a3, ah, ar;
  const double split = rep.split;
  for (long s = 0; s < n_samples; ++s) {
    Rng r = rng.split(std::uint64_t(s));
    Kahan I, II;
    int last = run_confined(m, i0, 0.0, TN, r, [&](int i, double start, double len) {
      double v = P.v[i];
      double end = start + len;
      if (end <= split) {
        I.add(v * len);
      } else if (start >= split) {
        II.add(v * len);
      } else {
        I.add(v * (split - start));
        II.add(v * (end - split));
      }
    });
    double III = std::log(P.f[last]) - std::log(P.f[i0]);
    if (std::abs(III) > rep.log_f_ratio * (1 + 1e-12)) ++rep.III_violations;
    a1.add(I.s);
    a2.add(II.s);
    a3.add(III);
    ah.add(I.s + II.s + III);
    if (TN > split) ar.add(II.s / (TN - split));
  }
  auto est = [](const MeanAcc& a) { return Estimate{a.mean, a.se(), a.n}; };
  rep.I = est(a1);
  rep.II = est(a2);
  rep.III = est(a3);
  rep.H = est(ah);
  rep.II_rate = est(ar);
  return rep;
}

double entropy_lower_bound(double p_tilt, double entropy) {
  if (!(p_tilt > 0)) throw Error("inequality vacuous");
  if (p_tilt > 1 || entropy < 0) throw Error("entropy bound needs p in (0,1] and H >= 0");
  return p_tilt * std::exp(-(entropy + std::exp(-1.0)) / p_tilt);
}

}  // namespace tl
