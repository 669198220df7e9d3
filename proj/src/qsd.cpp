#include "tiltlab/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tiltlab/potential.hpp"

namespace tl {

KilledOperator killed_operator(const ConfinedWalkModel& m, const SiteSet& removed) {
  const auto& P = m.profile();
  KilledOperator K;
  std::vector<std::uint8_t> out(m.n(), 0);
  for (auto id : removed.ids()) {
    int i = P.local[id];
    if (i < 0) throw Error("removed set leaves U^N");
    out[i] = 1;
  }
  K.pos.assign(m.n(), -1);
  for (std::size_t i = 0; i < m.n(); ++i)
    if (!out[i]) {
      K.pos[i] = int(K.sites.size());
      K.sites.push_back(int(i));
    }
  const int n = int(K.n());
  if (n == 0) throw Error("killed domain is empty");
  const int D = 2 * m.d();
  std::vector<Eigen::Triplet<double>> lt, st;
  K.f.resize(n);
  K.pi.resize(n);
  for (int r = 0; r < n; ++r) {
    int i = K.sites[r];
    K.f[r] = P.f[i];
    K.pi[r] = m.pi(i);
    lt.emplace_back(r, r, -m.rate(i));
    st.emplace_back(r, r, -m.rate(i));
    bool rim = false;
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(i, j);
      if (y >= 0 && out[y]) rim = true;
      if (y < 0 || K.pos[y] < 0) continue;
      lt.emplace_back(r, K.pos[y], P.f[y] / (D * P.f[i]));
      st.emplace_back(r, K.pos[y], 1.0 / D);
    }
    if (rim) K.rim.push_back(r);
  }
  K.L.resize(n, n);
  K.L.setFromTriplets(lt.begin(), lt.end());
  K.S.resize(n, n);
  K.S.setFromTriplets(st.begin(), st.end());
  K.pi /= K.pi.sum();
  return K;
}

KilledOperator killed_operator(const ConfinedWalkModel& m, const MesoscopicBoxes& b) {
  return killed_operator(m, b.A[1]);
}

namespace {

bool connected(const SpMat& S) {
  const int n = int(S.rows());
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<int> q{0};
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int i = q.front();
    q.pop_front();
    for (SpMat::InnerIterator it(S, i); it; ++it) {
      int j = int(it.row());
      if (j != i && it.value() != 0 && !seen[j]) {
        seen[j] = 1;
        ++count;
        q.push_back(j);
      }
    }
  }
  return count == n;
}

}  // namespace

QuasiStationary principal_eigenpair(const KilledOperator& K, int k, std::size_t dense_below) {
  const int n = int(K.n());
  if (k < 1) throw Error("need at least one eigenvalue");
  if (!connected(K.S)) throw Error("Perron-Frobenius inapplicable: D is disconnected");
  k = std::min(k, n);
  SpMat A = -K.S;
  QuasiStationary q;
  Vec psi;
  if (std::size_t(n) <= dense_below) {
    Eigen::SelfAdjointEigenSolver<Mat> es{Mat(A)};
    if (es.info() != Eigen::Success) throw Error("dense eigensolver failed");
    for (int j = 0; j < k; ++j) q.spectrum.push_back(es.eigenvalues()[j]);
    psi = es.eigenvectors().col(0);
  } else {
    SpdSolver chol(A);
    auto op = [&](const Vec& in, Vec& out) { out = chol.solve(in); };
    auto L = lanczos_largest(op, n, k, {}, 800, 1e-13);
    for (double mu : L.values) q.spectrum.push_back(1 / mu);
    psi = L.vectors[0].normalized();
    q.spectrum[0] = psi.dot(A * psi);
  }
  q.lambda1 = q.spectrum[0];
  q.lambda2 = k > 1 ? q.spectrum[1] : NAN;
  if (psi.sum() < 0) psi = -psi;
  double mass = 0;
  for (int r = 0; r < n; ++r) mass += K.f[r] * K.f[r];
  // sum pi^D f1^2 = 1 with pi^D = f^2 / mass
  q.f1 = psi.cwiseQuotient(K.f) * std::sqrt(mass);
  if (!(q.f1.minCoeff() > 0)) throw Error("principal eigenfunction not positive");
  q.sigma = q.f1.cwiseProduct(K.pi);
  q.sigma /= q.sigma.sum();
  Vec r = -(K.L * q.f1) - q.lambda1 * q.f1;
  q.residual = std::sqrt(K.pi.dot(r.cwiseProduct(r)));
  return q;
}

double qsd_exit_time(const KilledOperator& K, const Vec& sigma) {
  // (-L) h = 1  <=>  (-S)(f h) = f
  SpdSolver chol(SpMat(-K.S));
  Vec h = chol.solve(K.f).cwiseQuotient(K.f);
  return sigma.dot(h);
}

// ---------------------------------------------------------------- convergence

namespace {

double tv_to(const Vec& row, const Vec& sigma) {
  double z = row.sum();
  return 0.5 * (row / z - sigma).cwiseAbs().sum();
}

}  // namespace

QsdConvergence qsd_convergence_check(const KilledOperator& K, const QuasiStationary& q, std::vector<double> times,
                                     std::size_t all_below, std::size_t sample) {
  std::sort(times.begin(), times.end());
  if (!times.empty() && times.front() < 0) throw Error("negative time");
  const int n = int(K.n());
  QsdConvergence c;
  c.times = times;
  c.tv.assign(times.size(), 0.0);
  if (std::size_t(n) <= all_below) {
    c.all_starts = true;
    c.starts = n;
    Eigen::SelfAdjointEigenSolver<Mat> es{Mat(-Mat(K.S))};
    if (es.info() != Eigen::Success) throw Error("dense eigensolver failed");
    const Mat& Phi = es.eigenvectors();
    for (std::size_t k = 0; k < times.size(); ++k) {
      Mat E = Phi * (-es.eigenvalues() * times[k]).array().exp().matrix().asDiagonal() * Phi.transpose();
      for (int x = 0; x < n; ++x) {
        Vec row = E.row(x).transpose().cwiseProduct(K.f);
        c.tv[k] = std::max(c.tv[k], tv_to(row, q.sigma));
      }
    }
  } else {
    // starts next to the killing first, then spread over D
    const auto& edge = K.rim;
    std::vector<int> xs;
    std::size_t half = std::min(edge.size(), sample / 2);
    for (std::size_t j = 0; j < half; ++j) xs.push_back(edge[j * edge.size() / half]);
    std::size_t rest = sample - half;
    for (std::size_t j = 0; j < rest; ++j) xs.push_back(int(j * std::size_t(n) / rest));
    c.starts = xs.size();
    for (int x : xs) {
      Vec v = Vec::Zero(n);
      v[x] = 1;
      double t0 = 0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        v = expmv_sym(K.S, v, times[k] - t0);
        t0 = times[k];
        c.tv[k] = std::max(c.tv[k], tv_to(v.cwiseProduct(K.f), q.sigma));
      }
    }
  }
  for (std::size_t k = 1; k < c.tv.size(); ++k)
    if (c.tv[k] > c.tv[k - 1] * (1 + 1e-9) + 1e-14) c.monotone = false;
  return c;
}

// ---------------------------------------------------------------- hitting distribution

QsdHitting hitting_distribution_from_qsd(const ConfinedWalkModel& m, const MesoscopicBoxes& b,
                                         const KilledOperator& K, const QuasiStationary& q) {
  const auto& P = m.profile();
  QsdHitting h;
  // adjoint solve on I = U^N \ A1: nu = sigma G_I, then one step into A1
  std::vector<std::uint8_t> in1(m.n(), 0);
  for (auto id : b.A[0].ids()) in1[P.local[id]] = 1;
  std::vector<int> sel(m.n(), -1);
  int n = 0;
  for (std::size_t i = 0; i < m.n(); ++i)
    if (!in1[i]) sel[i] = n++;
  const int D = 2 * m.d();
  std::vector<Eigen::Triplet<double>> t;
  Vec rhs = Vec::Zero(n);
  for (std::size_t i = 0; i < m.n(); ++i) {
    int r = sel[i];
    if (r < 0) continue;
    t.emplace_back(r, r, m.rate(i));
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(i, j);
      if (y >= 0 && sel[y] >= 0) t.emplace_back(r, sel[y], -1.0 / D);
    }
  }
  for (std::size_t k = 0; k < K.n(); ++k) {
    int i = K.sites[k];
    if (in1[i]) throw Error("sigma charges A1");
    rhs[sel[i]] = q.sigma[k] / P.f[i];
  }
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  SpdSolver chol(A);
  Vec w = chol.solve(rhs);  // nu / f
  auto eq = equilibrium_measure(b.A[0], 0, false);
  auto bd = b.A[0].inner_boundary();
  const auto& ids = b.A[0].ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!bd.contains(ids[k])) continue;
    int x = P.local[ids[k]];
    double p = 0;
    for (int j = 0; j < D; ++j) {
      int y = m.nbr(x, j);
      if (y >= 0 && sel[y] >= 0) p += w[sel[y]] * P.f[x] / D;
    }
    h.sites.push_back(P.box.point(ids[k]));
    h.p.push_back(p);
    h.e_tilde.push_back(eq.e[k] / eq.cap);
    h.total += p;
    h.max_dev = std::max(h.max_dev, std::abs(p / h.e_tilde.back() - 1));
  }
  h.fitted_c = h.max_dev > 0 ? -std::log(h.max_dev) / std::log(double(P.N())) : INFINITY;
  return h;
}

// ---------------------------------------------------------------- exchange

double reversibility_exchange_check(const KilledOperator& K, const std::vector<std::pair<int, int>>& pairs,
                                    double t) {
  SpMat Lt = K.L.transpose();
  const int n = int(K.n());
  double worst = 0;
  for (auto [x, y] : pairs) {
    if (x == y) continue;
    Vec ex = Vec::Zero(n), ey = Vec::Zero(n);
    ex[x] = 1;
    ey[y] = 1;
    double a = K.pi[x] * expmv_sym(Lt, ex, t)[y];
    double b = K.pi[y] * expmv_sym(Lt, ey, t)[x];
    double s = std::max(std::abs(a), std::abs(b));
    if (s > 0) worst = std::max(worst, std::abs(a - b) / s);
  }
  return worst;
}

SigmaComparison sigma_comparison_check(const ConfinedWalkModel& m, const KilledOperator& K, const QuasiStationary& q,
                                       const std::vector<std::pair<int, int>>& pairs) {
  SigmaComparison s;
  s.C = K.pi.minCoeff() / K.pi.maxCoeff();
  s.worst = INFINITY;
  const int n = int(K.n());
  const int D = 2 * m.d();
  for (auto [x, y] : pairs) {
    double p = 1;
    if (x != y) {
      // P_y[H_x < H_removed] on D \ {x}
      std::vector<int> sel(n, -1);
      int k = 0;
      for (int r = 0; r < n; ++r)
        if (r != x) sel[r] = k++;
      std::vector<Eigen::Triplet<double>> t;
      Vec rhs = Vec::Zero(k);
      for (int r = 0; r < n; ++r) {
        if (sel[r] < 0) continue;
        for (SpMat::InnerIterator it(K.S, r); it; ++it) {
          int c = int(it.row());
          if (c == x) rhs[sel[r]] += K.f[x] / D;
          else if (sel[c] >= 0) t.emplace_back(sel[r], sel[c], -it.value());
        }
      }
      SpMat A(k, k);
      A.setFromTriplets(t.begin(), t.end());
      Vec w = SpdSolver(A).solve(rhs);
      p = w[sel[y]] / K.f[y];
    }
    if (p <= 0) continue;
    double r = q.sigma[y] / (s.C * p * q.sigma[x]);
    s.worst = std::min(s.worst, r);
  }
  s.holds = s.worst >= 1 - 1e-12;
  return s;
}

}  // namespace tl
