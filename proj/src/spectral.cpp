#include "tiltlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tl {

GapResult symmetric_gap(const SpMat& A, const Vec& ground, std::size_t dense_below) {
  GapResult g;
  const int n = int(A.rows());
  if (n < 2) throw Error("spectral gap needs at least two states");
  Vec u = ground.normalized();
  g.lambda1 = u.dot(A * u);
  if (std::size_t(n) <= dense_below) {
    Eigen::SelfAdjointEigenSolver<Mat> es{Mat(A)};
    if (es.info() != Eigen::Success) throw Error("dense eigensolver failed");
    // the eigenvector closest to the ground state is lambda_1; take the
    // smallest of the rest
    int k0 = 0;
    double best = -1;
    for (int k = 0; k < n; ++k) {
      double o = std::abs(es.eigenvectors().col(k).dot(u));
      if (o > best) best = o, k0 = k;
    }
    int k2 = k0 == 0 ? 1 : 0;
    for (int k = 0; k < n; ++k)
      if (k != k0 && es.eigenvalues()[k] < es.eigenvalues()[k2]) k2 = k;
    g.lambda2 = es.eigenvalues()[k2];
    g.vec = es.eigenvectors().col(k2);
    g.dense = true;
  } else {
    // shift-invert: the largest eigenvalue of (A + s)^{-1} off the ground
    // state is 1/(lambda_2 + s)
    double diag = 0;
    for (int k = 0; k < n; ++k) diag = std::max(diag, A.coeff(k, k));
    double s = 1e-4 * diag;
    SpMat B = A;
    for (int k = 0; k < n; ++k) B.coeffRef(k, k) += s;
    SpdSolver chol(B);
    auto op = [&](const Vec& in, Vec& out) { out = chol.solve(in); };
    auto L = lanczos_largest(op, n, 1, {u}, 800, 1e-13);
    g.iterations = L.iterations;
    g.vec = L.vectors[0];
    g.vec -= g.vec.dot(u) * u;
    g.vec.normalize();
    g.lambda2 = g.vec.dot(A * g.vec);
  }
  g.residual = (A * g.vec - g.lambda2 * g.vec).norm();
  return g;
}

GapResult exact_spectral_gap(const ConfinedWalkModel& m, std::size_t cap) {
  if (m.n() > cap) throw Error("state space above the eigensolve cap (" + std::to_string(m.n()) + " sites)");
  SpMat A = -m.symmetrized();
  const auto& f = m.profile().f;
  Vec u = Eigen::Map<const Vec>(f.data(), Eigen::Index(f.size()));
  return symmetric_gap(A, u);
}

// ---------------------------------------------------------------- canonical paths

namespace {

// calls run(axis, from, to, cur) for every straight run of gamma(x,y), with
// cur the path point where the run starts; cur ends at y
template <class F>
void for_each_run(int d, const int* x, const int* y, int* cur, F&& run) {
  for (int k = 0; k < d; ++k) cur[k] = x[k];
  for (int phase = 0; phase < 2; ++phase)
    for (int i = 0; i < d; ++i) {
      if (x[i] == y[i]) continue;
      bool dec = std::abs(x[i]) >= std::abs(y[i]);
      if (dec != (phase == 0)) continue;
      run(i, cur[i], y[i], cur);
      cur[i] = y[i];
    }
}

}  // namespace

std::vector<Point> CanonicalPathPlan::path(const Point& x, const Point& y) const {
  std::vector<Point> out{x};
  Point cur(d);
  for_each_run(d, x.data(), y.data(), cur.data(), [&](int i, int a, int b, int* c) {
    Point p(c, c + d);
    int s = b > a ? 1 : -1;
    for (int t = a + s;; t += s) {
      p[i] = t;
      out.push_back(p);
      if (t == b) break;
    }
  });
  return out;
}

int CanonicalPathPlan::length(const Point& x, const Point& y) {
  int l = 0;
  for (std::size_t k = 0; k < x.size(); ++k) l += std::abs(x[k] - y[k]);
  return l;
}

Congestion congestion_bound(const ConfinedWalkModel& m, const CanonicalPathPlan& plan, bool keep_counts) {
  const auto& P = m.profile();
  const int d = P.d();
  if (plan.d != d) throw Error("path plan dimension mismatch");
  const Box& box = P.box;
  const std::size_t n = P.n();
  // difference arrays along each axis: edge {p, p+e_k} is stored at id(p);
  // load and pair count interleaved so one cache line serves both
  std::vector<std::vector<double>> acc(d, std::vector<double>(2 * box.size(), 0.0));
  std::vector<int> xs(n * d);
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) xs[i * d + k] = box.coord(P.ids[i], k);
    pi[i] = m.pi(i);
  }
  std::vector<std::int64_t> stride(d);
  for (int k = 0; k < d; ++k) stride[k] = box.stride(k);
  std::vector<int> cur(d);
  for (std::size_t a = 0; a < n; ++a) {
    const int* x = &xs[a * d];
    const double pa = pi[a];
    const std::int64_t ida = P.ids[a];
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const int* y = &xs[b * d];
      int len = 0;
      for (int k = 0; k < d; ++k) len += std::abs(x[k] - y[k]);
      const double w = len * pa * pi[b];
      std::int64_t id = ida;
      for_each_run(d, x, y, cur.data(), [&](int i, int from, int to, int*) {
        // edges with lower coordinate in [min, max)
        std::int64_t lo = id + std::int64_t(std::min(from, to) - from) * stride[i];
        std::int64_t hi = id + std::int64_t(std::max(from, to) - from) * stride[i];
        double* A = acc[i].data();
        A[2 * lo] += w;
        A[2 * lo + 1] += 1.0;
        A[2 * hi] -= w;
        A[2 * hi + 1] -= 1.0;
        id += std::int64_t(to - from) * stride[i];
      });
    }
  }
  Congestion c;
  c.A = 0;
  double total_pairs = 0;
  for (int k = 0; k < d; ++k) {
    double* A = acc[k].data();
    // prefix sums along axis k; ids increase along each line
    for (std::int64_t id = 0; id < box.size(); ++id)
      if (box.coord(id, k) > box.center()[k] - box.half()) {
        A[2 * id] += A[2 * (id - stride[k])];
        A[2 * id + 1] += A[2 * (id - stride[k]) + 1];
      }
    for (std::size_t i = 0; i < n; ++i) {
      int j = m.nbr(i, 2 * k);
      if (j < 0) continue;
      std::int64_t id = P.ids[i];
      double W = m.edge_weight(i, 2 * k);
      double r = A[2 * id] / W;
      ++c.edges;
      total_pairs += A[2 * id + 1];
      c.max_pairs = std::max(c.max_pairs, A[2 * id + 1]);
      if (r > c.A) {
        c.A = r;
        c.edge_axis = k;
        c.edge_lo = box.point(id);
      }
    }
  }
  c.mean_pairs = c.edges ? total_pairs / c.edges : 0.0;
  c.bound = c.A > 0 ? 1.0 / c.A : 0.0;
  if (keep_counts) {
    c.pairs_through.resize(d);
    for (int k = 0; k < d; ++k) {
      c.pairs_through[k].resize(box.size());
      for (std::int64_t id = 0; id < box.size(); ++id) c.pairs_through[k][id] = acc[k][2 * id + 1];
    }
  }
  return c;
}

// ---------------------------------------------------------------- relaxation

RelaxationReport relaxation_check(const ConfinedWalkModel& m, const std::vector<double>& times, std::size_t cap) {
  const std::size_t n = m.n();
  if (n > cap) throw Error("state space above the dense cap (" + std::to_string(n) + " sites)");
  const auto& f = m.profile().f;
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(-Mat(m.symmetrized()))};
  if (es.info() != Eigen::Success) throw Error("dense eigensolver failed");
  RelaxationReport rep;
  // eigenvalues ascending; the first is the ground state f
  rep.lambda2 = es.eigenvalues()[1];
  double fmax = *std::max_element(f.begin(), f.end());
  double fmin = *std::min_element(f.begin(), f.end());
  const Mat& Phi = es.eigenvectors();
  Mat Phi2 = Phi.rightCols(n - 1);
  Vec lam = es.eigenvalues().tail(n - 1);
  Vec fv = Eigen::Map<const Vec>(f.data(), Eigen::Index(n));
  for (double t : times) {
    // P_t(x,y) - pi(y) = f(y)/f(x) sum_{k>=2} e^{-lambda_k t} phi_k(x) phi_k(y)
    Mat E = Phi2 * (-lam * t).array().exp().matrix().asDiagonal() * Phi2.transpose();
    E = fv.cwiseInverse().asDiagonal() * E * fv.asDiagonal();
    double dev = E.cwiseAbs().maxCoeff();
    double bnd = fmax / fmin * std::exp(-rep.lambda2 * t);
    rep.times.push_back(t);
    rep.deviation.push_back(dev);
    rep.bound.push_back(bnd);
    if (dev > bnd * (1 + 1e-9)) rep.holds = false;
    if (rep.deviation.size() > 1 && dev > rep.deviation[rep.deviation.size() - 2] * (1 + 1e-9) + 1e-15)
      rep.monotone = false;
  }
  return rep;
}

}  // namespace tl
