#include "tiltlab/linalg.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <random>
#include <string>

#include "tiltlab/common.hpp"

namespace tl {

struct SpdSolver::Impl {
  Eigen::CholmodSupernodalLLT<SpMat> llt;
};

SpdSolver::SpdSolver() : impl_(std::make_unique<Impl>()) {}
SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

void SpdSolver::compute(const SpMat& A) {
  n_ = int(A.rows());
  impl_->llt.compute(A);
  if (impl_->llt.info() != Eigen::Success) throw Error("cholesky factorisation failed (matrix not SPD?)");
}

Vec SpdSolver::solve(const Vec& b) const {
  Vec x = impl_->llt.solve(b);
  if (impl_->llt.info() != Eigen::Success) throw Error("cholesky solve failed");
  return x;
}

Vec cg_solve(const SpMat& A, const Vec& b, double tol, const char* what) {
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(std::max<int>(1000, int(20 * std::sqrt(double(A.rows())) + 2000)));
  cg.compute(A);
  Vec x = cg.solve(b);
  if (cg.info() != Eigen::Success) {
    double res = (A * x - b).norm() / std::max(1e-300, b.norm());
    if (res > 100 * tol)
      throw Error(std::string(what) + ": solver did not converge, relative residual " + std::to_string(res) +
                  " after " + std::to_string(cg.iterations()) + " iterations");
  }
  return x;
}

static void orthogonalise(Vec& w, const std::vector<Vec>& basis, int upto) {
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < upto; ++i) w -= basis[i].dot(w) * basis[i];
}

LanczosResult lanczos_largest(const MatVec& op, int n, int nev, const std::vector<Vec>& deflate,
                              int max_iter, double tol, unsigned seed) {
  LanczosResult res;
  int kmax = std::min(max_iter, n - int(deflate.size()));
  if (kmax < nev) throw Error("lanczos: space too small");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Vec q(n);
  for (int i = 0; i < n; ++i) q[i] = nd(gen);
  orthogonalise(q, deflate, int(deflate.size()));
  q.normalize();

  std::vector<Vec> Q;
  std::vector<double> alpha, beta;
  Vec w(n);
  for (int k = 0; k < kmax; ++k) {
    Q.push_back(q);
    op(q, w);
    double a = q.dot(w);
    alpha.push_back(a);
    w -= a * q;
    if (k > 0) w -= beta[k - 1] * Q[k - 1];
    orthogonalise(w, deflate, int(deflate.size()));
    orthogonalise(w, Q, int(Q.size()));
    double b = w.norm();

    int m = k + 1;
    bool check = m >= nev && (m % 5 == 0 || m == kmax || b < 1e-14);
    if (check) {
      Mat T = Mat::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Mat> es(T);
      bool ok = true;
      double worst = 0;
      for (int j = 0; j < nev; ++j) {
        int c = m - 1 - j;
        double theta = es.eigenvalues()[c];
        double r = std::abs(b * es.eigenvectors()(m - 1, c));
        worst = std::max(worst, r / std::max(std::abs(theta), 1e-300));
        if (r > tol * std::abs(theta)) ok = false;
      }
      if (ok || m == kmax || b < 1e-14) {
        res.iterations = m;
        res.residual = worst;
        for (int j = 0; j < nev; ++j) {
          int c = m - 1 - j;
          res.values.push_back(es.eigenvalues()[c]);
          Vec v = Vec::Zero(n);
          for (int i = 0; i < m; ++i) v += es.eigenvectors()(i, c) * Q[i];
          res.vectors.push_back(v.normalized());
        }
        if (!ok && b >= 1e-14)
          throw Error("lanczos: no convergence after " + std::to_string(m) + " iterations (residual " +
                      std::to_string(worst) + ")");
        return res;
      }
    }
    beta.push_back(b);
    q = w / b;
  }
  throw Error("lanczos: exhausted");
}

Vec expmv_sym(const SpMat& A, const Vec& v, double t, double tol) {
  if (t == 0) return v;
  // c bounds the spectral radius (Gershgorin), so I + A/c has spectrum in [-1,1]
  double c = 0;
  for (int j = 0; j < A.outerSize(); ++j) {
    double s = 0;
    for (SpMat::InnerIterator it(A, j); it; ++it) s += std::abs(it.value());
    c = std::max(c, s);
  }
  if (c == 0) return v;
  double lam = c * t;
  Vec term = v, out = Vec::Zero(v.size());
  // Poisson weights in log space
  double logw = -lam;
  double acc = 0.0;
  long kmax = long(lam + 10 * std::sqrt(lam) + 50);
  for (long k = 0; k <= kmax; ++k) {
    double wk = std::exp(logw);
    out += wk * term;
    acc += wk;
    if (1.0 - acc < tol && k > lam) break;
    term = term + (A * term) / c;
    logw += std::log(lam) - std::log(double(k + 1));
  }
  return out;
}

double asymmetry(const SpMat& A) {
  SpMat D = SpMat(A.transpose()) - A;
  double m = 0;
  for (int j = 0; j < D.outerSize(); ++j)
    for (SpMat::InnerIterator it(D, j); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace tl
