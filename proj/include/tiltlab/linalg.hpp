#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <vector>

namespace tl {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Sparse symmetric positive definite factorisation (CHOLMOD supernodal).
class SpdSolver {
 public:
  SpdSolver();
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;
  explicit SpdSolver(const SpMat& A) : SpdSolver() { compute(A); }
  void compute(const SpMat& A);
  Vec solve(const Vec& b) const;
  int rows() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

// Conjugate gradients for large SPD window problems; throws with the residual
// when the tolerance is not met.
Vec cg_solve(const SpMat& A, const Vec& b, double tol = 1e-13, const char* what = "cg");

using MatVec = std::function<void(const Vec& in, Vec& out)>;

struct LanczosResult {
  std::vector<double> values;  // descending
  std::vector<Vec> vectors;
  int iterations = 0;
  double residual = 0.0;  // largest Ritz residual among the returned pairs
};

// Symmetric Lanczos with full reorthogonalisation for the `nev` largest
// eigenpairs of a symmetric operator, working in the orthogonal complement of
// `deflate` (orthonormal vectors).
LanczosResult lanczos_largest(const MatVec& op, int n, int nev, const std::vector<Vec>& deflate,
                              int max_iter = 600, double tol = 1e-12, unsigned seed = 1);

// exp(tA) v for symmetric A with nonpositive spectrum, by uniformisation
// (Poisson-weighted Taylor series of I + A/c).
Vec expmv_sym(const SpMat& A, const Vec& v, double t, double tol = 1e-15);

// Symmetric part check helper: max |A - A^T|
double asymmetry(const SpMat& A);

}  // namespace tl
