#include "sfb/sparse_lu.hpp"

#include <umfpack.h>

#include <dlfcn.h>
#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace sfb {

void ensure_blas_runtime(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE")) return;
  using CoreName = char* (*)();
  auto corename = reinterpret_cast<CoreName>(dlsym(RTLD_DEFAULT, "openblas_get_corename"));
  if (!corename) return;
  std::string name = corename();
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name != "cooperlake") return;
  // OpenBLAS reads the variable while it is loaded, so restart the process.
  setenv("OPENBLAS_CORETYPE", "SkylakeX", 1);
  execv("/proc/self/exe", argv);
}

SparseLU::SparseLU(const Eigen::SparseMatrix<double>& Ain) {
  if (Ain.rows() != Ain.cols()) throw std::invalid_argument("SparseLU: matrix is not square");
  Eigen::SparseMatrix<double> A = Ain;
  A.makeCompressed();
  n_ = A.rows();
  Ap_.assign(A.outerIndexPtr(), A.outerIndexPtr() + n_ + 1);
  Ai_.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
  Ax_.assign(A.valuePtr(), A.valuePtr() + A.nonZeros());
  for (long j = 0; j < n_; ++j) {
    double s = 0.0;
    for (long k = Ap_[j]; k < Ap_[j + 1]; ++k) s += std::abs(Ax_[k]);
    norm1_ = std::max(norm1_, s);
  }

  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_dl_defaults(control);
  // Smallest fill on the saddle systems among the strategies tried.
  control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_UNSYMMETRIC;
  control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
  void* symbolic = nullptr;
  long st = umfpack_dl_symbolic(n_, n_, Ap_.data(), Ai_.data(), Ax_.data(), &symbolic, control, info);
  if (st != UMFPACK_OK) {
    message_ = "symbolic factorization failed (status " + std::to_string(st) + ")";
    return;
  }
  st = umfpack_dl_numeric(Ap_.data(), Ai_.data(), Ax_.data(), symbolic, &numeric_, control, info);
  umfpack_dl_free_symbolic(&symbolic);
  rcond_ = info[UMFPACK_RCOND];
  if (st == UMFPACK_WARNING_singular_matrix) {
    singular_ = true;
    message_ = "matrix is singular";
    return;
  }
  if (st != UMFPACK_OK) {
    message_ = "numeric factorization failed (status " + std::to_string(st) + ")";
    if (numeric_) umfpack_dl_free_numeric(&numeric_);
    return;
  }
  ok_ = true;
  message_ = "ok";
}

SparseLU::~SparseLU() {
  if (numeric_) umfpack_dl_free_numeric(&numeric_);
}

Eigen::VectorXd SparseLU::solve_system(const Eigen::VectorXd& b, int sys) const {
  if (!numeric_) throw std::runtime_error("SparseLU: no factorization (" + message_ + ")");
  Eigen::VectorXd x(n_);
  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_dl_defaults(control);
  long st = umfpack_dl_solve(sys, Ap_.data(), Ai_.data(), Ax_.data(), x.data(), b.data(), numeric_, control, info);
  if (st != UMFPACK_OK && st != UMFPACK_WARNING_singular_matrix)
    throw std::runtime_error("SparseLU: solve failed (status " + std::to_string(st) + ")");
  return x;
}

Eigen::VectorXd SparseLU::solve(const Eigen::VectorXd& b) const { return solve_system(b, UMFPACK_A); }
Eigen::VectorXd SparseLU::solve_transpose(const Eigen::VectorXd& b) const { return solve_system(b, UMFPACK_At); }

double SparseLU::condition_estimate() const {
  // Hager's method for ||A^-1||_1, a few sweeps.
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n_, 1.0 / n_);
  double est = 0.0;
  long last = -1;
  for (int it = 0; it < 5; ++it) {
    Eigen::VectorXd y = solve(x);
    if (!y.allFinite()) return INFINITY;
    est = y.lpNorm<1>();
    Eigen::VectorXd xi = y.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
    Eigen::VectorXd z = solve_transpose(xi);
    Eigen::Index j;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= z.dot(x) || j == last) break;
    last = j;
    x.setZero();
    x[j] = 1.0;
  }
  // Higham's alternative test vector guards against unlucky sign patterns.
  Eigen::VectorXd alt(n_);
  for (long i = 0; i < n_; ++i) alt[i] = (i % 2 ? -1.0 : 1.0) * (1.0 + double(i) / double(std::max<long>(n_ - 1, 1)));
  const double est2 = 2.0 * solve(alt).lpNorm<1>() / (3.0 * n_);
  return norm1_ * std::max(est, est2);
}

}  // namespace sfb
