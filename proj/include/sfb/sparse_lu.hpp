#pragma once

#include <Eigen/Sparse>

#include <memory>
#include <string>

namespace sfb {

// The Cooper Lake kernels of OpenBLAS 0.3.20 return NaN inside UMFPACK's dense
// updates. When that core is detected and OPENBLAS_CORETYPE is unset, this
// sets it to SkylakeX and re-executes the program. Call first thing in main.
void ensure_blas_runtime(char** argv);

// Thin wrapper over UMFPACK (64-bit index interface) with a 1-norm condition
// estimate. The factorization is single threaded.
class SparseLU {
 public:
  explicit SparseLU(const Eigen::SparseMatrix<double>& A);
  ~SparseLU();
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;

  bool ok() const { return ok_; }
  bool singular() const { return singular_; }  // UMFPACK reported a zero pivot
  const std::string& message() const { return message_; }
  // min |U_ii| / max |U_ii| as reported by UMFPACK.
  double pivot_ratio() const { return rcond_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& b) const;
  // Hager / Higham estimate of ||A||_1 ||A^-1||_1.
  double condition_estimate() const;

 private:
  Eigen::VectorXd solve_system(const Eigen::VectorXd& b, int sys) const;

  long n_ = 0;
  std::vector<long> Ap_, Ai_;
  std::vector<double> Ax_;
  void* numeric_ = nullptr;
  bool ok_ = false, singular_ = false;
  double rcond_ = 0.0, norm1_ = 0.0;
  std::string message_;
};

}  // namespace sfb
