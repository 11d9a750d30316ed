#pragma once

#include "sfb/forms.hpp"
#include "sfb/sparse_lu.hpp"

#include <functional>
#include <memory>

namespace sfb {

using LinearOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LanczosOptions {
  int max_iterations = 400;
  double tolerance = 1e-7;  // residual bound relative to the spectral radius estimate
  bool want_min = true, want_max = true;
  unsigned seed = 7;
  // Optional map back onto the invariant subspace, applied every
  // `restore_every` steps.
  LinearOp restore;
  int restore_every = 4;
};

struct LanczosResult {
  double min = 0.0, max = 0.0;
  double min_residual = 0.0, max_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Extreme eigenvalues of `op`, self-adjoint in the inner product x^T M y.
// `start` must satisfy any constraint the operator preserves. Full
// reorthogonalisation in the M inner product.
LanczosResult lanczos_extremes(const LinearOp& op, const LinearOp& M, const Eigen::VectorXd& start,
                               const LanczosOptions& opt = {});

// Norm Gram matrices of the primal space (sigma in H(div), phi in the
// W-energy + L2 surrogate of H^{1/2}) and the multiplier space.
struct NormBlocks {
  SparseMatrix N_sigma;
  Eigen::MatrixXd N_phi;
  Eigen::VectorXd M_velocity, M_vorticity;  // diagonal
  Eigen::MatrixXd M_lambda;                 // W + L2 on the lambda partition
};
NormBlocks norm_blocks(const Discretization& d, OperatorCache& cache);

// N-orthogonal projection onto the discrete kernel
//   V = {(sigma, phi): B sigma = 0, R phi = 0}
// and the Schur complement solves B N^-1 B^T. The sigma saddle system is
// factored once; the phi part is a small dense system.
class KernelProjector {
 public:
  KernelProjector(const BlockSystem& sys, const NormBlocks& norms);
  int primal_size() const { return n_sigma_ + n_phi_; }
  int multiplier_size() const { return n_mult_; }
  // z in V with N z - g orthogonal to V.
  Eigen::VectorXd solve(const Eigen::VectorXd& g) const;
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;  // N-orthogonal projection
  Eigen::VectorXd apply_N(const Eigen::VectorXd& x) const;
  // (B N_sigma^-1 B^T)^-1 y on the (u, chi, lambda) multipliers.
  Eigen::VectorXd schur_inverse(const Eigen::VectorXd& y) const;
  const SparseMatrix& B() const { return B_; }
  double factor_seconds() const { return factor_seconds_; }

 private:
  int n_sigma_, n_phi_, n_mult_;
  SparseMatrix N_sigma_, B_, K_;
  Eigen::MatrixXd N_phi_;
  std::unique_ptr<SparseLU> lu_;
  Eigen::PartialPivLU<Eigen::MatrixXd> phi_lu_;
  Eigen::MatrixXd R_;
  double factor_seconds_ = 0.0;
};

struct CoercivityReport {
  double delta = 0.0;  // T-transform parameter, 0 when not used
  double min_eig = 0.0, max_eig = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Extremes of sym(T^T A) restricted to V relative to N, T = I + delta psi c^T
// (T = I when `t` is null).
CoercivityReport kernel_coercivity(const BlockSystem& sys, const KernelProjector& P, const TTransform* t,
                                   const LanczosOptions& opt = {});

struct InfSupReport {
  double beta = 0.0;  // smallest singular value of B in the scaled norms
  int iterations = 0;
  bool converged = false;
};
InfSupReport discrete_infsup(const BlockSystem& sys, const KernelProjector& P, const NormBlocks& norms,
                             const LanczosOptions& opt = {});

// Dense references used by the tests on coarse meshes: kernel basis by SVD,
// then the generalized symmetric eigenproblem.
double dense_kernel_min_eig(const BlockSystem& sys, const NormBlocks& norms, const TTransform* t);
double dense_infsup(const BlockSystem& sys, const NormBlocks& norms);

}  // namespace sfb
