#pragma once

#include "sfb/forms.hpp"
#include "sfb/sparse_lu.hpp"

#include <functional>
#include <memory>
#include <string>

namespace sfb {

using ScalarField = std::function<double(const Vec3&)>;

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coefficients of one solve. sigma is stored in the mu = 1/2 scaling used by
// the system; multiply by stress_scale for physical units.
struct SolutionBundle {
  FormulationKind kind;
  BlockLayout layout;
  double h = 0.0, h_trace = 0.0;
  double stress_scale = 1.0;
  Eigen::VectorXd sigma, phi, u, chi, lambda, rm;
};

struct SolveReport {
  double residual = 0.0;     // ||A x - b|| / ||b||, or ||A x|| when b = 0
  double pivot_ratio = 0.0;  // min |U_ii| / max |U_ii|
  double condition = -1.0;   // 1-norm estimate, -1 if not computed
  int refinement_steps = 0;
  double factor_seconds = 0.0, solve_seconds = 0.0;
  long unknowns = 0;
};

struct SolveOptions {
  double residual_tolerance = 1e-9;
  int max_refinement = 3;
  bool estimate_condition = false;
  // Condition estimates above this are treated as a singular system.
  double singular_condition = 1e13;
};

// Sparse LU of a block system with residual checking and iterative refinement.
class DirectSolver {
 public:
  DirectSolver(const SparseMatrix& A, const SolveOptions& opt = {});
  Eigen::VectorXd solve(const Eigen::VectorXd& b, SolveReport* report = nullptr) const;
  const SparseLU& lu() const { return *lu_; }
  const SolveReport& factor_report() const { return base_; }

 private:
  const SparseMatrix* A_;
  SolveOptions opt_;
  std::unique_ptr<SparseLU> lu_;
  SolveReport base_;
};

SolutionBundle split_solution(const BlockSystem& sys, const Discretization& d, const ProblemData& data,
                              const Eigen::VectorXd& x);
Eigen::VectorXd join_solution(const SolutionBundle& s);

struct SolveResult {
  SolutionBundle solution;
  SolveReport report;
};
SolveResult solve_direct(const BlockSystem& sys, const Discretization& d, const ProblemData& data,
                         const SolveOptions& opt = {});

// Per-tet p = -tr(sigma) / 3 of the cell average, times `scale`.
Eigen::VectorXd recover_pressure(const StressSpace& S, const Eigen::VectorXd& sigma, double scale = 1.0);

// Exterior velocity and pressure from u = -S(gamma_nu sigma) + D(phi) and
// p = -Phi(gamma_nu sigma) + Pi(phi).
struct ExteriorSample {
  Vec3 x, u;
  double p = 0.0;
};
class ExteriorEvaluator {
 public:
  ExteriorEvaluator(const Discretization& d, const SolutionBundle& s);
  // Traces given directly: traction density on d.gamma and P1 velocity on d.gamma.
  ExteriorEvaluator(const SurfaceMesh& gamma, const Eigen::VectorXd& traction_density,
                    const Eigen::VectorXd& velocity_p1, double stress_scale, double h);
  ExteriorSample eval(const Vec3& x) const;
  std::vector<ExteriorSample> eval(const std::vector<Vec3>& xs) const;

 private:
  const SurfaceMesh* gamma_;
  TriangleField t_, phi_;
  double scale_ = 1.0, h_ = 0.0, half_width_ = 0.0;
};

// Exact fields in physical units. Leave a member empty to skip that error.
struct ExactFields {
  TensorField sigma;
  VectorField u;
  TensorField grad_u;
  VectorField div_sigma;
  ScalarField p;
};

struct FieldError {
  double error = 0.0, norm = 0.0;
  double relative() const { return norm > 0.0 ? error / norm : error; }
};

struct ErrorRecord {
  FieldError sigma, div_sigma, u, chi, p;
  // phi - I(u) on the trace partition with its rigid-motion part removed:
  // W-energy seminorm and L2(Gamma).
  FieldError phi_w, phi_l2;
  FieldError lambda;  // L2(Gamma0) of lambda - I(u), CH_Neumann only
  bool has_lambda = false;
};

ErrorRecord energy_errors(const Discretization& d, const SolutionBundle& s, const ExactFields& exact,
                          const Eigen::MatrixXd* W_trace = nullptr, int degree = 4);

// L2 distance between two stress coefficient vectors of the same space.
double stress_l2_distance(const StressSpace& S, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace sfb
