#pragma once

#include "sfb/eigen_estimates.hpp"
#include "sfb/solve.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sfb {

struct VerifyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stokeslet flow with source x0 and strength a. The velocity is E(x - x0) a
// for every viscosity; pressure and stress carry the factor 2 mu.
class StokesletSolution {
 public:
  StokesletSolution(const Vec3& x0, const Vec3& a, double viscosity = 0.5);

  const Vec3& source() const { return x0_; }
  const Vec3& strength() const { return a_; }
  double viscosity() const { return mu_; }

  Vec3 u(const Vec3& x) const;
  Mat3 grad_u(const Vec3& x) const;  // (i, k) = d u_i / d x_k
  double p(const Vec3& x) const;
  Mat3 sigma(const Vec3& x) const;  // 2 mu (e(u) - p_hat I)
  Vec3 traction(const Vec3& x, const Vec3& n) const { return sigma(x) * n; }
  Vec3 div_sigma(const Vec3&) const { return Vec3::Zero(); }
  ExactFields fields() const;

 private:
  Vec3 x0_, a_;
  double mu_;
};

// Requires x0 inside the inner cube with margin 0.1 * inner_half_width.
StokesletSolution stokeslet_manufactured(const Vec3& x0, const Vec3& a, double inner_half_width,
                                         double viscosity = 0.5);

// Central-difference residuals at seeded points of the shell. Momentum is
// reported as |mu lap u - grad p| / (2 mu).
struct FdReport {
  int points = 0;
  unsigned seed = 0;
  double momentum = 0.0, divergence = 0.0;
  double gradient = 0.0;    // max |grad_u - FD grad| / |grad_u|
  // FD operators on a quadratic field, relative. Truncation vanishes, so these
  // are the roundoff floors: eps/h for the gradient and eps/h^2 for the Laplacian.
  double self_gradient = 0.0, self_laplacian = 0.0;
  double force = 0.0;       // |int_Gamma0 sigma n + a| / |a| with n out of the inner cube
};
FdReport stokeslet_fd_check(const StokesletSolution& s, double a, double b, int points = 20, unsigned seed = 20);

// Mesh hierarchy of the cube shell with boundary operators cached per level.
struct Workspace {
  MeshHierarchy H;
  OperatorCache cache;
  Workspace(double a, double b, int max_level, const QuadOptions& q = {});
  Workspace(MeshHierarchy h, const QuadOptions& q = {});
  double a() const { return H.a; }
  double b() const { return H.b; }
};

// Coarsening of the phi and lambda partitions. With coarse_fallback a level
// that has no coarser partition uses the volume trace mesh (ratio 1) instead.
struct MeshPolicy {
  int trace_coarsening = -1;  // -1: the formulation default
  int lambda_coarsening = 1;
  bool coarse_fallback = true;
};

struct LevelSetup {
  Discretization d;
  BuildOptions build;
  bool relaxed = false;  // the partition fell back to a finer one than requested
};
LevelSetup setup_level(const Workspace& w, FormulationKind kind, int level, const MeshPolicy& policy);

// log(e_c / e_f) / log(h_c / h_f).
double observed_rate(double e_coarse, double e_fine, double h_coarse, double h_fine);
// Strictly decreasing and the last value below half the first.
bool decays_to_zero(const std::vector<double>& v);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0, h_trace = 0.0;
  long unknowns = 0;
  ErrorRecord errors;
  SolveReport report;
  double seconds = 0.0;
};

struct ConvergenceTable {
  FormulationKind kind;
  std::vector<ConvergenceRow> rows;
  // Named fields: sigma, div_sigma, u, chi, p, phi_w, phi_l2, lambda (absolute errors).
  std::vector<double> errors(const std::string& field) const;
  std::vector<double> step_rates(const std::string& field) const;
  double overall_rate(const std::string& field) const;  // first to last level
};

// Solves `kind` at each level and compares with `exact`. The solutions are
// returned through `solutions` when it is non-null.
ConvergenceTable run_convergence(Workspace& w, FormulationKind kind, const std::vector<int>& levels,
                                 const ProblemData& data, const ExactFields& exact, const MeshPolicy& policy = {},
                                 std::vector<SolutionBundle>* solutions = nullptr);

// Stokeslet data for CH_Dirichlet (g_D = u) and CH_Neumann (g_N = sigma n).
ProblemData stokeslet_data(FormulationKind kind, const StokesletSolution& s);

// Symmetry, homogeneity and antisymmetry of E and Q at seeded pairs.
struct KernelAlgebraReport {
  int pairs = 0;
  unsigned seed = 0;
  double symmetry = 0.0, evenness = 0.0, homogeneity = 0.0;
  double q_oddness = 0.0, q_homogeneity = 0.0;
  double traction_grad = 0.0;  // stokeslet_traction against the gradient formula
  double max() const;
};
KernelAlgebraReport kernel_algebra_check(int pairs = 100, unsigned seed = 1);

struct OperatorStructure {
  int tris = 0;
  double V_symmetry = 0.0, W_symmetry = 0.0;  // ||X - X^T||_F / ||X||_F
  double V_nu = 0.0;                          // ||V nu|| / (||V|| ||nu||)
  double W_rm = 0.0;                          // max_k ||W z_k|| / (||W|| ||z_k||)
  int W_small = 0;                            // eigenvalues below 1e-8 lambda_max
  double W_max = 0.0, W_gap = 0.0;            // lambda_max and lambda_7 / lambda_max
  double V_min_complement = 0.0;              // relative to ||V||, on <m, rho> = 0
  bool V_definite = false;
};
OperatorStructure operator_structure(const SurfaceMesh& s, const BoundaryOperators& ops);

// Two-sided limits at seeded points inside surface triangles, by quadratic
// extrapolation from three off-surface distances. Errors are relative RMS
// over the points.
struct JumpReport {
  int points = 0;
  double h = 0.0;
  double single_velocity = 0.0;  // [S rho] = 0
  double double_velocity = 0.0;  // [D psi] = -psi
  double single_traction = 0.0;  // [t(S rho)] = rho
  double double_traction = 0.0;  // [t(D psi)] = 0
};
JumpReport jump_relations(const SurfaceMesh& s, int points = 24, unsigned seed = 3);

// Galerkin residuals of the two boundary integral equations for exterior
// Cauchy data (interpolated); dual L2 norms relative to the data.
struct CalderonReport {
  double h = 0.0;
  double bie1 = 0.0, bie2 = 0.0;
};
CalderonReport calderon_residual(const SurfaceMesh& s, const BoundaryOperators& ops, const StokesletSolution& st);

// The unconstrained system annihilates the constructed kernel vectors; with
// the rigid-motion rows it factors and maps zero data to zero.
struct KernelCertificate {
  FormulationKind kind;
  int level = 0;
  double kernel_residual = 0.0;  // max ||A z||_inf / (||A||_inf ||z||_inf)
  bool factored = false;
  double zero_solution = 0.0;
  double pivot_ratio = 0.0, pivot_ratio_without_rm = 0.0;
};
KernelCertificate kernel_certificate(Workspace& w, FormulationKind kind, int level, const MeshPolicy& policy = {},
                                     bool factor_without_rm = true);

// System, norms and kernel projector for the spectral estimates.
class SpectralProblem {
 public:
  SpectralProblem(Workspace& w, FormulationKind kind, int level, const MeshPolicy& policy = {});
  const LevelSetup& setup() const { return setup_; }
  const BlockSystem& system() const { return sys_; }
  double mesh_ratio() const { return setup_.d.h / setup_.d.h_trace; }
  CoercivityReport coercivity(double delta = 0.0, const LanczosOptions& opt = {}) const;
  InfSupReport infsup(const LanczosOptions& opt = {}) const;

 private:
  LevelSetup setup_;
  BlockSystem sys_;
  NormBlocks norms_;
  std::unique_ptr<KernelProjector> P_;
};

// Ascending scan; the accepted delta is the first with min > threshold * max.
struct DeltaScan {
  std::vector<CoercivityReport> tried;
  std::optional<double> delta;
};
std::vector<double> default_delta_ladder();  // 2^-10 ... 2^0
DeltaScan scan_delta(const SpectralProblem& p, const std::vector<double>& deltas, double threshold = 1e-4,
                     const LanczosOptions& opt = {});
inline bool coercive(const CoercivityReport& r, double threshold = 1e-4) { return r.min_eig > threshold * r.max_eig; }

struct CrossRow {
  int level = 0;
  double h = 0.0, jn_ratio = 0.0;
  double sigma_distance = 0.0, sigma_norm = 0.0;
  double u_distance = 0.0, u_norm = 0.0;  // u up to a rigid motion
};
std::vector<CrossRow> cross_formulation_check(Workspace& w, const std::vector<int>& levels, const VectorField& f,
                                              double viscosity = 0.5, const MeshPolicy& policy = {});

// L2 distance of piecewise constant velocities after removing the best rigid motion.
double velocity_distance_mod_rm(const TetMesh& m, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Relative RMS errors of the representation formula against the Stokeslet.
struct ExteriorReport {
  int points = 0;
  double radius = 0.0;
  double u_error = 0.0, p_error = 0.0;
};
std::vector<Vec3> sphere_points(int n, double radius);  // Fibonacci lattice
ExteriorReport exterior_errors(const ExteriorEvaluator& ev, const StokesletSolution& st, const std::vector<Vec3>& pts);
// Mean |u(r2 x)| / |u(r1 x)| and |p(r2 x)| / |p(r1 x)| over directions.
struct DecayReport {
  double r1 = 0.0, r2 = 0.0;
  double u_ratio = 0.0, p_ratio = 0.0;
  double u_expected = 0.0, p_expected = 0.0;
};
DecayReport far_field_decay(const ExteriorEvaluator& ev, int directions, double r1, double r2);

}  // namespace sfb
