#pragma once

#include "sfb/bem.hpp"
#include "sfb/geometry.hpp"
#include "sfb/spaces.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>

namespace sfb {

enum class FormulationKind { JN_NeumannHomog, CH_Dirichlet, CH_Neumann, CH_NeumannHomog };

std::string kind_name(FormulationKind k);  // "jn", "ch-dirichlet", "ch-neumann", "ch-neumann-homog"
FormulationKind parse_kind(const std::string& s);
// JN and the homogeneous Neumann variant use the zero-trace stress space.
bool uses_zero_trace(FormulationKind k);

struct FormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data of the transmission problem. Fields left empty are absent. Stresses
// follow the mu = 1/2 convention internally: with viscosity mu the force and
// traction are divided by 2 mu and the computed stress is multiplied back.
struct ProblemData {
  VectorField f;    // body force in the shell
  VectorField g_D;  // velocity on the inner boundary
  VectorField g_N;  // traction sigma nu on the inner boundary (nu into the shell)
  double viscosity = 0.5;

  double stress_scale() const { return 2.0 * viscosity; }
};

// Meshes and spaces of one formulation at one level. The boundary unknown phi
// lives on `trace_mesh`, which is the outer boundary of the volume mesh
// coarsened `trace_coarsening` times; lambda lives on the inner boundary
// coarsened `lambda_coarsening` times.
struct Discretization {
  FormulationKind kind;
  int level = 0;
  int trace_coarsening = 0;
  int lambda_coarsening = 0;
  const TetMesh* mesh = nullptr;
  SurfaceMesh gamma, gamma0;
  SurfaceMesh trace_mesh;
  SparseMatrix P_trace;  // trace_mesh P1 -> gamma P1
  SurfaceMesh lambda_mesh;
  SparseMatrix P_lambda;  // lambda_mesh P1 -> gamma0 P1
  std::unique_ptr<StressSpace> stress;
  double h = 0.0;        // volume mesh size
  double h_trace = 0.0;  // mesh size of the phi partition

  bool has_lambda() const { return kind == FormulationKind::CH_Neumann; }
};

// Default coarsening: JN needs h <= h_trace / 2, so the phi partition is one
// level coarser; lambda for CH_Neumann is one level coarser as well.
int default_trace_coarsening(FormulationKind k);
Discretization make_discretization(const MeshHierarchy& H, FormulationKind kind, int level,
                                   std::optional<int> trace_coarsening = std::nullopt, int lambda_coarsening = 1);

// Boundary operators on the outer boundary, reused across formulations.
class OperatorCache {
 public:
  explicit OperatorCache(QuadOptions q) : q_(q) {}
  const QuadOptions& options() const { return q_; }
  // Operators on `s`, identified by key (typically the hierarchy level).
  const BoundaryOperators& get(int key, const SurfaceMesh& s, unsigned which);

 private:
  QuadOptions q_;
  std::map<int, std::pair<unsigned, BoundaryOperators>> ops_;
};

struct BlockLayout {
  int n_sigma = 0, n_phi = 0, n_u = 0, n_chi = 0, n_lambda = 0, n_rm = 0;
  int sigma() const { return 0; }
  int phi() const { return n_sigma; }
  int u() const { return n_sigma + n_phi; }
  int chi() const { return u() + n_u; }
  int lambda() const { return chi() + n_chi; }
  int rm() const { return lambda() + n_lambda; }
  int primal() const { return n_sigma + n_phi; }  // (sigma, phi)
  int size() const { return rm() + n_rm; }
};

struct BlockInfo {
  std::string name;
  int rows, cols;
  long nnz;
  bool symmetric;  // only meaningful for square blocks
};

struct BlockSystem {
  FormulationKind kind;
  BlockLayout layout;
  SparseMatrix matrix;  // full system, rows = test functions
  Eigen::VectorXd rhs;
  std::vector<BlockInfo> blocks;
  bool with_rm = true;

  SparseMatrix a_block() const;   // (sigma, phi) x (sigma, phi)
  SparseMatrix b_block() const;   // (u, chi, lambda) x (sigma, phi)
  SparseMatrix constraints() const;  // b_block stacked with the RM rows on phi
};

struct BuildOptions {
  bool with_rm = true;  // append the 6 rigid-motion multiplier rows
  double mesh_ratio = 0.5;  // JN: required h / h_trace upper bound
  bool enforce_mesh_ratio = true;
};

// FEM blocks.
SparseMatrix assemble_dev_mass(const StressSpace& S);
SparseMatrix assemble_div_block(const StressSpace& S);   // velocity rows
SparseMatrix assemble_skew_block(const StressSpace& S);  // vorticity rows
// <gamma_nu tau, xi>_{Gamma0} with xi on the lambda partition: rows xi.
SparseMatrix assemble_gamma0_trace_block(const Discretization& d);

BlockSystem build_system(const Discretization& d, OperatorCache& cache, const ProblemData& data,
                         const BuildOptions& opt = {});

// Vectors in the kernel of the unconstrained homogeneous system, one per
// rigid motion of the phi partition.
std::vector<Eigen::VectorXd> kernel_vectors(const Discretization& d, const BlockLayout& layout);

// psi_tilde: P1 interpolant of the vertex-averaged normal with its rigid part removed.
Eigen::VectorXd t_transform_direction(const Discretization& d);
// T(sigma, phi) = (sigma, phi + delta c(sigma) psi_tilde) on the primal
// unknowns, c(sigma) = int tr sigma / |Omega|. Stored as the rank-one update
// T = I + delta psi c^T with both vectors sized to the primal unknowns.
struct TTransform {
  double delta = 0.0;
  Eigen::VectorXd c, psi;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return x + (delta * c.dot(x)) * psi; }
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const { return x - (delta * c.dot(x)) * psi; }
};
TTransform t_transform(const Discretization& d, const BlockLayout& layout, double delta);

}  // namespace sfb
