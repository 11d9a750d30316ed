#pragma once

#include "sfb/geometry.hpp"
#include "sfb/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace sfb {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct QuadOptions {
  int singular_order = 6;   // Gauss points per direction of the Sauter-Schwab cube
  int regular_points = 4;   // n x n collapsed Gauss points per triangle, separated pairs
  int near_depth = 4;       // subdivision depth for close, non-touching pairs
  double near_ratio = 2.0;  // centroid distance / diameter below which pairs are subdivided
  bool parallel = true;

  static QuadOptions accurate() { return {12, 4, 4, 2.0, true}; }
};

// Discrete trace spaces on a SurfaceMesh:
//   P1 (continuous, vector):      dof 3*v + c
//   facet density (linear, discontinuous per triangle, vector): dof 9*t + 3*i + c
inline int p1_dofs(const SurfaceMesh& s) { return 3 * s.num_vertices(); }
inline int density_dofs(const SurfaceMesh& s) { return 9 * s.num_tris(); }

// <rho_i, phi_j> for density rows and P1 columns.
SparseMatrix mass_density_p1(const SurfaceMesh& s);
// <phi_i, phi_j> on P1 (vector).
SparseMatrix mass_p1(const SurfaceMesh& s);
// <rho_i, rho_j> on densities (block diagonal).
SparseMatrix mass_density(const SurfaceMesh& s);

// Galerkin boundary operators.
enum OperatorFlags : unsigned { kOpV = 1, kOpK = 2, kOpW = 4, kOpAll = 7 };
struct BoundaryOperators {
  Eigen::MatrixXd V, K, W;
};
// One pass over the triangle pairs for the requested operators. Results are
// identical for serial and threaded runs.
BoundaryOperators assemble_operators(const SurfaceMesh& s, const QuadOptions& q, unsigned which = kOpAll);
Eigen::MatrixXd assemble_V(const SurfaceMesh& s, const QuadOptions& q);  // density x density
Eigen::MatrixXd assemble_K(const SurfaceMesh& s, const QuadOptions& q);  // <rho_i, K phi_j>, density x P1
Eigen::MatrixXd assemble_W(const SurfaceMesh& s, const QuadOptions& q);  // P1 x P1

// Quadrature points of one Galerkin pair: barycentrics in the original local
// vertex order of each triangle, physical points, and weight with Jacobians.
struct PairPoint {
  double w;
  std::array<double, 3> la, lb;
  Vec3 x, y;
};
PairKind classify_pair(const SurfaceMesh& s, int a, int b);
void pair_points(const SurfaceMesh& s, int a, int b, const QuadOptions& q, std::vector<PairPoint>& out);

// Piecewise-linear surface field given by its values at the vertices of every triangle.
struct TriangleField {
  std::vector<std::array<Vec3, 3>> v;
};
TriangleField field_from_p1(const SurfaceMesh& s, const Eigen::VectorXd& coeffs);
TriangleField field_from_density(const SurfaceMesh& s, const Eigen::VectorXd& coeffs);

struct PotentialValue {
  Vec3 u = Vec3::Zero();
  double p = 0.0;
  Mat3 grad = Mat3::Zero();  // grad(i, k) = d u_i / d x_k
};

// Single layer (S, Phi) and double layer (D, Pi) potentials at an off-surface
// point. Close points use a sinh-regularised polar rule around the projection.
PotentialValue single_layer_potential(const SurfaceMesh& s, const TriangleField& rho, const Vec3& x,
                                      bool with_gradient = false);
PotentialValue double_layer_potential(const SurfaceMesh& s, const TriangleField& psi, const Vec3& x,
                                      bool with_gradient = false);

// Quadrature over one triangle for an off-surface point x; calls
// f(weight, barycentric, y).
template <class F>
void integrate_point_triangle(const SurfaceMesh& s, int t, const Vec3& x, F&& f);

}  // namespace sfb

#include "sfb/bem_impl.hpp"
