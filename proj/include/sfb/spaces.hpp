#pragma once

#include "sfb/bem.hpp"
#include "sfb/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>

namespace sfb {

using TensorField = std::function<Mat3(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;

// Row-wise BDM1 stress space (the stress part of the lowest order AFW
// element). Global dof (facet f, facet vertex i, row r) is the value of
// (row r of sigma) . n_f at vertex f.v[i], where n_f is the facet normal stored
// in the mesh. With zero_trace_gamma0 the inner-boundary facets carry no dofs.
class StressSpace {
 public:
  // Per tet, local face k (opposite local vertex k) and facet vertex i.
  struct Local {
    std::array<int, 4> base;         // first global dof of the facet, -1 if removed
    std::array<double, 4> sign;      // +1 if this tet is facet.tet[0]
    std::array<std::array<int, 3>, 4> vtx;  // local tet vertex of facet vertex i
    std::array<std::array<Vec3, 3>, 4> d;   // (x_v - x_k) / h_k
    std::array<double, 4> inv_h;            // 1 / h_k
  };

  StressSpace(const TetMesh& mesh, bool zero_trace_gamma0);

  const TetMesh& mesh() const { return *mesh_; }
  bool zero_trace_gamma0() const { return zero_trace_; }
  int size() const { return ndof_; }
  int dof(int facet, int i, int row) const;
  const Local& local(int t) const { return local_[t]; }

  // Exact for fields that are linear on every tet.
  Eigen::VectorXd interpolate(const TensorField& sigma) const;
  Eigen::VectorXd identity() const;

  Mat3 eval(const Eigen::VectorXd& c, int t, const std::array<double, 4>& lambda) const;
  Vec3 divergence(const Eigen::VectorXd& c, int t) const;  // constant per tet

  SparseMatrix l2_gram() const;    // int sigma : tau
  SparseMatrix div_gram() const;   // int div sigma . div tau
  SparseMatrix hdiv_gram() const;  // sum of the two
  // Row vector j -> int tr(basis_j).
  Eigen::VectorXd trace_integrals() const;

 private:
  const TetMesh* mesh_;
  bool zero_trace_;
  int ndof_ = 0;
  std::vector<int> facet_base_;
  std::vector<Local> local_;
};

// Piecewise constant velocity (3 per tet) and skew vorticity (3 per tet,
// components (0,1), (0,2), (1,2) of the skew matrix).
inline int velocity_dofs(const TetMesh& m) { return 3 * m.num_tets(); }
inline int vorticity_dofs(const TetMesh& m) { return 3 * m.num_tets(); }
Mat3 skew_from_coeffs(double a01, double a02, double a12);
// L2 means over each tet with a degree-`degree` rule.
Eigen::VectorXd project_velocity(const TetMesh& m, const VectorField& u, int degree = 4);
Eigen::VectorXd project_vorticity(const TetMesh& m, const TensorField& grad_u, int degree = 4);
// Diagonal L2 Gram matrices.
Eigen::VectorXd velocity_mass(const TetMesh& m);
Eigen::VectorXd vorticity_mass(const TetMesh& m);

// Surface interpolants.
Eigen::VectorXd interpolate_p1(const SurfaceMesh& s, const VectorField& f);
Eigen::VectorXd interpolate_density(const SurfaceMesh& s, const VectorField& f);
// Facet density equal to the normal on every triangle.
Eigen::VectorXd normal_density(const SurfaceMesh& s);

// gamma_nu on a boundary component: density dofs of s from stress dofs.
// Entries are +-1; removed stress dofs give zero rows.
SparseMatrix normal_trace(const StressSpace& space, const SurfaceMesh& s);

// P1 prolongation between nested surface meshes. `parents` maps the fine
// volume mesh vertices to the coarse volume mesh vertices.
SparseMatrix prolongation_p1(const SurfaceMesh& fine, const SurfaceMesh& coarse, const VertexParents& parents);

// Rigid motions z = c + d x (x - centroid) on a surface, their P1 interpolants
// and the L2 Gram matrix. Order: 3 translations, 3 rotations about e_k.
class RigidMotions {
 public:
  explicit RigidMotions(const SurfaceMesh& s);

  const Vec3& centroid() const { return centroid_; }
  Vec3 eval(int k, const Vec3& x) const;
  Mat3 gradient(int k) const;
  const Eigen::MatrixXd& interpolants() const { return Z_; }  // 3 nv x 6
  const Eigen::MatrixXd& gram() const { return G_; }
  // rows(k, j) = <z_k, phi_j>.
  const Eigen::MatrixXd& constraint_rows() const { return R_; }

  struct Projection {
    Eigen::Matrix<double, 6, 1> alpha;
    Eigen::VectorXd remainder;
  };
  Projection project(const Eigen::VectorXd& psi) const;

 private:
  Vec3 centroid_;
  Eigen::MatrixXd Z_, G_, R_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// m(x) = x - centroid of the surface; projector onto P0(Gamma) nu along <m, .>.
class MField {
 public:
  explicit MField(const SurfaceMesh& s);
  const Vec3& centroid() const { return centroid_; }
  const Eigen::VectorXd& coeffs() const { return m_; }  // density interpolant
  double m_dot_nu() const { return mnu_; }
  double moment(const Eigen::VectorXd& rho) const;  // <m, rho>

  struct Projection {
    double s;
    Eigen::VectorXd remainder;
  };
  Projection project(const Eigen::VectorXd& rho) const;

 private:
  Vec3 centroid_;
  Eigen::VectorXd m_, nu_, Mm_;
  double mnu_ = 0.0;
};

// pi_I: sigma = d I + remainder with d = int tr sigma / (3 |Omega|).
struct IdentityProjection {
  double d;
  Eigen::VectorXd remainder;
};
IdentityProjection project_pi_I(const StressSpace& space, const Eigen::VectorXd& sigma);

}  // namespace sfb
