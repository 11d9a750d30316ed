#include "sfb/spaces.hpp"

#include "sfb/quadrature.hpp"

#include <map>
#include <stdexcept>

namespace sfb {

namespace {

constexpr int kFaceVerts[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

// int_T lambda_i lambda_j / |T|
double bary_mass(int i, int j) { return i == j ? 0.1 : 0.05; }

}  // namespace

StressSpace::StressSpace(const TetMesh& mesh, bool zero_trace_gamma0) : mesh_(&mesh), zero_trace_(zero_trace_gamma0) {
  facet_base_.assign(mesh.num_facets(), -1);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (zero_trace_ && mesh.facets[f].tag == kGammaInner) continue;
    facet_base_[f] = ndof_;
    ndof_ += 9;
  }
  local_.resize(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    Local& L = local_[t];
    const double vol = mesh.volumes[t];
    for (int k = 0; k < 4; ++k) {
      const int fi = mesh.tet_facets[t][k];
      const Facet& F = mesh.facets[fi];
      L.base[k] = facet_base_[fi];
      L.sign[k] = F.tet[0] == t ? 1.0 : -1.0;
      const double h = 3.0 * vol / F.area;
      L.inv_h[k] = 1.0 / h;
      for (int i = 0; i < 3; ++i) {
        int lv = -1;
        for (int q = 0; q < 3; ++q)
          if (T[kFaceVerts[k][q]] == F.v[i]) lv = kFaceVerts[k][q];
        L.vtx[k][i] = lv;
        L.d[k][i] = (mesh.vertices[T[lv]] - mesh.vertices[T[k]]) / h;
      }
    }
  }
}

int StressSpace::dof(int facet, int i, int row) const {
  const int b = facet_base_[facet];
  return b < 0 ? -1 : b + 3 * i + row;
}

Eigen::VectorXd StressSpace::interpolate(const TensorField& sigma) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(ndof_);
  for (int f = 0; f < mesh_->num_facets(); ++f) {
    if (facet_base_[f] < 0) continue;
    const Facet& F = mesh_->facets[f];
    for (int i = 0; i < 3; ++i) {
      const Vec3 sn = sigma(mesh_->vertices[F.v[i]]) * F.normal;
      for (int r = 0; r < 3; ++r) c[facet_base_[f] + 3 * i + r] = sn[r];
    }
  }
  return c;
}

Eigen::VectorXd StressSpace::identity() const {
  return interpolate([](const Vec3&) { return Mat3::Identity(); });
}

Mat3 StressSpace::eval(const Eigen::VectorXd& c, int t, const std::array<double, 4>& lambda) const {
  const Local& L = local_[t];
  Mat3 s = Mat3::Zero();
  for (int k = 0; k < 4; ++k) {
    if (L.base[k] < 0) continue;
    for (int i = 0; i < 3; ++i) {
      const Vec3 q = (L.sign[k] * lambda[L.vtx[k][i]]) * L.d[k][i];
      for (int r = 0; r < 3; ++r) s.row(r) += c[L.base[k] + 3 * i + r] * q.transpose();
    }
  }
  return s;
}

Vec3 StressSpace::divergence(const Eigen::VectorXd& c, int t) const {
  const Local& L = local_[t];
  Vec3 d = Vec3::Zero();
  for (int k = 0; k < 4; ++k) {
    if (L.base[k] < 0) continue;
    for (int i = 0; i < 3; ++i)
      for (int r = 0; r < 3; ++r) d[r] += c[L.base[k] + 3 * i + r] * L.sign[k] * L.inv_h[k];
  }
  return d;
}

SparseMatrix StressSpace::l2_gram() const {
  Triplets tr;
  for (int t = 0; t < mesh_->num_tets(); ++t) {
    const Local& L = local_[t];
    const double vol = mesh_->volumes[t];
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 3; ++i) {
        if (L.base[k] < 0) continue;
        for (int l = 0; l < 4; ++l)
          for (int j = 0; j < 3; ++j) {
            if (L.base[l] < 0) continue;
            const double v = vol * bary_mass(L.vtx[k][i], L.vtx[l][j]) * L.sign[k] * L.sign[l] *
                             L.d[k][i].dot(L.d[l][j]);
            for (int r = 0; r < 3; ++r) tr.emplace_back(L.base[k] + 3 * i + r, L.base[l] + 3 * j + r, v);
          }
      }
  }
  SparseMatrix M(ndof_, ndof_);
  M.setFromTriplets(tr.begin(), tr.end());
  return M;
}

SparseMatrix StressSpace::div_gram() const {
  Triplets tr;
  for (int t = 0; t < mesh_->num_tets(); ++t) {
    const Local& L = local_[t];
    const double vol = mesh_->volumes[t];
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 3; ++i) {
        if (L.base[k] < 0) continue;
        for (int l = 0; l < 4; ++l)
          for (int j = 0; j < 3; ++j) {
            if (L.base[l] < 0) continue;
            const double v = vol * L.sign[k] * L.inv_h[k] * L.sign[l] * L.inv_h[l];
            for (int r = 0; r < 3; ++r) tr.emplace_back(L.base[k] + 3 * i + r, L.base[l] + 3 * j + r, v);
          }
      }
  }
  SparseMatrix M(ndof_, ndof_);
  M.setFromTriplets(tr.begin(), tr.end());
  return M;
}

SparseMatrix StressSpace::hdiv_gram() const {
  SparseMatrix M = l2_gram();
  M += div_gram();
  return M;
}

Eigen::VectorXd StressSpace::trace_integrals() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ndof_);
  for (int t = 0; t < mesh_->num_tets(); ++t) {
    const Local& L = local_[t];
    const double q = 0.25 * mesh_->volumes[t];
    for (int k = 0; k < 4; ++k) {
      if (L.base[k] < 0) continue;
      for (int i = 0; i < 3; ++i)
        for (int r = 0; r < 3; ++r) v[L.base[k] + 3 * i + r] += q * L.sign[k] * L.d[k][i][r];
    }
  }
  return v;
}

Mat3 skew_from_coeffs(double a01, double a02, double a12) {
  Mat3 m;
  m << 0.0, a01, a02, -a01, 0.0, a12, -a02, -a12, 0.0;
  return m;
}

namespace {

template <class F>
void tet_quadrature(const TetMesh& m, int t, int degree, F&& f) {
  const TetRule& r = tet_rule(degree);
  const auto& T = m.tets[t];
  const Vec3& a = m.vertices[T[0]];
  const Vec3 e1 = m.vertices[T[1]] - a, e2 = m.vertices[T[2]] - a, e3 = m.vertices[T[3]] - a;
  const double scale = 6.0 * m.volumes[t];
  for (int q = 0; q < r.size(); ++q) {
    const Vec3& p = r.p[q];
    f(r.w[q] * scale, Vec3(a + p[0] * e1 + p[1] * e2 + p[2] * e3));
  }
}

}  // namespace

Eigen::VectorXd project_velocity(const TetMesh& m, const VectorField& u, int degree) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(velocity_dofs(m));
  for (int t = 0; t < m.num_tets(); ++t) {
    Vec3 s = Vec3::Zero();
    tet_quadrature(m, t, degree, [&](double w, const Vec3& x) { s += w * u(x); });
    c.segment<3>(3 * t) = s / m.volumes[t];
  }
  return c;
}

Eigen::VectorXd project_vorticity(const TetMesh& m, const TensorField& grad_u, int degree) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(vorticity_dofs(m));
  for (int t = 0; t < m.num_tets(); ++t) {
    Mat3 s = Mat3::Zero();
    tet_quadrature(m, t, degree, [&](double w, const Vec3& x) { s += w * grad_u(x); });
    s /= m.volumes[t];
    const Mat3 sk = 0.5 * (s - s.transpose());
    c[3 * t] = sk(0, 1);
    c[3 * t + 1] = sk(0, 2);
    c[3 * t + 2] = sk(1, 2);
  }
  return c;
}

Eigen::VectorXd velocity_mass(const TetMesh& m) {
  Eigen::VectorXd d(velocity_dofs(m));
  for (int t = 0; t < m.num_tets(); ++t) d.segment<3>(3 * t).setConstant(m.volumes[t]);
  return d;
}

Eigen::VectorXd vorticity_mass(const TetMesh& m) {
  Eigen::VectorXd d(vorticity_dofs(m));
  for (int t = 0; t < m.num_tets(); ++t) d.segment<3>(3 * t).setConstant(2.0 * m.volumes[t]);
  return d;
}

Eigen::VectorXd interpolate_p1(const SurfaceMesh& s, const VectorField& f) {
  Eigen::VectorXd c(p1_dofs(s));
  for (int v = 0; v < s.num_vertices(); ++v) c.segment<3>(3 * v) = f(s.vertices[v]);
  return c;
}

Eigen::VectorXd interpolate_density(const SurfaceMesh& s, const VectorField& f) {
  Eigen::VectorXd c(density_dofs(s));
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i) c.segment<3>(9 * t + 3 * i) = f(s.vertices[s.tris[t][i]]);
  return c;
}

Eigen::VectorXd normal_density(const SurfaceMesh& s) {
  Eigen::VectorXd c(density_dofs(s));
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i) c.segment<3>(9 * t + 3 * i) = s.normals[t];
  return c;
}

SparseMatrix normal_trace(const StressSpace& space, const SurfaceMesh& s) {
  const TetMesh& m = space.mesh();
  Triplets tr;
  for (int t = 0; t < s.num_tris(); ++t) {
    const Facet& F = m.facets[s.facet[t]];
    const double sg = F.normal.dot(s.normals[t]) > 0 ? 1.0 : -1.0;
    for (int i = 0; i < 3; ++i) {
      const int vv = s.volume_vertex[s.tris[t][i]];
      int fi = -1;
      for (int q = 0; q < 3; ++q)
        if (F.v[q] == vv) fi = q;
      for (int c = 0; c < 3; ++c) {
        const int d = space.dof(s.facet[t], fi, c);
        if (d >= 0) tr.emplace_back(9 * t + 3 * i + c, d, sg);
      }
    }
  }
  SparseMatrix N(density_dofs(s), space.size());
  N.setFromTriplets(tr.begin(), tr.end());
  return N;
}

SparseMatrix prolongation_p1(const SurfaceMesh& fine, const SurfaceMesh& coarse, const VertexParents& parents) {
  std::map<int, int> cmap;
  for (int v = 0; v < coarse.num_vertices(); ++v) cmap[coarse.volume_vertex[v]] = v;
  auto lookup = [&](int vol) {
    auto it = cmap.find(vol);
    if (it == cmap.end()) throw std::invalid_argument("prolongation_p1: surfaces are not nested");
    return it->second;
  };
  Triplets tr;
  for (int v = 0; v < fine.num_vertices(); ++v) {
    const auto& p = parents.at(fine.volume_vertex[v]);
    const int a = lookup(p[0]), b = lookup(p[1]);
    for (int c = 0; c < 3; ++c) {
      if (a == b) {
        tr.emplace_back(3 * v + c, 3 * a + c, 1.0);
      } else {
        tr.emplace_back(3 * v + c, 3 * a + c, 0.5);
        tr.emplace_back(3 * v + c, 3 * b + c, 0.5);
      }
    }
  }
  SparseMatrix P(p1_dofs(fine), p1_dofs(coarse));
  P.setFromTriplets(tr.begin(), tr.end());
  return P;
}

RigidMotions::RigidMotions(const SurfaceMesh& s) : centroid_(s.centroid()) {
  const int n = p1_dofs(s);
  Z_.resize(n, 6);
  for (int k = 0; k < 6; ++k)
    for (int v = 0; v < s.num_vertices(); ++v) Z_.block<3, 1>(3 * v, k) = eval(k, s.vertices[v]);
  const SparseMatrix M = mass_p1(s);
  R_ = (M * Z_).transpose();
  G_ = R_ * Z_;
  llt_.compute(G_);
  if (llt_.info() != Eigen::Success) throw std::runtime_error("rigid motion Gram matrix is singular");
}

Vec3 RigidMotions::eval(int k, const Vec3& x) const {
  if (k < 3) return Vec3::Unit(k);
  return Vec3::Unit(k - 3).cross(x - centroid_);
}

Mat3 RigidMotions::gradient(int k) const {
  if (k < 3) return Mat3::Zero();
  const Vec3 d = Vec3::Unit(k - 3);
  Mat3 g;  // g(i, j) = d (d x x)_i / d x_j
  g << 0.0, -d[2], d[1], d[2], 0.0, -d[0], -d[1], d[0], 0.0;
  return g;
}

RigidMotions::Projection RigidMotions::project(const Eigen::VectorXd& psi) const {
  Projection p;
  p.alpha = llt_.solve(R_ * psi);
  p.remainder = psi - Z_ * p.alpha;
  return p;
}

MField::MField(const SurfaceMesh& s) : centroid_(s.centroid()) {
  m_ = interpolate_density(s, [&](const Vec3& x) { return Vec3(x - centroid_); });
  nu_ = normal_density(s);
  Mm_ = mass_density(s) * m_;
  mnu_ = Mm_.dot(nu_);
  if (!(std::abs(mnu_) > 1e-14 * s.area())) throw std::runtime_error("degenerate <m, nu> on the surface");
}

double MField::moment(const Eigen::VectorXd& rho) const { return Mm_.dot(rho); }

MField::Projection MField::project(const Eigen::VectorXd& rho) const {
  Projection p;
  p.s = moment(rho) / mnu_;
  p.remainder = rho - p.s * nu_;
  return p;
}

IdentityProjection project_pi_I(const StressSpace& space, const Eigen::VectorXd& sigma) {
  IdentityProjection p;
  p.d = space.trace_integrals().dot(sigma) / (3.0 * space.mesh().volume());
  p.remainder = sigma - p.d * space.identity();
  return p;
}

}  // namespace sfb
