#include "sfb/forms.hpp"

#include "sfb/quadrature.hpp"

namespace sfb {

std::string kind_name(FormulationKind k) {
  switch (k) {
    case FormulationKind::JN_NeumannHomog: return "jn";
    case FormulationKind::CH_Dirichlet: return "ch-dirichlet";
    case FormulationKind::CH_Neumann: return "ch-neumann";
    case FormulationKind::CH_NeumannHomog: return "ch-neumann-homog";
  }
  return "?";
}

FormulationKind parse_kind(const std::string& s) {
  for (auto k : {FormulationKind::JN_NeumannHomog, FormulationKind::CH_Dirichlet, FormulationKind::CH_Neumann,
                 FormulationKind::CH_NeumannHomog})
    if (kind_name(k) == s) return k;
  throw FormError("unknown formulation '" + s + "' (expected jn, ch-dirichlet, ch-neumann, ch-neumann-homog)");
}

bool uses_zero_trace(FormulationKind k) {
  return k == FormulationKind::JN_NeumannHomog || k == FormulationKind::CH_NeumannHomog;
}

int default_trace_coarsening(FormulationKind k) { return k == FormulationKind::JN_NeumannHomog ? 1 : 0; }

namespace {

SparseMatrix identity(int n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

// Prolongation from level `coarse` to level `fine` of a boundary component.
SparseMatrix chain_prolongation(const MeshHierarchy& H, int tag, int fine, int coarse, SurfaceMesh* coarse_mesh) {
  SurfaceMesh cur = extract_surface(H.level(fine), tag);
  SparseMatrix P = identity(p1_dofs(cur));
  for (int l = fine; l > coarse; --l) {
    SurfaceMesh below = extract_surface(H.level(l - 1), tag);
    SparseMatrix step = prolongation_p1(cur, below, H.parents.at(l));
    P = SparseMatrix(P * step);
    cur = std::move(below);
  }
  *coarse_mesh = std::move(cur);
  return P;
}

bool is_symmetric(const SparseMatrix& X) {
  if (X.rows() != X.cols()) return false;
  SparseMatrix Xt = X.transpose();
  const double n = X.norm();
  return (X - Xt).norm() <= 1e-12 * (n > 0 ? n : 1.0);
}

SparseMatrix slice(const SparseMatrix& M, int r0, int nr, int c0, int nc) {
  return M.block(r0, c0, nr, nc);
}

constexpr int kSkewPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};

}  // namespace

Discretization make_discretization(const MeshHierarchy& H, FormulationKind kind, int level,
                                   std::optional<int> trace_coarsening, int lambda_coarsening) {
  if (level < 0 || level >= H.num_levels()) throw FormError("level " + std::to_string(level) + " not in hierarchy");
  Discretization d;
  d.kind = kind;
  d.level = level;
  d.trace_coarsening = trace_coarsening.value_or(default_trace_coarsening(kind));
  d.lambda_coarsening = kind == FormulationKind::CH_Neumann ? lambda_coarsening : 0;
  if (level - d.trace_coarsening < 0)
    throw FormError(kind_name(kind) + " at level " + std::to_string(level) + " needs a trace partition " +
                    std::to_string(d.trace_coarsening) + " level(s) coarser");
  if (level - d.lambda_coarsening < 0)
    throw FormError("ch-neumann at level " + std::to_string(level) + " needs a coarser inner partition");
  d.mesh = &H.level(level);
  d.gamma = extract_surface(*d.mesh, kGammaOuter);
  d.gamma0 = extract_surface(*d.mesh, kGammaInner);
  d.P_trace = chain_prolongation(H, kGammaOuter, level, level - d.trace_coarsening, &d.trace_mesh);
  if (d.has_lambda()) d.P_lambda = chain_prolongation(H, kGammaInner, level, level - d.lambda_coarsening, &d.lambda_mesh);
  d.stress = std::make_unique<StressSpace>(*d.mesh, uses_zero_trace(kind));
  d.h = mesh_diameter(*d.mesh);
  d.h_trace = d.trace_mesh.h();
  return d;
}

const BoundaryOperators& OperatorCache::get(int key, const SurfaceMesh& s, unsigned which) {
  auto& entry = ops_[key];
  const unsigned missing = which & ~entry.first;
  if (missing) {
    BoundaryOperators add = assemble_operators(s, q_, missing);
    if (missing & kOpV) entry.second.V = std::move(add.V);
    if (missing & kOpK) entry.second.K = std::move(add.K);
    if (missing & kOpW) entry.second.W = std::move(add.W);
    entry.first |= missing;
  }
  return entry.second;
}

SparseMatrix assemble_dev_mass(const StressSpace& S) {
  const TetMesh& m = S.mesh();
  Triplets tr;
  tr.reserve(static_cast<std::size_t>(m.num_tets()) * 36 * 36);
  for (int t = 0; t < m.num_tets(); ++t) {
    const auto& L = S.local(t);
    const double vol = m.volumes[t];
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 3; ++i) {
        if (L.base[k] < 0) continue;
        const Vec3& da = L.d[k][i];
        for (int l = 0; l < 4; ++l)
          for (int j = 0; j < 3; ++j) {
            if (L.base[l] < 0) continue;
            const Vec3& db = L.d[l][j];
            const double w = vol * (L.vtx[k][i] == L.vtx[l][j] ? 0.1 : 0.05) * L.sign[k] * L.sign[l];
            const double dd = da.dot(db);
            for (int r = 0; r < 3; ++r)
              for (int q = 0; q < 3; ++q) {
                const double v = w * ((r == q ? dd : 0.0) - da[r] * db[q] / 3.0);
                if (v != 0.0) tr.emplace_back(L.base[k] + 3 * i + r, L.base[l] + 3 * j + q, v);
              }
          }
      }
  }
  SparseMatrix D(S.size(), S.size());
  D.setFromTriplets(tr.begin(), tr.end());
  return D;
}

SparseMatrix assemble_div_block(const StressSpace& S) {
  const TetMesh& m = S.mesh();
  Triplets tr;
  for (int t = 0; t < m.num_tets(); ++t) {
    const auto& L = S.local(t);
    for (int k = 0; k < 4; ++k) {
      if (L.base[k] < 0) continue;
      const double v = L.sign[k] * m.volumes[t] * L.inv_h[k];
      for (int i = 0; i < 3; ++i)
        for (int r = 0; r < 3; ++r) tr.emplace_back(3 * t + r, L.base[k] + 3 * i + r, v);
    }
  }
  SparseMatrix B(velocity_dofs(m), S.size());
  B.setFromTriplets(tr.begin(), tr.end());
  return B;
}

SparseMatrix assemble_skew_block(const StressSpace& S) {
  const TetMesh& m = S.mesh();
  Triplets tr;
  for (int t = 0; t < m.num_tets(); ++t) {
    const auto& L = S.local(t);
    const double q = 0.25 * m.volumes[t];
    for (int k = 0; k < 4; ++k) {
      if (L.base[k] < 0) continue;
      for (int i = 0; i < 3; ++i) {
        const Vec3& d = L.d[k][i];
        for (int r = 0; r < 3; ++r)
          for (int e = 0; e < 3; ++e) {
            const int p = kSkewPairs[e][0], pq = kSkewPairs[e][1];
            const double v = L.sign[k] * q * ((r == p ? d[pq] : 0.0) - (r == pq ? d[p] : 0.0));
            if (v != 0.0) tr.emplace_back(3 * t + e, L.base[k] + 3 * i + r, v);
          }
      }
    }
  }
  SparseMatrix B(vorticity_dofs(m), S.size());
  B.setFromTriplets(tr.begin(), tr.end());
  return B;
}

SparseMatrix assemble_gamma0_trace_block(const Discretization& d) {
  if (!d.has_lambda()) throw FormError("no multiplier partition on the inner boundary");
  const SparseMatrix N0 = normal_trace(*d.stress, d.gamma0);
  const SparseMatrix M0 = mass_density_p1(d.gamma0);
  SparseMatrix L = SparseMatrix(d.P_lambda.transpose()) * SparseMatrix(M0.transpose()) * N0;
  L.prune(0.0);
  return L;
}

SparseMatrix BlockSystem::a_block() const { return slice(matrix, 0, layout.primal(), 0, layout.primal()); }

SparseMatrix BlockSystem::b_block() const {
  return slice(matrix, layout.u(), layout.n_u + layout.n_chi + layout.n_lambda, 0, layout.primal());
}

SparseMatrix BlockSystem::constraints() const {
  return slice(matrix, layout.u(), layout.size() - layout.u(), 0, layout.primal());
}

BlockSystem build_system(const Discretization& d, OperatorCache& cache, const ProblemData& data,
                         const BuildOptions& opt) {
  const FormulationKind kind = d.kind;
  // Data compatibility.
  if (kind == FormulationKind::CH_Dirichlet && !data.g_D) throw FormError("ch-dirichlet requires g_D");
  if (kind == FormulationKind::CH_Neumann && !data.g_N) throw FormError("ch-neumann requires g_N");
  if (kind != FormulationKind::CH_Dirichlet && data.g_D)
    throw FormError(kind_name(kind) + " takes no Dirichlet datum g_D");
  if (kind != FormulationKind::CH_Neumann && data.g_N)
    throw FormError(kind_name(kind) + " takes no Neumann datum g_N");
  if (!(data.viscosity > 0.0)) throw FormError("viscosity must be positive");
  const bool jn = kind == FormulationKind::JN_NeumannHomog;
  if (jn && opt.enforce_mesh_ratio && d.h > opt.mesh_ratio * d.h_trace * (1.0 + 1e-12))
    throw FormError("jn: mesh ratio h / h_trace = " + std::to_string(d.h / d.h_trace) + " exceeds " +
                    std::to_string(opt.mesh_ratio));

  const StressSpace& S = *d.stress;
  const TetMesh& mesh = *d.mesh;
  BlockSystem sys;
  sys.kind = kind;
  sys.with_rm = opt.with_rm;
  BlockLayout& L = sys.layout;
  L.n_sigma = S.size();
  L.n_phi = p1_dofs(d.trace_mesh);
  L.n_u = velocity_dofs(mesh);
  L.n_chi = vorticity_dofs(mesh);
  L.n_lambda = d.has_lambda() ? p1_dofs(d.lambda_mesh) : 0;
  L.n_rm = opt.with_rm ? 6 : 0;

  // Normal trace on Gamma as (stress dof, sign) per density dof.
  const SparseMatrix N = normal_trace(S, d.gamma);
  const int nd = density_dofs(d.gamma);
  std::vector<int> ndof(nd, -1);
  std::vector<double> nsign(nd, 0.0);
  for (int c = 0; c < N.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(N, c); it; ++it) {
      ndof[it.row()] = it.col();
      nsign[it.row()] = it.value();
    }

  const SparseMatrix M = mass_density_p1(d.gamma) * d.P_trace;
  const int trace_key = d.level - d.trace_coarsening;
  Eigen::MatrixXd C;  // (1/2 M + K) on density x phi
  {
    const BoundaryOperators& fine = cache.get(d.level, d.gamma, jn ? kOpK : (kOpV | kOpK | kOpW));
    C = fine.K * d.P_trace;
    C += 0.5 * Eigen::MatrixXd(M);
  }
  const Eigen::MatrixXd& W = cache.get(trace_key, d.trace_mesh, kOpW).W;

  Triplets tr;
  const SparseMatrix dev = assemble_dev_mass(S);
  const SparseMatrix Bdiv = assemble_div_block(S);
  const SparseMatrix Bskew = assemble_skew_block(S);
  std::size_t reserve = dev.nonZeros() + 2 * (Bdiv.nonZeros() + Bskew.nonZeros()) +
                        2 * static_cast<std::size_t>(nd) * L.n_phi + static_cast<std::size_t>(L.n_phi) * L.n_phi;
  if (!jn) reserve += static_cast<std::size_t>(nd) * nd;
  tr.reserve(reserve);
  auto add_sparse = [&](const SparseMatrix& X, int r0, int c0, bool transpose) {
    for (int c = 0; c < X.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(X, c); it; ++it) {
        if (transpose)
          tr.emplace_back(c0 + it.col(), r0 + it.row(), it.value());
        else
          tr.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
      }
  };
  add_sparse(dev, 0, 0, false);
  if (!jn) {
    const Eigen::MatrixXd& V = cache.get(d.level, d.gamma, kOpV).V;
    for (int j = 0; j < nd; ++j) {
      if (ndof[j] < 0) continue;
      for (int i = 0; i < nd; ++i)
        if (ndof[i] >= 0) tr.emplace_back(ndof[i], ndof[j], nsign[i] * nsign[j] * V(i, j));
    }
  }
  // tau rows: -<gamma_nu tau, phi> (JN) or -<gamma_nu tau, (1/2 + K) phi> (CH);
  // psi rows: <(1/2 + K^t) gamma_nu sigma, psi>.
  const Eigen::MatrixXd Mdense = jn ? Eigen::MatrixXd(M) : Eigen::MatrixXd();
  for (int p = 0; p < L.n_phi; ++p)
    for (int i = 0; i < nd; ++i) {
      if (ndof[i] < 0) continue;
      const double top = jn ? Mdense(i, p) : C(i, p);
      if (top != 0.0) tr.emplace_back(ndof[i], L.phi() + p, -nsign[i] * top);
      if (C(i, p) != 0.0) tr.emplace_back(L.phi() + p, ndof[i], nsign[i] * C(i, p));
    }
  for (int q = 0; q < L.n_phi; ++q)
    for (int p = 0; p < L.n_phi; ++p) tr.emplace_back(L.phi() + p, L.phi() + q, W(p, q));
  add_sparse(Bdiv, L.u(), 0, false);
  add_sparse(Bdiv, L.u(), 0, true);
  add_sparse(Bskew, L.chi(), 0, false);
  add_sparse(Bskew, L.chi(), 0, true);
  if (d.has_lambda()) {
    const SparseMatrix Lb = assemble_gamma0_trace_block(d);
    add_sparse(Lb, L.lambda(), 0, false);
    add_sparse(Lb, L.lambda(), 0, true);
  }
  if (opt.with_rm) {
    const RigidMotions rm(d.trace_mesh);
    const Eigen::MatrixXd& R = rm.constraint_rows();
    for (int k = 0; k < 6; ++k)
      for (int p = 0; p < L.n_phi; ++p) {
        tr.emplace_back(L.rm() + k, L.phi() + p, R(k, p));
        tr.emplace_back(L.phi() + p, L.rm() + k, R(k, p));
      }
  }
  sys.matrix.resize(L.size(), L.size());
  sys.matrix.setFromTriplets(tr.begin(), tr.end());
  Triplets().swap(tr);

  // Right-hand side.
  sys.rhs = Eigen::VectorXd::Zero(L.size());
  const double scale = 1.0 / data.stress_scale();
  if (data.f) {
    const Eigen::VectorXd fbar = project_velocity(mesh, data.f);
    for (int t = 0; t < mesh.num_tets(); ++t)
      sys.rhs.segment<3>(L.u() + 3 * t) = -scale * mesh.volumes[t] * fbar.segment<3>(3 * t);
  }
  if (kind == FormulationKind::CH_Dirichlet) {
    const SparseMatrix N0 = normal_trace(S, d.gamma0);
    const Eigen::VectorXd g = interpolate_p1(d.gamma0, data.g_D);
    sys.rhs.head(L.n_sigma) = -(SparseMatrix(N0.transpose()) * (mass_density_p1(d.gamma0) * g));
  }
  if (kind == FormulationKind::CH_Neumann) {
    const Eigen::VectorXd g = interpolate_density(d.gamma0, data.g_N);
    const SparseMatrix M0 = mass_density_p1(d.gamma0);
    sys.rhs.segment(L.lambda(), L.n_lambda) =
        scale * (SparseMatrix(d.P_lambda.transpose()) * (SparseMatrix(M0.transpose()) * g));
  }

  auto info = [&](const std::string& name, int r0, int nr, int c0, int nc) {
    SparseMatrix X = slice(sys.matrix, r0, nr, c0, nc);
    sys.blocks.push_back({name, nr, nc, static_cast<long>(X.nonZeros()), is_symmetric(X)});
  };
  info("sigma_sigma", 0, L.n_sigma, 0, L.n_sigma);
  info("sigma_phi", 0, L.n_sigma, L.phi(), L.n_phi);
  info("phi_sigma", L.phi(), L.n_phi, 0, L.n_sigma);
  info("phi_phi", L.phi(), L.n_phi, L.phi(), L.n_phi);
  info("u_sigma", L.u(), L.n_u, 0, L.n_sigma);
  info("chi_sigma", L.chi(), L.n_chi, 0, L.n_sigma);
  if (L.n_lambda) info("lambda_sigma", L.lambda(), L.n_lambda, 0, L.n_sigma);
  if (L.n_rm) info("rm_phi", L.rm(), L.n_rm, L.phi(), L.n_phi);
  info("A", 0, L.primal(), 0, L.primal());
  return sys;
}

std::vector<Eigen::VectorXd> kernel_vectors(const Discretization& d, const BlockLayout& L) {
  const RigidMotions rm(d.trace_mesh);
  const bool jn = d.kind == FormulationKind::JN_NeumannHomog;
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < 6; ++k) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(L.size());
    x.segment(L.phi(), L.n_phi) = rm.interpolants().col(k);
    if (jn) {
      const Mat3 g = rm.gradient(k);
      for (int t = 0; t < d.mesh->num_tets(); ++t) {
        x.segment<3>(L.u() + 3 * t) = rm.eval(k, d.mesh->centroid(t));
        for (int e = 0; e < 3; ++e) x[L.chi() + 3 * t + e] = g(kSkewPairs[e][0], kSkewPairs[e][1]);
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

Eigen::VectorXd t_transform_direction(const Discretization& d) {
  const SurfaceMesh& s = d.trace_mesh;
  std::vector<Vec3> acc(s.num_vertices(), Vec3::Zero());
  for (int t = 0; t < s.num_tris(); ++t)
    for (int v : s.tris[t]) acc[v] += s.normals[t];
  Eigen::VectorXd psi(p1_dofs(s));
  for (int v = 0; v < s.num_vertices(); ++v) psi.segment<3>(3 * v) = acc[v].normalized();
  return RigidMotions(s).project(psi).remainder;
}

TTransform t_transform(const Discretization& d, const BlockLayout& L, double delta) {
  TTransform T;
  T.delta = delta;
  T.c = Eigen::VectorXd::Zero(L.primal());
  T.c.head(L.n_sigma) = d.stress->trace_integrals() / d.mesh->volume();
  T.psi = Eigen::VectorXd::Zero(L.primal());
  T.psi.segment(L.phi(), L.n_phi) = t_transform_direction(d);
  return T;
}

}  // namespace sfb
