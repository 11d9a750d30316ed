#include "sfb/verify.hpp"

#include "sfb/kernels.hpp"
#include "sfb/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <random>

namespace sfb {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec3 unit(int k) { return Vec3::Unit(k); }

// Cube face normals: the coordinate direction of largest |x_k|.
Vec3 cube_normal(const Vec3& x) {
  int k = 0;
  x.cwiseAbs().maxCoeff(&k);
  Vec3 n = Vec3::Zero();
  n[k] = x[k] > 0.0 ? 1.0 : -1.0;
  return n;
}

Vec3 random_shell_point(std::mt19937_64& rng, double a, double b) {
  std::uniform_real_distribution<double> U(-b, b);
  for (;;) {
    const Vec3 x(U(rng), U(rng), U(rng));
    if (x.cwiseAbs().maxCoeff() > a) return x;
  }
}

double inf_norm(const SparseMatrix& A) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
  for (int c = 0; c < A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

double dual_norm(const SparseMatrix& M, const Eigen::VectorXd& r) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(M);
  return std::sqrt(std::max(0.0, r.dot(ldlt.solve(r))));
}

ProblemData placeholder_data(FormulationKind kind) {
  ProblemData data;
  if (kind == FormulationKind::CH_Dirichlet) data.g_D = [](const Vec3&) { return Vec3::Zero(); };
  if (kind == FormulationKind::CH_Neumann) data.g_N = [](const Vec3&) { return Vec3::Zero(); };
  return data;
}

const Eigen::MatrixXd& trace_W(Workspace& w, const Discretization& d) {
  return w.cache.get(d.level - d.trace_coarsening, d.trace_mesh, kOpW).W;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stokeslet

StokesletSolution::StokesletSolution(const Vec3& x0, const Vec3& a, double viscosity)
    : x0_(x0), a_(a), mu_(viscosity) {}

Vec3 StokesletSolution::u(const Vec3& x) const { return stokeslet(x - x0_) * a_; }

Mat3 StokesletSolution::grad_u(const Vec3& x) const {
  const auto dE = stokeslet_gradient(x - x0_);
  Mat3 G;
  for (int k = 0; k < 3; ++k) G.col(k) = dE[k] * a_;
  return G;
}

double StokesletSolution::p(const Vec3& x) const { return 2.0 * mu_ * pressure_kernel(x - x0_).dot(a_); }

Mat3 StokesletSolution::sigma(const Vec3& x) const {
  const Mat3 G = grad_u(x);
  return 2.0 * mu_ * (0.5 * (G + G.transpose())) - p(x) * Mat3::Identity();
}

ExactFields StokesletSolution::fields() const {
  ExactFields f;
  f.sigma = [s = *this](const Vec3& x) { return s.sigma(x); };
  f.u = [s = *this](const Vec3& x) { return s.u(x); };
  f.grad_u = [s = *this](const Vec3& x) { return s.grad_u(x); };
  f.div_sigma = [](const Vec3&) { return Vec3(Vec3::Zero()); };
  f.p = [s = *this](const Vec3& x) { return s.p(x); };
  return f;
}

StokesletSolution stokeslet_manufactured(const Vec3& x0, const Vec3& a, double inner_half_width, double viscosity) {
  const double margin = inner_half_width - x0.cwiseAbs().maxCoeff();
  if (margin < 0.1 * inner_half_width)
    throw VerifyError("stokeslet source too close to the inner boundary (margin " + std::to_string(margin) + ")");
  if (!(viscosity > 0.0)) throw VerifyError("viscosity must be positive");
  return StokesletSolution(x0, a, viscosity);
}

namespace {

struct FdOps {
  double h;
  template <class F>
  Mat3 grad(const F& f, const Vec3& x) const {
    Mat3 G;
    for (int k = 0; k < 3; ++k) G.col(k) = (f(x + h * unit(k)) - f(x - h * unit(k))) / (2.0 * h);
    return G;
  }
  template <class F>
  Vec3 scalar_grad(const F& f, const Vec3& x) const {
    Vec3 g;
    for (int k = 0; k < 3; ++k) g[k] = (f(x + h * unit(k)) - f(x - h * unit(k))) / (2.0 * h);
    return g;
  }
  template <class F>
  Vec3 laplacian(const F& f, const Vec3& x) const {
    const Vec3 c = f(x);
    Vec3 l = Vec3::Zero();
    for (int k = 0; k < 3; ++k) l += (f(x + h * unit(k)) - 2.0 * c + f(x - h * unit(k))) / (h * h);
    return l;
  }
};

// Power-of-two step close to 1e-4 L so that x +- h is exact.
double fd_step(double L) { return std::ldexp(1.0, static_cast<int>(std::lround(std::log2(1e-4 * L)))); }

}  // namespace

FdReport stokeslet_fd_check(const StokesletSolution& s, double a, double b, int points, unsigned seed) {
  FdReport rep;
  rep.points = points;
  rep.seed = seed;
  std::mt19937_64 rng(seed);
  const double mu = s.viscosity();
  const double scale = s.strength().norm();
  auto u = [&](const Vec3& x) { return s.u(x); };
  auto p = [&](const Vec3& x) { return s.p(x); };

  // Quadratic oracle: q_i(x) = x^T A_i x + b_i . x with known derivatives.
  std::array<Mat3, 3> A;
  Mat3 Bq;
  {
    std::mt19937_64 r2(seed + 1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (auto& Ai : A)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Ai(i, j) = U(r2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Bq(i, j) = U(r2);
  }
  auto q = [&](const Vec3& x) {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = x.dot(A[i] * x) + Bq.row(i).dot(x);
    return v;
  };

  for (int n = 0; n < points; ++n) {
    const Vec3 x = random_shell_point(rng, a, b);
    const FdOps fd{fd_step((x - s.source()).norm())};
    const Vec3 res = mu * fd.laplacian(u, x) - fd.scalar_grad(p, x);
    rep.momentum = std::max(rep.momentum, res.norm() / (2.0 * mu * scale));
    const Mat3 G = fd.grad(u, x);
    rep.divergence = std::max(rep.divergence, std::abs(G.trace()) / scale);
    const Mat3 Ge = s.grad_u(x);
    rep.gradient = std::max(rep.gradient, (G - Ge).norm() / Ge.norm());

    const FdOps fq{fd_step(1.0)};
    Mat3 Gq;
    Vec3 lq;
    for (int i = 0; i < 3; ++i) {
      Gq.row(i) = ((A[i] + A[i].transpose()) * x + Bq.row(i).transpose()).transpose();
      lq[i] = 2.0 * A[i].trace();
    }
    rep.self_gradient = std::max(rep.self_gradient, (fq.grad(q, x) - Gq).norm() / Gq.norm());
    rep.self_laplacian = std::max(rep.self_laplacian, (fq.laplacian(q, x) - lq).norm() / lq.norm());
  }

  // Force balance on the inner cube: 4 x 4 panels of 8 x 8 Gauss points per face.
  const GaussRule& g = gauss_legendre01(8);
  const int panels = 4;
  Vec3 F = Vec3::Zero();
  for (int k = 0; k < 3; ++k)
    for (double side : {-1.0, 1.0}) {
      const Vec3 n = side * unit(k);
      const int i1 = (k + 1) % 3, i2 = (k + 2) % 3;
      const double w = 2.0 * a / panels;
      for (int p1 = 0; p1 < panels; ++p1)
        for (int p2 = 0; p2 < panels; ++p2)
          for (std::size_t q1 = 0; q1 < g.x.size(); ++q1)
            for (std::size_t q2 = 0; q2 < g.x.size(); ++q2) {
              Vec3 y;
              y[k] = side * a;
              y[i1] = -a + w * (p1 + g.x[q1]);
              y[i2] = -a + w * (p2 + g.x[q2]);
              F += w * w * g.w[q1] * g.w[q2] * s.traction(y, n);
            }
    }
  // div sigma = -2 mu a delta: the traction out of the source region integrates to -2 mu a.
  rep.force = (F + 2.0 * mu * s.strength()).norm() / (2.0 * mu * scale);
  return rep;
}

// ---------------------------------------------------------------------------
// Levels and convergence

Workspace::Workspace(double a, double b, int max_level, const QuadOptions& q)
    : H(build_annulus_hierarchy(a, b, max_level)), cache(q) {}

Workspace::Workspace(MeshHierarchy h, const QuadOptions& q) : H(std::move(h)), cache(q) {}

LevelSetup setup_level(const Workspace& w, FormulationKind kind, int level, const MeshPolicy& policy) {
  LevelSetup s;
  int tc = policy.trace_coarsening < 0 ? default_trace_coarsening(kind) : policy.trace_coarsening;
  int lc = policy.lambda_coarsening;
  if (policy.coarse_fallback) {
    if (level - tc < 0) {
      tc = level;
      s.relaxed = true;
    }
    if (kind == FormulationKind::CH_Neumann && level - lc < 0) {
      lc = level;
      s.relaxed = true;
    }
  }
  s.d = make_discretization(w.H, kind, level, tc, lc);
  s.build.enforce_mesh_ratio = !s.relaxed && policy.trace_coarsening < 0;
  return s;
}

double observed_rate(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

bool decays_to_zero(const std::vector<double>& v) {
  if (v.size() < 2) return false;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return v.back() < 0.5 * v.front();
}

std::vector<double> ConvergenceTable::errors(const std::string& field) const {
  std::vector<double> out;
  for (const ConvergenceRow& r : rows) {
    const ErrorRecord& e = r.errors;
    const FieldError* f = field == "sigma"       ? &e.sigma
                          : field == "div_sigma" ? &e.div_sigma
                          : field == "u"         ? &e.u
                          : field == "chi"       ? &e.chi
                          : field == "p"         ? &e.p
                          : field == "phi_w"     ? &e.phi_w
                          : field == "phi_l2"    ? &e.phi_l2
                          : field == "lambda"    ? &e.lambda
                                                 : nullptr;
    if (!f) throw VerifyError("unknown error field '" + field + "'");
    out.push_back(f->error);
  }
  return out;
}

std::vector<double> ConvergenceTable::step_rates(const std::string& field) const {
  const std::vector<double> e = errors(field);
  std::vector<double> r;
  for (std::size_t i = 1; i < e.size(); ++i) r.push_back(observed_rate(e[i - 1], e[i], rows[i - 1].h, rows[i].h));
  return r;
}

double ConvergenceTable::overall_rate(const std::string& field) const {
  const std::vector<double> e = errors(field);
  if (e.size() < 2) return 0.0;
  return observed_rate(e.front(), e.back(), rows.front().h, rows.back().h);
}

ConvergenceTable run_convergence(Workspace& w, FormulationKind kind, const std::vector<int>& levels,
                                 const ProblemData& data, const ExactFields& exact, const MeshPolicy& policy,
                                 std::vector<SolutionBundle>* solutions) {
  ConvergenceTable table;
  table.kind = kind;
  for (int level : levels) {
    const auto t0 = std::chrono::steady_clock::now();
    const LevelSetup s = setup_level(w, kind, level, policy);
    SolveResult res;
    {
      const BlockSystem sys = build_system(s.d, w.cache, data, s.build);
      res = solve_direct(sys, s.d, data);
    }
    ConvergenceRow row;
    row.level = level;
    row.h = s.d.h;
    row.h_trace = s.d.h_trace;
    row.unknowns = res.report.unknowns;
    row.report = res.report;
    row.errors = energy_errors(s.d, res.solution, exact, &trace_W(w, s.d));
    row.seconds = seconds_since(t0);
    table.rows.push_back(row);
    if (solutions) solutions->push_back(std::move(res.solution));
  }
  return table;
}

ProblemData stokeslet_data(FormulationKind kind, const StokesletSolution& s) {
  ProblemData data;
  data.viscosity = s.viscosity();
  if (kind == FormulationKind::CH_Dirichlet) data.g_D = [s](const Vec3& x) { return s.u(x); };
  // nu on the inner boundary points into the shell, away from the origin.
  if (kind == FormulationKind::CH_Neumann)
    data.g_N = [s](const Vec3& x) { return s.traction(x, cube_normal(x)); };
  if (kind == FormulationKind::JN_NeumannHomog || kind == FormulationKind::CH_NeumannHomog)
    throw VerifyError(kind_name(kind) + " has no Stokeslet data (it needs zero traction on the inner boundary)");
  return data;
}

// ---------------------------------------------------------------------------
// Kernels and boundary operators

double KernelAlgebraReport::max() const {
  return std::max({symmetry, evenness, homogeneity, q_oddness, q_homogeneity, traction_grad});
}

KernelAlgebraReport kernel_algebra_check(int pairs, unsigned seed) {
  KernelAlgebraReport r;
  r.pairs = pairs;
  r.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-2.0, 2.0), T(0.5, 2.0);
  for (int n = 0; n < pairs; ++n) {
    Vec3 x, y;
    do {
      x = Vec3(U(rng), U(rng), U(rng));
      y = Vec3(U(rng), U(rng), U(rng));
    } while ((x - y).norm() < 0.1);
    const Vec3 d = x - y;
    const double t = T(rng);
    const Mat3 E = stokeslet(d);
    const double En = E.norm();
    r.symmetry = std::max(r.symmetry, (E - E.transpose()).norm() / En);
    r.evenness = std::max(r.evenness, (stokeslet(-d) - E).norm() / En);
    r.homogeneity = std::max(r.homogeneity, (t * stokeslet(t * d) - E).norm() / En);
    const Vec3 Q = pressure_kernel(d);
    r.q_oddness = std::max(r.q_oddness, (pressure_kernel(-d) + Q).norm() / Q.norm());
    r.q_homogeneity = std::max(r.q_homogeneity, (t * t * pressure_kernel(t * d) - Q).norm() / Q.norm());

    const Vec3 nx = Vec3(U(rng), U(rng), U(rng)).normalized();
    const Vec3 f = Vec3(U(rng), U(rng), U(rng));
    const auto dE = stokeslet_gradient(d);
    Mat3 G;
    for (int k = 0; k < 3; ++k) G.col(k) = dE[k] * f;
    const Vec3 t_ref = (0.5 * (G + G.transpose()) - Q.dot(f) * Mat3::Identity()) * nx;
    r.traction_grad = std::max(r.traction_grad, (stokeslet_traction(d, nx) * f - t_ref).norm() / t_ref.norm());
  }
  return r;
}

OperatorStructure operator_structure(const SurfaceMesh& s, const BoundaryOperators& ops) {
  OperatorStructure r;
  r.tris = s.num_tris();
  const Eigen::MatrixXd& V = ops.V;
  const Eigen::MatrixXd& W = ops.W;
  r.V_symmetry = (V - V.transpose()).norm() / V.norm();
  r.W_symmetry = (W - W.transpose()).norm() / W.norm();

  const Eigen::MatrixXd Vs = 0.5 * (V + V.transpose());
  const Eigen::MatrixXd Ws = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> weig(Ws, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lw = weig.eigenvalues();
  r.W_max = lw.maxCoeff();
  for (Eigen::Index i = 0; i < lw.size(); ++i)
    if (lw[i] < 1e-8 * r.W_max) ++r.W_small;
  r.W_gap = lw.size() > 6 ? lw[6] / r.W_max : 0.0;

  const RigidMotions rm(s);
  for (int k = 0; k < 6; ++k) {
    const Eigen::VectorXd z = rm.interpolants().col(k);
    r.W_rm = std::max(r.W_rm, (W * z).norm() / (r.W_max * z.norm()));
  }

  // ||V||_2 by Lanczos on the symmetric part.
  LanczosOptions lo;
  lo.want_min = false;
  const LinearOp ident = [](const Eigen::VectorXd& x) { return x; };
  const LanczosResult vmax =
      lanczos_extremes([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(Vs * x); }, ident,
                       Eigen::VectorXd::Ones(Vs.rows()), lo);
  const Eigen::VectorXd nu = normal_density(s);
  r.V_nu = (V * nu).norm() / (vmax.max * nu.norm());

  // Complement of <m, .> = 0 via a Householder reflector H with H w ~ e_0.
  const MField m(s);
  const Eigen::VectorXd w = mass_density(s) * m.coeffs();
  Eigen::VectorXd v = w;
  v[0] += (w[0] >= 0.0 ? 1.0 : -1.0) * w.norm();
  const double vv = v.squaredNorm();
  const Eigen::VectorXd Vv = Vs * v;
  const double vVv = v.dot(Vv);
  Eigen::MatrixXd HVH = Vs;
  HVH.noalias() -= (2.0 / vv) * (v * Vv.transpose() + Vv * v.transpose());
  HVH.noalias() += (4.0 * vVv / (vv * vv)) * (v * v.transpose());
  const Eigen::Index n = HVH.rows() - 1;
  Eigen::LLT<Eigen::MatrixXd> llt(HVH.bottomRightCorner(n, n));
  r.V_definite = llt.info() == Eigen::Success;
  if (r.V_definite) {
    const LanczosResult inv = lanczos_extremes(
        [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(llt.solve(x)); }, ident, Eigen::VectorXd::Ones(n), lo);
    r.V_min_complement = 1.0 / (inv.max * vmax.max);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Jump relations and boundary integral equations

namespace {

Vec3 smooth_rho(const Vec3& x) { return Vec3(std::sin(2.0 * x[0] + x[1]), std::cos(x[1] - x[2]), x[0] * x[2] + 0.5); }
Vec3 smooth_psi(const Vec3& x) {
  return Vec3(std::cos(x[0] - 2.0 * x[2]), x[0] * x[1] - x[2], std::sin(x[1] + x[2]) + 0.3);
}

Vec3 traction(const PotentialValue& v, const Vec3& n) {
  return (0.5 * (v.grad + v.grad.transpose()) - v.p * Mat3::Identity()) * n;
}

double rms_ratio(double err2, double ref2) { return ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2); }

}  // namespace

JumpReport jump_relations(const SurfaceMesh& s, int points, unsigned seed) {
  JumpReport rep;
  rep.points = points;
  rep.h = s.h();
  const TriangleField rho = field_from_density(s, interpolate_density(s, smooth_rho));
  const TriangleField psi = field_from_p1(s, interpolate_p1(s, smooth_psi));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> tri(0, s.num_tris() - 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);

  struct Sample {
    Vec3 y, n;
    double eps;
    std::array<double, 3> l;
    int t;
  };
  std::vector<Sample> samples(points);
  for (Sample& sm : samples) {
    sm.t = tri(rng);
    double a = U(rng), b = U(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    // Barycentrics at least 0.2 away from the edges.
    sm.l = {0.2 + 0.4 * (1.0 - a - b), 0.2 + 0.4 * a, 0.2 + 0.4 * b};
    const auto& T = s.tris[sm.t];
    sm.y = sm.l[0] * s.vertices[T[0]] + sm.l[1] * s.vertices[T[1]] + sm.l[2] * s.vertices[T[2]];
    sm.n = s.normals[sm.t];
    sm.eps = 0.1 * s.diameter(sm.t);
  }

  std::vector<std::array<double, 8>> acc(points);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < points; ++i) {
    const Sample& sm = samples[i];
    // side -1: gamma^- (against the normal), +1: gamma^+.
    std::array<PotentialValue, 2> S_lim, D_lim;
    for (int side = 0; side < 2; ++side) {
      const double sgn = side == 0 ? -1.0 : 1.0;
      std::array<PotentialValue, 3> Sv, Dv;
      for (int k = 0; k < 3; ++k) {
        const Vec3 x = sm.y + sgn * (k + 1) * sm.eps * sm.n;
        Sv[k] = single_layer_potential(s, rho, x, true);
        Dv[k] = double_layer_potential(s, psi, x, true);
      }
      auto extrap = [](const std::array<PotentialValue, 3>& v) {
        PotentialValue r;
        r.u = 3.0 * v[0].u - 3.0 * v[1].u + v[2].u;
        r.p = 3.0 * v[0].p - 3.0 * v[1].p + v[2].p;
        r.grad = 3.0 * v[0].grad - 3.0 * v[1].grad + v[2].grad;
        return r;
      };
      S_lim[side] = extrap(Sv);
      D_lim[side] = extrap(Dv);
    }
    Vec3 rho_y = Vec3::Zero(), psi_y = Vec3::Zero();
    for (int j = 0; j < 3; ++j) {
      rho_y += sm.l[j] * rho.v[sm.t][j];
      psi_y += sm.l[j] * psi.v[sm.t][j];
    }
    const Vec3 js = S_lim[0].u - S_lim[1].u;
    const Vec3 jd = D_lim[0].u - D_lim[1].u;
    const Vec3 jts = traction(S_lim[0], sm.n) - traction(S_lim[1], sm.n);
    const Vec3 jtd = traction(D_lim[0], sm.n) - traction(D_lim[1], sm.n);
    acc[i] = {js.squaredNorm(),
              S_lim[1].u.squaredNorm(),
              (jd + psi_y).squaredNorm(),
              psi_y.squaredNorm(),
              (jts - rho_y).squaredNorm(),
              rho_y.squaredNorm(),
              jtd.squaredNorm(),
              traction(D_lim[1], sm.n).squaredNorm()};
  }
  std::array<double, 8> sum{};
  for (const auto& a : acc)
    for (int k = 0; k < 8; ++k) sum[k] += a[k];
  rep.single_velocity = rms_ratio(sum[0], sum[1]);
  rep.double_velocity = rms_ratio(sum[2], sum[3]);
  rep.single_traction = rms_ratio(sum[4], sum[5]);
  rep.double_traction = rms_ratio(sum[6], sum[7]);
  return rep;
}

CalderonReport calderon_residual(const SurfaceMesh& s, const BoundaryOperators& ops, const StokesletSolution& st) {
  if (!ops.V.size() || !ops.K.size() || !ops.W.size()) throw VerifyError("calderon residual needs V, K and W");
  CalderonReport r;
  r.h = s.h();
  const Eigen::VectorXd u = interpolate_p1(s, [&](const Vec3& x) { return st.u(x); });
  Eigen::VectorXd t(density_dofs(s));
  for (int k = 0; k < s.num_tris(); ++k)
    for (int i = 0; i < 3; ++i)
      t.segment<3>(9 * k + 3 * i) = st.traction(s.vertices[s.tris[k][i]], s.normals[k]) / (2.0 * st.viscosity());
  const SparseMatrix Mdp = mass_density_p1(s);
  const SparseMatrix Md = mass_density(s);
  const SparseMatrix Mp = mass_p1(s);
  // u = -V t + (1/2 + K) u and t = (1/2 - K^t) t - W u.
  const Eigen::VectorXd r1 = 0.5 * (Mdp * u) - ops.K * u + ops.V * t;
  const Eigen::VectorXd r2 = 0.5 * (SparseMatrix(Mdp.transpose()) * t) + ops.K.transpose() * t + ops.W * u;
  r.bie1 = dual_norm(Md, r1) / std::sqrt(u.dot(Mp * u));
  r.bie2 = dual_norm(Mp, r2) / std::sqrt(t.dot(Md * t));
  return r;
}

// ---------------------------------------------------------------------------
// Kernel certificates and spectral estimates

KernelCertificate kernel_certificate(Workspace& w, FormulationKind kind, int level, const MeshPolicy& policy,
                                     bool factor_without_rm) {
  KernelCertificate c;
  c.kind = kind;
  c.level = level;
  const LevelSetup s = setup_level(w, kind, level, policy);
  const ProblemData data = placeholder_data(kind);
  {
    BuildOptions b = s.build;
    b.with_rm = false;
    const BlockSystem sys = build_system(s.d, w.cache, data, b);
    const double An = inf_norm(sys.matrix);
    for (const Eigen::VectorXd& z : kernel_vectors(s.d, sys.layout))
      c.kernel_residual =
          std::max(c.kernel_residual, (sys.matrix * z).lpNorm<Eigen::Infinity>() / (An * z.lpNorm<Eigen::Infinity>()));
    if (factor_without_rm) {
      const SparseLU lu(sys.matrix);
      c.pivot_ratio_without_rm = lu.singular() ? 0.0 : lu.pivot_ratio();
    }
  }
  const BlockSystem sys = build_system(s.d, w.cache, data, s.build);
  try {
    DirectSolver solver(sys.matrix);
    c.factored = true;
    c.pivot_ratio = solver.factor_report().pivot_ratio;
    c.zero_solution = solver.solve(Eigen::VectorXd::Zero(sys.layout.size())).norm();
  } catch (const SolveError&) {
    c.factored = false;
  }
  return c;
}

SpectralProblem::SpectralProblem(Workspace& w, FormulationKind kind, int level, const MeshPolicy& policy)
    : setup_(setup_level(w, kind, level, policy)) {
  BuildOptions b = setup_.build;
  b.with_rm = true;
  sys_ = build_system(setup_.d, w.cache, placeholder_data(kind), b);
  norms_ = norm_blocks(setup_.d, w.cache);
  P_ = std::make_unique<KernelProjector>(sys_, norms_);
}

CoercivityReport SpectralProblem::coercivity(double delta, const LanczosOptions& opt) const {
  CoercivityReport r;
  if (delta == 0.0) {
    r = kernel_coercivity(sys_, *P_, nullptr, opt);
  } else {
    const TTransform T = t_transform(setup_.d, sys_.layout, delta);
    r = kernel_coercivity(sys_, *P_, &T, opt);
  }
  r.delta = delta;
  return r;
}

InfSupReport SpectralProblem::infsup(const LanczosOptions& opt) const { return discrete_infsup(sys_, *P_, norms_, opt); }

std::vector<double> default_delta_ladder() {
  std::vector<double> d;
  for (int e = -10; e <= 0; ++e) d.push_back(std::ldexp(1.0, e));
  return d;
}

DeltaScan scan_delta(const SpectralProblem& p, const std::vector<double>& deltas, double threshold,
                     const LanczosOptions& opt) {
  DeltaScan scan;
  for (double delta : deltas) {
    scan.tried.push_back(p.coercivity(delta, opt));
    if (coercive(scan.tried.back(), threshold)) {
      scan.delta = delta;
      break;
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Cross-formulation agreement and exterior evaluation

double velocity_distance_mod_rm(const TetMesh& m, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const int nt = m.num_tets();
  Eigen::Matrix<double, 6, 6> G = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  Vec3 c = Vec3::Zero();
  for (int t = 0; t < nt; ++t) c += m.volumes[t] * m.centroid(t);
  c /= m.volume();
  auto basis = [&](int t) {
    Eigen::Matrix<double, 3, 6> Z;
    const Vec3 x = m.centroid(t) - c;
    Z.leftCols<3>().setIdentity();
    for (int k = 0; k < 3; ++k) Z.col(3 + k) = unit(k).cross(x);
    return Z;
  };
  for (int t = 0; t < nt; ++t) {
    const auto Z = basis(t);
    const Vec3 e = a.segment<3>(3 * t) - b.segment<3>(3 * t);
    G += m.volumes[t] * Z.transpose() * Z;
    rhs += m.volumes[t] * Z.transpose() * e;
  }
  const Eigen::Matrix<double, 6, 1> alpha = G.ldlt().solve(rhs);
  double d2 = 0.0;
  for (int t = 0; t < nt; ++t) {
    const Vec3 e = a.segment<3>(3 * t) - b.segment<3>(3 * t) - basis(t) * alpha;
    d2 += m.volumes[t] * e.squaredNorm();
  }
  return std::sqrt(d2);
}

std::vector<CrossRow> cross_formulation_check(Workspace& w, const std::vector<int>& levels, const VectorField& f,
                                              double viscosity, const MeshPolicy& policy) {
  ProblemData data;
  data.f = f;
  data.viscosity = viscosity;
  std::vector<CrossRow> rows;
  for (int level : levels) {
    CrossRow row;
    row.level = level;
    const LevelSetup jn = setup_level(w, FormulationKind::JN_NeumannHomog, level, policy);
    // Same phi partition for both.
    MeshPolicy chp = policy;
    chp.trace_coarsening = jn.d.trace_coarsening;
    const LevelSetup ch = setup_level(w, FormulationKind::CH_NeumannHomog, level, chp);
    row.h = jn.d.h;
    row.jn_ratio = jn.d.h / jn.d.h_trace;
    SolutionBundle a, b;
    {
      const BlockSystem sys = build_system(jn.d, w.cache, data, jn.build);
      a = solve_direct(sys, jn.d, data).solution;
    }
    {
      const BlockSystem sys = build_system(ch.d, w.cache, data, ch.build);
      b = solve_direct(sys, ch.d, data).solution;
    }
    const StressSpace& S = *ch.d.stress;
    row.sigma_distance = stress_l2_distance(S, a.sigma, b.sigma) * b.stress_scale;
    row.sigma_norm = stress_l2_distance(S, b.sigma, Eigen::VectorXd::Zero(b.sigma.size())) * b.stress_scale;
    const TetMesh& m = *ch.d.mesh;
    row.u_distance = velocity_distance_mod_rm(m, a.u, b.u);
    row.u_norm = std::sqrt(b.u.dot(velocity_mass(m).cwiseProduct(b.u)));
    rows.push_back(row);
  }
  return rows;
}

std::vector<Vec3> sphere_points(int n, double radius) {
  std::vector<Vec3> pts;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(1.0 - z * z);
    pts.emplace_back(radius * r * std::cos(golden * i), radius * r * std::sin(golden * i), radius * z);
  }
  return pts;
}

ExteriorReport exterior_errors(const ExteriorEvaluator& ev, const StokesletSolution& st, const std::vector<Vec3>& pts) {
  ExteriorReport r;
  r.points = static_cast<int>(pts.size());
  r.radius = pts.empty() ? 0.0 : pts.front().norm();
  const std::vector<ExteriorSample> v = ev.eval(pts);
  double eu = 0.0, nu = 0.0, ep = 0.0, np = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 ue = st.u(pts[i]);
    const double pe = st.p(pts[i]);
    eu += (v[i].u - ue).squaredNorm();
    nu += ue.squaredNorm();
    ep += (v[i].p - pe) * (v[i].p - pe);
    np += pe * pe;
  }
  r.u_error = rms_ratio(eu, nu);
  r.p_error = rms_ratio(ep, np);
  return r;
}

DecayReport far_field_decay(const ExteriorEvaluator& ev, int directions, double r1, double r2) {
  DecayReport r;
  r.r1 = r1;
  r.r2 = r2;
  const std::vector<ExteriorSample> a = ev.eval(sphere_points(directions, r1));
  const std::vector<ExteriorSample> b = ev.eval(sphere_points(directions, r2));
  double ua = 0.0, ub = 0.0, pa = 0.0, pb = 0.0;
  for (int i = 0; i < directions; ++i) {
    ua += a[i].u.squaredNorm();
    ub += b[i].u.squaredNorm();
    pa += a[i].p * a[i].p;
    pb += b[i].p * b[i].p;
  }
  r.u_ratio = std::sqrt(ub / ua);
  r.p_ratio = std::sqrt(pb / pa);
  r.u_expected = r1 / r2;
  r.p_expected = (r1 / r2) * (r1 / r2);
  return r;
}

}  // namespace sfb
