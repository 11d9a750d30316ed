#include "sfb/solve.hpp"

#include "sfb/quadrature.hpp"

#include <chrono>
#include <cmath>

namespace sfb {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::array<double, 4> bary(const Vec3& p) { return {1.0 - p.sum(), p[0], p[1], p[2]}; }

Vec3 tet_point(const TetMesh& m, int t, const std::array<double, 4>& l) {
  Vec3 x = Vec3::Zero();
  for (int i = 0; i < 4; ++i) x += l[i] * m.vertices[m.tets[t][i]];
  return x;
}

}  // namespace

DirectSolver::DirectSolver(const SparseMatrix& A, const SolveOptions& opt) : A_(&A), opt_(opt) {
  const auto t0 = std::chrono::steady_clock::now();
  lu_ = std::make_unique<SparseLU>(A);
  base_.factor_seconds = seconds_since(t0);
  base_.pivot_ratio = lu_->pivot_ratio();
  base_.unknowns = A.rows();
  if (lu_->singular()) throw SolveError("singular factorization: zero pivot");
  if (!lu_->ok()) throw SolveError("factorization failed: " + lu_->message());
  if (opt_.estimate_condition) {
    base_.condition = lu_->condition_estimate();
    if (!(base_.condition <= opt_.singular_condition))
      throw SolveError("singular factorization: condition estimate " + std::to_string(base_.condition));
  }
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& b, SolveReport* report) const {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep = base_;
  Eigen::VectorXd x = lu_->solve(b);
  const double bn = b.norm();
  auto residual = [&](const Eigen::VectorXd& r) { return bn > 0.0 ? r.norm() / bn : r.norm(); };
  Eigen::VectorXd r = b - (*A_) * x;
  rep.residual = residual(r);
  while (rep.residual > 0.1 * opt_.residual_tolerance && rep.refinement_steps < opt_.max_refinement) {
    x += lu_->solve(r);
    r = b - (*A_) * x;
    rep.residual = residual(r);
    ++rep.refinement_steps;
  }
  rep.solve_seconds = seconds_since(t0);
  if (report) *report = rep;
  if (!std::isfinite(rep.residual) || rep.residual > opt_.residual_tolerance)
    throw SolveError("relative residual " + std::to_string(rep.residual) + " exceeds tolerance");
  return x;
}

SolutionBundle split_solution(const BlockSystem& sys, const Discretization& d, const ProblemData& data,
                              const Eigen::VectorXd& x) {
  const BlockLayout& L = sys.layout;
  SolutionBundle s;
  s.kind = sys.kind;
  s.layout = L;
  s.h = d.h;
  s.h_trace = d.h_trace;
  s.stress_scale = data.stress_scale();
  s.sigma = x.segment(L.sigma(), L.n_sigma);
  s.phi = x.segment(L.phi(), L.n_phi);
  s.u = x.segment(L.u(), L.n_u);
  s.chi = x.segment(L.chi(), L.n_chi);
  s.lambda = x.segment(L.lambda(), L.n_lambda);
  s.rm = x.segment(L.rm(), L.n_rm);
  return s;
}

Eigen::VectorXd join_solution(const SolutionBundle& s) {
  const BlockLayout& L = s.layout;
  Eigen::VectorXd x(L.size());
  x.segment(L.sigma(), L.n_sigma) = s.sigma;
  x.segment(L.phi(), L.n_phi) = s.phi;
  x.segment(L.u(), L.n_u) = s.u;
  x.segment(L.chi(), L.n_chi) = s.chi;
  x.segment(L.lambda(), L.n_lambda) = s.lambda;
  x.segment(L.rm(), L.n_rm) = s.rm;
  return x;
}

SolveResult solve_direct(const BlockSystem& sys, const Discretization& d, const ProblemData& data,
                         const SolveOptions& opt) {
  DirectSolver solver(sys.matrix, opt);
  SolveResult out;
  const Eigen::VectorXd x = solver.solve(sys.rhs, &out.report);
  out.solution = split_solution(sys, d, data, x);
  if (sys.with_rm) {
    const RigidMotions rm(d.trace_mesh);
    const double c = (rm.constraint_rows() * out.solution.phi).norm();
    if (c > 1e-9 * std::max(out.solution.phi.norm(), 1.0))
      throw SolveError("rigid-motion constraint residual " + std::to_string(c));
  }
  return out;
}

Eigen::VectorXd recover_pressure(const StressSpace& S, const Eigen::VectorXd& sigma, double scale) {
  const int nt = S.mesh().num_tets();
  Eigen::VectorXd p(nt);
  const std::array<double, 4> mid{0.25, 0.25, 0.25, 0.25};
  for (int t = 0; t < nt; ++t) p[t] = -scale * S.eval(sigma, t, mid).trace() / 3.0;
  return p;
}

ExteriorEvaluator::ExteriorEvaluator(const Discretization& d, const SolutionBundle& s)
    : ExteriorEvaluator(d.gamma, normal_trace(*d.stress, d.gamma) * s.sigma, d.P_trace * s.phi, s.stress_scale,
                        d.h) {}

ExteriorEvaluator::ExteriorEvaluator(const SurfaceMesh& gamma, const Eigen::VectorXd& traction_density,
                                     const Eigen::VectorXd& velocity_p1, double stress_scale, double h)
    : gamma_(&gamma), scale_(stress_scale), h_(h) {
  t_ = field_from_density(gamma, traction_density);
  phi_ = field_from_p1(gamma, velocity_p1);
  for (const Vec3& v : gamma.vertices) half_width_ = std::max(half_width_, v.cwiseAbs().maxCoeff());
}

ExteriorSample ExteriorEvaluator::eval(const Vec3& x) const {
  const Vec3 out = (x.cwiseAbs().array() - half_width_).max(0.0).matrix();
  if (out.norm() == 0.0) throw SolveError("exterior point inside the closed outer boundary");
  if (out.norm() < 0.1 * h_) throw SolveError("exterior point closer than 0.1 h to the boundary");
  const PotentialValue s = single_layer_potential(*gamma_, t_, x);
  const PotentialValue dl = double_layer_potential(*gamma_, phi_, x);
  ExteriorSample r;
  r.x = x;
  r.u = -s.u + dl.u;
  r.p = scale_ * (-s.p + dl.p);
  return r;
}

std::vector<ExteriorSample> ExteriorEvaluator::eval(const std::vector<Vec3>& xs) const {
  std::vector<ExteriorSample> out(xs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval(xs[i]);
  return out;
}

ErrorRecord energy_errors(const Discretization& d, const SolutionBundle& s, const ExactFields& ex,
                          const Eigen::MatrixXd* W_trace, int degree) {
  const TetMesh& m = *d.mesh;
  const StressSpace& S = *d.stress;
  const TetRule& rule = tet_rule(degree);
  ErrorRecord e;
  auto acc = [](FieldError& f, double diff2, double norm2) {
    f.error += diff2;
    f.norm += norm2;
  };
  for (int t = 0; t < m.num_tets(); ++t) {
    const double vol = m.volumes[t];
    const Vec3 divh = s.stress_scale * S.divergence(s.sigma, t);
    const Vec3 uh = s.u.segment<3>(3 * t);
    const Mat3 chih = skew_from_coeffs(s.chi[3 * t], s.chi[3 * t + 1], s.chi[3 * t + 2]);
    const std::array<double, 4> mid{0.25, 0.25, 0.25, 0.25};
    const double ph = -s.stress_scale * S.eval(s.sigma, t, mid).trace() / 3.0;
    for (int q = 0; q < rule.size(); ++q) {
      const auto l = bary(rule.p[q]);
      const Vec3 x = tet_point(m, t, l);
      const double w = 6.0 * vol * rule.w[q];
      if (ex.sigma) {
        const Mat3 se = ex.sigma(x);
        acc(e.sigma, w * (se - s.stress_scale * S.eval(s.sigma, t, l)).squaredNorm(), w * se.squaredNorm());
      }
      if (ex.div_sigma) {
        const Vec3 de = ex.div_sigma(x);
        acc(e.div_sigma, w * (de - divh).squaredNorm(), w * de.squaredNorm());
      }
      if (ex.u) {
        const Vec3 ue = ex.u(x);
        acc(e.u, w * (ue - uh).squaredNorm(), w * ue.squaredNorm());
      }
      if (ex.grad_u) {
        const Mat3 g = ex.grad_u(x);
        const Mat3 ce = 0.5 * (g - g.transpose());
        acc(e.chi, w * (ce - chih).squaredNorm(), w * ce.squaredNorm());
      }
      if (ex.p) {
        const double pe = ex.p(x);
        acc(e.p, w * (pe - ph) * (pe - ph), w * pe * pe);
      }
    }
  }
  if (ex.u) {
    // phi is fixed only up to a rigid motion, which the constraint rows select.
    const Eigen::VectorXd ref = interpolate_p1(d.trace_mesh, ex.u);
    const Eigen::VectorXd diff = RigidMotions(d.trace_mesh).project(s.phi - ref).remainder;
    const SparseMatrix M = mass_p1(d.trace_mesh);
    e.phi_l2 = {diff.dot(M * diff), ref.dot(M * ref)};
    if (W_trace) e.phi_w = {std::max(0.0, diff.dot(*W_trace * diff)), std::max(0.0, ref.dot(*W_trace * ref))};
    if (d.has_lambda()) {
      e.has_lambda = true;
      const Eigen::VectorXd lref = interpolate_p1(d.lambda_mesh, ex.u);
      const Eigen::VectorXd ld = s.lambda - lref;
      const SparseMatrix M0 = mass_p1(d.lambda_mesh);
      e.lambda = {ld.dot(M0 * ld), lref.dot(M0 * lref)};
    }
  }
  for (FieldError* f : {&e.sigma, &e.div_sigma, &e.u, &e.chi, &e.p, &e.phi_w, &e.phi_l2, &e.lambda}) {
    f->error = std::sqrt(f->error);
    f->norm = std::sqrt(f->norm);
  }
  return e;
}

double stress_l2_distance(const StressSpace& S, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd d = a - b;
  return std::sqrt(std::max(0.0, d.dot(S.l2_gram() * d)));
}

}  // namespace sfb
