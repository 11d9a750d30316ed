#include "common.hpp"

using namespace sfb;

namespace {

const StokesletSolution& stokeslet() {
  static const StokesletSolution s(Vec3(0.1, -0.05, 0.08), Vec3(1, 0.5, -0.3));
  return s;
}

Workspace& workspace() {
  static Workspace w(0.5, 1.0, 1);
  return w;
}

}  // namespace

TEST_CASE("pressure recovery") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  const Eigen::VectorXd p = recover_pressure(S, -3.0 * S.identity());
  CHECK((p.array() - 3.0).abs().maxCoeff() < 1e-13);
  const Eigen::VectorXd tl = S.interpolate([](const Vec3& x) {
    Mat3 s;
    s << x[0], 1, 0, 2, -x[0], x[2], 0, 1, 0;
    return s;
  });
  CHECK(recover_pressure(S, tl).lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK((recover_pressure(S, S.identity(), 2.0).array() + 2.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("zero data gives the zero solution for every formulation") {
  for (FormulationKind k : {FormulationKind::JN_NeumannHomog, FormulationKind::CH_Dirichlet,
                            FormulationKind::CH_Neumann, FormulationKind::CH_NeumannHomog}) {
    const LevelSetup s = setup_level(workspace(), k, 1, {});
    const ProblemData data = test::zero_data(k);
    const BlockSystem sys = build_system(s.d, workspace().cache, data, s.build);
    const SolveResult r = solve_direct(sys, s.d, data);
    CHECK(join_solution(r.solution).norm() == 0.0);
  }
}

TEST_CASE("the solution is linear in the data") {
  const ProblemData d1 = stokeslet_data(FormulationKind::CH_Dirichlet, stokeslet());
  ProblemData d3 = d1;
  d3.g_D = [&](const Vec3& x) { return 3.0 * stokeslet().u(x); };
  d3.f = [](const Vec3& x) { return Vec3(3 * x[1], 0, 3.0); };
  ProblemData d1f = d1;
  d1f.f = [](const Vec3& x) { return Vec3(x[1], 0, 1.0); };
  const LevelSetup s = setup_level(workspace(), FormulationKind::CH_Dirichlet, 1, {});
  const SolveResult a = solve_direct(build_system(s.d, workspace().cache, d1f, s.build), s.d, d1f);
  const SolveResult b = solve_direct(build_system(s.d, workspace().cache, d3, s.build), s.d, d3);
  const Eigen::VectorXd xa = join_solution(a.solution), xb = join_solution(b.solution);
  CHECK((xb - 3.0 * xa).norm() < 1e-10 * xb.norm());
  CHECK(a.report.residual < 1e-9);
}

TEST_CASE("viscosity scales stress and pressure but not velocity") {
  const LevelSetup s = setup_level(workspace(), FormulationKind::CH_Dirichlet, 1, {});
  const StokesletSolution s1(Vec3(0.1, -0.05, 0.08), Vec3(1, 0.5, -0.3), 0.5), s2(s1.source(), s1.strength(), 2.0);
  const ProblemData d1 = stokeslet_data(FormulationKind::CH_Dirichlet, s1), d2 = stokeslet_data(FormulationKind::CH_Dirichlet, s2);
  const SolveResult a = solve_direct(build_system(s.d, workspace().cache, d1, s.build), s.d, d1);
  const SolveResult b = solve_direct(build_system(s.d, workspace().cache, d2, s.build), s.d, d2);
  CHECK((a.solution.u - b.solution.u).norm() < 1e-10 * a.solution.u.norm());
  CHECK(b.solution.stress_scale == doctest::Approx(4.0 * a.solution.stress_scale));
  CHECK((a.solution.sigma - b.solution.sigma).norm() < 1e-10 * a.solution.sigma.norm());
}

TEST_CASE("removing the rigid-motion rows collapses the pivots") {
  Workspace w(0.5, 1.0, 1, QuadOptions::accurate());
  for (FormulationKind k : {FormulationKind::JN_NeumannHomog, FormulationKind::CH_Dirichlet}) {
    const KernelCertificate c = kernel_certificate(w, k, 1);
    CHECK(c.factored);
    CHECK(c.zero_solution == 0.0);
    // Observed: about 1e-4 with the rows, below 1e-9 without them.
    CHECK(c.pivot_ratio > 1e-5);
    CHECK(c.pivot_ratio_without_rm < 1e-4 * c.pivot_ratio);
  }
}

TEST_CASE("split and join are inverse") {
  const LevelSetup s = setup_level(workspace(), FormulationKind::CH_Neumann, 1, {});
  const ProblemData data = stokeslet_data(FormulationKind::CH_Neumann, stokeslet());
  const BlockSystem sys = build_system(s.d, workspace().cache, data, s.build);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(sys.layout.size(), -1.0, 2.0);
  const SolutionBundle b = split_solution(sys, s.d, data, x);
  CHECK(b.lambda.size() == sys.layout.n_lambda);
  CHECK((join_solution(b) - x).norm() == 0.0);
}

TEST_CASE("exterior evaluation") {
  const LevelSetup s = setup_level(workspace(), FormulationKind::CH_Dirichlet, 1, {});
  const SurfaceMesh& g = s.d.gamma;
  const ExteriorEvaluator zero(g, Eigen::VectorXd::Zero(density_dofs(g)), Eigen::VectorXd::Zero(p1_dofs(g)), 1.0, s.d.h);
  const ExteriorSample z = zero.eval(Vec3(2.5, 1.0, -0.5));
  CHECK(z.u.norm() == 0.0);
  CHECK(z.p == 0.0);
  // Exact Cauchy data interpolated on the outer boundary reproduce the
  // Stokeslet outside, and the far field decays like 1/r and 1/r^2.
  const StokesletSolution& st = stokeslet();
  std::vector<double> err;
  for (int level : {0, 1}) {
    const LevelSetup l = setup_level(workspace(), FormulationKind::CH_Dirichlet, level, {});
    Eigen::VectorXd t(density_dofs(l.d.gamma));
    for (int tri = 0; tri < l.d.gamma.num_tris(); ++tri)
      for (int i = 0; i < 3; ++i)
        t.segment<3>(9 * tri + 3 * i) =
            st.traction(l.d.gamma.vertices[l.d.gamma.tris[tri][i]], l.d.gamma.normals[tri]) / (2 * st.viscosity());
    const ExteriorEvaluator ev(l.d.gamma, t, interpolate_p1(l.d.gamma, [&](const Vec3& x) { return st.u(x); }),
                               2 * st.viscosity(), l.d.h);
    const ExteriorReport r = exterior_errors(ev, st, sphere_points(24, 3.0));
    err.push_back(r.u_error);
    if (level == 1) {
      CHECK(r.u_error < 0.1);  // observed 0.084 (0.64 on level 0)
      const DecayReport d = far_field_decay(ev, 24, 3.0, 6.0);
      CHECK(d.u_ratio == doctest::Approx(0.5).epsilon(0.15));
      CHECK(d.p_ratio == doctest::Approx(0.25).epsilon(0.15));
    }
  }
  CHECK(err[1] < 0.25 * err[0]);
}

TEST_CASE("energy errors of interpolated exact fields") {
  const StokesletSolution& st = stokeslet();
  const ExactFields ex = st.fields();
  std::vector<double> es, eu;
  for (int level : {0, 1}) {
    const LevelSetup s = setup_level(workspace(), FormulationKind::CH_Dirichlet, level, {});
    const ProblemData data = stokeslet_data(FormulationKind::CH_Dirichlet, st);
    const BlockSystem sys = build_system(s.d, workspace().cache, data, s.build);
    SolutionBundle b = split_solution(sys, s.d, data, Eigen::VectorXd::Zero(sys.layout.size()));
    b.sigma = s.d.stress->interpolate([&](const Vec3& x) { return Mat3(st.sigma(x) / b.stress_scale); });
    b.u = project_velocity(*s.d.mesh, ex.u);
    b.phi = interpolate_p1(s.d.trace_mesh, ex.u);
    const ErrorRecord e = energy_errors(s.d, b, ex);
    es.push_back(e.sigma.error);
    eu.push_back(e.u.error);
    // phi is the interpolant itself, so its error vanishes.
    CHECK(e.phi_l2.error < 1e-12 * std::max(1.0, e.phi_l2.norm));
    CHECK(stress_l2_distance(*s.d.stress, b.sigma, b.sigma) == 0.0);
  }
  CHECK(es[1] < es[0]);
  CHECK(eu[1] < eu[0]);
}
