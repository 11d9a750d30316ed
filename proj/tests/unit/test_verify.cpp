#include "common.hpp"

#include <cmath>

using namespace sfb;

TEST_CASE("rates and decay classification") {
  CHECK(observed_rate(4.0, 1.0, 2.0, 1.0) == doctest::Approx(2.0));
  CHECK(observed_rate(1.0, 1.0, 2.0, 1.0) == doctest::Approx(0.0));
  CHECK(decays_to_zero({1.0, 0.6, 0.3}));
  CHECK_FALSE(decays_to_zero({1.0, 0.8, 0.6}));
  CHECK_FALSE(decays_to_zero({1.0, 0.3, 0.4}));
}

TEST_CASE("Stokeslet manufactured solution") {
  const StokesletSolution s = stokeslet_manufactured(Vec3(0.1, -0.05, 0.08), Vec3(1, 0.5, -0.3), 0.5);
  const FdReport fd = stokeslet_fd_check(s, 0.5, 1.0);
  CHECK(fd.momentum < 1e-6);
  CHECK(fd.divergence < 1e-6);
  CHECK(fd.gradient < 1e-6);
  CHECK(fd.self_gradient < 1e-8);
  CHECK(fd.force < 1e-10);
  // Degree -1 homogeneity far from the source.
  for (const Vec3& x : {Vec3(10, 0, 0), Vec3(-3, 7, 5), Vec3(0, 0, -20)})
    CHECK(s.u(2.0 * x).norm() / s.u(x).norm() == doctest::Approx(0.5).epsilon(0.1));
  CHECK_THROWS_AS(stokeslet_manufactured(Vec3(0.48, 0, 0), Vec3(1, 0, 0), 0.5), VerifyError);
  // Stress and pressure carry the factor 2 mu; the velocity does not.
  const StokesletSolution s2(s.source(), s.strength(), 2.0);
  const Vec3 x(0.7, 0.2, -0.9);
  CHECK((s2.u(x) - s.u(x)).norm() < 1e-16);
  CHECK(s2.p(x) == doctest::Approx(4.0 * s.p(x)).epsilon(1e-14));
  CHECK(std::abs(s.sigma(x).trace() + 3.0 * s.p(x)) < 1e-14);
}

TEST_CASE("kernel algebra at seeded pairs") {
  const KernelAlgebraReport r = kernel_algebra_check(100, 1);
  CHECK(r.pairs == 100);
  CHECK(r.max() <= 1e-13);
}

TEST_CASE("jump relations on level 1") {
  const JumpReport j = jump_relations(test::outer(1), 24, 3);
  CHECK(j.points == 24);
  // Frozen from the extrapolation study (level 1): 1.1e-2, 8.3e-3, 8.2e-2, 0.24.
  CHECK(j.single_velocity < 0.02);
  CHECK(j.double_velocity < 0.02);
  CHECK(j.single_traction < 0.15);
  CHECK(j.double_traction < 0.4);
}

TEST_CASE("velocity distance ignores rigid motions") {
  const TetMesh& m = test::annulus().level(1);
  const Eigen::VectorXd a = project_velocity(m, [](const Vec3& x) { return Vec3(x[0] * x[1], 1.0, x[2]); });
  const Eigen::VectorXd b =
      a + project_velocity(m, [](const Vec3& x) { return Vec3(1.0, -2.0, 0.5) + Vec3(0.3, -0.1, 0.7).cross(x); });
  CHECK(velocity_distance_mod_rm(m, a, b) < 1e-12);
  CHECK(velocity_distance_mod_rm(m, a, 2.0 * a) > 0.1);
}

TEST_CASE("Fibonacci sphere points") {
  const std::vector<Vec3> p = sphere_points(50, 3.0);
  REQUIRE(p.size() == 50);
  Vec3 mean = Vec3::Zero();
  for (const Vec3& x : p) {
    CHECK(x.norm() == doctest::Approx(3.0).epsilon(1e-14));
    mean += x / 50.0;
  }
  CHECK(mean.norm() < 0.1);
}

TEST_CASE("cross-formulation check with zero force") {
  Workspace w(0.5, 1.0, 1);
  const std::vector<CrossRow> rows = cross_formulation_check(w, {1}, [](const Vec3&) { return Vec3::Zero(); });
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].sigma_distance == 0.0);
  CHECK(rows[0].u_distance == 0.0);
}

TEST_CASE("doubling the singular order barely moves the level-1 errors") {
  const StokesletSolution st(Vec3(0.1, -0.05, 0.08), Vec3(1, 0.5, -0.3));
  const ProblemData data = stokeslet_data(FormulationKind::CH_Dirichlet, st);
  QuadOptions lo, hi;
  hi.singular_order = 2 * lo.singular_order;
  Workspace w1(0.5, 1.0, 1, lo), w2(0.5, 1.0, 1, hi);
  const ConvergenceTable a = run_convergence(w1, FormulationKind::CH_Dirichlet, {1}, data, st.fields());
  const ConvergenceTable b = run_convergence(w2, FormulationKind::CH_Dirichlet, {1}, data, st.fields());
  for (const char* f : {"sigma", "u", "p"}) {
    const double ea = a.errors(f)[0], eb = b.errors(f)[0];
    CHECK(std::abs(ea - eb) < 0.05 * eb);
  }
}

TEST_CASE("spectral problem on the coarsest level") {
  Workspace w(0.5, 1.0, 0);
  const SpectralProblem p(w, FormulationKind::CH_NeumannHomog, 0);
  const CoercivityReport c = p.coercivity();
  CHECK(c.converged);
  CHECK(coercive(c));
  const InfSupReport s = p.infsup();
  CHECK(s.converged);
  CHECK(s.beta > 0.0);
  // Lanczos against the dense generalized eigenproblem.
  const NormBlocks norms = norm_blocks(p.setup().d, w.cache);
  CHECK(c.min_eig == doctest::Approx(dense_kernel_min_eig(p.system(), norms, nullptr)).epsilon(1e-4));
  CHECK(s.beta == doctest::Approx(dense_infsup(p.system(), norms)).epsilon(1e-4));
}
