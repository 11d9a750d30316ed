#include "common.hpp"

#include <random>

using namespace sfb;

namespace {

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

const std::array<FormulationKind, 4> kAllKinds{FormulationKind::JN_NeumannHomog, FormulationKind::CH_Dirichlet,
                                               FormulationKind::CH_Neumann, FormulationKind::CH_NeumannHomog};

}  // namespace

TEST_CASE("kind names round trip") {
  for (FormulationKind k : kAllKinds) CHECK(parse_kind(kind_name(k)) == k);
  CHECK_THROWS_AS(parse_kind("jn-dirichlet"), FormError);
}

TEST_CASE("deviatoric mass") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  const SparseMatrix A = assemble_dev_mass(S);
  CHECK(std::abs(S.identity().dot(A * S.identity())) < 1e-12);
  CHECK((A * S.identity()).norm() < 1e-12);
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXd x = random_vector(S.size(), seed);
    CHECK(x.dot(A * x) >= -1e-12 * x.squaredNorm());
  }
  // Constant e1 e2^T + e2 e1^T is traceless with |sigma^d|^2 = 2.
  const Eigen::VectorXd s = S.interpolate([](const Vec3&) {
    Mat3 t = Mat3::Zero();
    t(0, 1) = t(1, 0) = 1.0;
    return t;
  });
  CHECK(s.dot(A * s) == doctest::Approx(2.0 * 7.0).epsilon(1e-12));
}

TEST_CASE("divergence and skew blocks") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  const SparseMatrix Bd = assemble_div_block(S), Bs = assemble_skew_block(S);
  // tau with div tau = e1 against v = e1.
  const Eigen::VectorXd tau = S.interpolate([](const Vec3& x) {
    Mat3 t = Mat3::Zero();
    t(0, 0) = x[0];
    return t;
  });
  Eigen::VectorXd v = Eigen::VectorXd::Zero(velocity_dofs(m));
  for (int t = 0; t < m.num_tets(); ++t) v[3 * t] = 1.0;
  CHECK(std::abs(v.dot(Bd * tau)) == doctest::Approx(7.0).epsilon(1e-12));
  // Constant symmetric tau: no skew part and no divergence.
  const Eigen::VectorXd sym = S.interpolate([](const Vec3&) {
    Mat3 t;
    t << 1, 2, 3, 2, 4, 5, 3, 5, 6;
    return t;
  });
  CHECK((Bs * sym).norm() < 1e-12);
  CHECK((Bd * sym).norm() < 1e-12);
  // A skew constant pairs with its own coefficients.
  const Eigen::VectorXd skew = S.interpolate([](const Vec3&) { return skew_from_coeffs(1.0, 0.0, 0.0); });
  CHECK((Bs * skew).norm() > 0.1);
}

TEST_CASE("inner boundary multiplier block") {
  const MeshHierarchy& H = test::annulus();
  const Discretization d = make_discretization(H, FormulationKind::CH_Neumann, 2, 0, 1);
  const SparseMatrix L = assemble_gamma0_trace_block(d);
  const StressSpace& S = *d.stress;
  const Eigen::VectorXd I = S.identity();
  CHECK((interpolate_p1(d.lambda_mesh, [](const Vec3&) { return Vec3(1, 0, 0); }).transpose() * L * I).norm() < 1e-12);
  const RigidMotions rm(d.lambda_mesh);
  for (int k = 0; k < 6; ++k) CHECK(std::abs(rm.interpolants().col(k).dot(L * I)) < 1e-12);
  // A basis function of an interior facet has no trace on the inner boundary.
  int f = 0;
  while (d.mesh->facets[f].tag != 0) ++f;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(S.size());
  e[S.dof(f, 0, 0)] = 1.0;
  CHECK((L * e).norm() == 0.0);
  CHECK_THROWS_AS(assemble_gamma0_trace_block(make_discretization(H, FormulationKind::CH_Dirichlet, 1)), FormError);
}

TEST_CASE("zero data gives a zero right-hand side") {
  OperatorCache cache(QuadOptions{});
  for (FormulationKind k : kAllKinds) {
    const int level = 1;
    const int tc = k == FormulationKind::JN_NeumannHomog ? 1 : 0;
    const Discretization d = make_discretization(test::annulus(), k, level, tc, 1);
    const BlockSystem sys = build_system(d, cache, test::zero_data(k));
    CHECK(sys.rhs.norm() == 0.0);
    CHECK(sys.layout.size() == sys.matrix.rows());
    CHECK(sys.layout.n_rm == 6);
    if (k == FormulationKind::CH_Neumann) CHECK(sys.layout.n_lambda > 0);
  }
}

TEST_CASE("JN rejects a phi partition as fine as the volume mesh") {
  OperatorCache cache(QuadOptions{});
  const Discretization d = make_discretization(test::annulus(), FormulationKind::JN_NeumannHomog, 1, 0);
  CHECK_THROWS_AS(build_system(d, cache, ProblemData{}), FormError);
  BuildOptions b;
  b.enforce_mesh_ratio = false;
  CHECK_NOTHROW(build_system(d, cache, ProblemData{}, b));
}

TEST_CASE("rigid-motion kernel vectors of the unconstrained systems") {
  OperatorCache cache(QuadOptions::accurate());
  for (FormulationKind k : kAllKinds) {
    const int tc = k == FormulationKind::JN_NeumannHomog ? 1 : 0;
    const Discretization d = make_discretization(test::annulus(), k, 1, tc, 1);
    BuildOptions b;
    b.with_rm = false;
    const BlockSystem sys = build_system(d, cache, test::zero_data(k), b);
    const double An = Eigen::MatrixXd(sys.matrix).cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
    const std::vector<Eigen::VectorXd> z = kernel_vectors(d, sys.layout);
    REQUIRE(z.size() == 6);
    for (const Eigen::VectorXd& v : z) CHECK((sys.matrix * v).lpNorm<Eigen::Infinity>() < 1e-8 * An * v.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("T transform") {
  const Discretization d = make_discretization(test::annulus(), FormulationKind::CH_Dirichlet, 1);
  OperatorCache cache(QuadOptions{});
  const BlockSystem sys = build_system(d, cache, test::zero_data(FormulationKind::CH_Dirichlet));
  const TTransform T = t_transform(d, sys.layout, 0.25);
  const int n = sys.layout.primal();
  // Traceless stresses (c = 0) are left alone.
  Eigen::VectorXd x = random_vector(n, 3);
  Eigen::VectorXd x0 = x;
  x0 -= (T.c.dot(x) / T.c.squaredNorm()) * T.c;
  CHECK((T.apply(x0) - x0).norm() < 1e-14 * x0.norm());
  CHECK((T.apply_inverse(T.apply(x)) - x).norm() < 1e-13 * x.norm());
  CHECK(T.c.tail(sys.layout.n_phi).norm() == 0.0);
  CHECK(T.psi.head(sys.layout.n_sigma).norm() == 0.0);
}

TEST_CASE("dense reference spectra on the coarse mesh") {
  OperatorCache cache(QuadOptions{});
  const Discretization d = make_discretization(test::annulus(), FormulationKind::CH_Dirichlet, 0);
  const BlockSystem sys = build_system(d, cache, test::zero_data(FormulationKind::CH_Dirichlet));
  const NormBlocks norms = norm_blocks(d, cache);
  double best = -1.0;
  for (double delta : default_delta_ladder()) {
    const TTransform T = t_transform(d, sys.layout, delta);
    best = std::max(best, dense_kernel_min_eig(sys, norms, &T));
  }
  CHECK(best > 0.0);
  CHECK(dense_infsup(sys, norms) > 0.0);
}
