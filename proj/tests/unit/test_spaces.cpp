#include "common.hpp"

#include <random>

using namespace sfb;

namespace {

Vec3 affine(const Vec3& x) { return Vec3(0.3 + x[1] - 0.2 * x[2], -x[0] + 0.5, 0.2 * x[0] + 1.0); }

}  // namespace

TEST_CASE("normal trace of the identity is the normal") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  for (int tag : {kGammaOuter, kGammaInner}) {
    const SurfaceMesh s = extract_surface(m, tag);
    const Eigen::VectorXd rho = normal_trace(S, s) * S.identity();
    CHECK((rho - normal_density(s)).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("zero-trace space has no density on the inner boundary") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S0(m, true), S(m, false);
  CHECK(S0.size() < S.size());
  const SurfaceMesh g0 = extract_surface(m, kGammaInner);
  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(S0.size());
  for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
  CHECK((normal_trace(S0, g0) * c).norm() == 0.0);
  CHECK((normal_trace(S0, extract_surface(m, kGammaOuter)) * c).norm() > 0.0);
}

TEST_CASE("a single facet basis function has a one-point density") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  const SurfaceMesh g = extract_surface(m, kGammaOuter);
  const SparseMatrix N = normal_trace(S, g);
  const int t = 5, f = g.facet[t];
  for (int i = 0; i < 3; ++i)
    for (int r = 0; r < 3; ++r) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(S.size());
      e[S.dof(f, i, r)] = 1.0;
      const Eigen::VectorXd rho = N * e;
      int nnz = 0;
      for (int k = 0; k < rho.size(); ++k)
        if (rho[k] != 0.0) {
          ++nnz;
          CHECK(k / 9 == t);
          CHECK(k % 3 == r);
          CHECK(std::abs(rho[k]) == 1.0);
        }
      CHECK(nnz == 1);
    }
}

TEST_CASE("stress interpolation is exact for piecewise linear fields") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  auto sigma = [](const Vec3& x) {
    Mat3 s;
    s << 1 + x[0], x[1], 0.5, -x[2], 2.0, x[0] - x[1], 0.3, x[2], -1 + x[1];
    return s;
  };
  const Eigen::VectorXd c = S.interpolate(sigma);
  for (int t = 0; t < m.num_tets(); t += 17) {
    const std::array<double, 4> l{0.1, 0.2, 0.3, 0.4};
    Vec3 x = Vec3::Zero();
    for (int i = 0; i < 4; ++i) x += l[i] * m.vertices[m.tets[t][i]];
    CHECK((S.eval(c, t, l) - sigma(x)).norm() < 1e-13);
    const Vec3 div(2.0, 0.0, 0.0);
    CHECK((S.divergence(c, t) - div).norm() < 1e-12);
  }
}

TEST_CASE("identity projection") {
  const TetMesh& m = test::annulus().level(1);
  const StressSpace S(m, false);
  const IdentityProjection pi = project_pi_I(S, S.identity());
  CHECK(pi.d == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(pi.remainder.norm() < 1e-12);
  const Eigen::VectorXd tl = S.interpolate([](const Vec3& x) {
    Mat3 s = Mat3::Zero();
    s(0, 1) = x[2];
    s(0, 0) = 1.0;
    s(1, 1) = -1.0;
    return s;
  });
  const IdentityProjection p2 = project_pi_I(S, tl);
  CHECK(std::abs(p2.d) < 1e-13);
  CHECK((p2.remainder - tl).norm() < 1e-12);
  const Eigen::VectorXd d3 = S.interpolate([](const Vec3&) { return Mat3(Eigen::Vector3d(3, 0, 0).asDiagonal()); });
  const IdentityProjection p3 = project_pi_I(S, d3);
  CHECK(p3.d == doctest::Approx(1.0).epsilon(1e-13));
  CHECK((p3.remainder - (d3 - S.identity())).norm() < 1e-12);
}

TEST_CASE("rigid-motion projection") {
  const SurfaceMesh& s = test::outer(1);
  const RigidMotions rm(s);
  CHECK(rm.centroid().norm() < 1e-14);
  for (int k = 0; k < 6; ++k) {
    const RigidMotions::Projection p = rm.project(rm.interpolants().col(k));
    for (int j = 0; j < 6; ++j) CHECK(p.alpha[j] == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-12));
    CHECK(p.remainder.norm() < 1e-12);
  }
  const Eigen::VectorXd psi = interpolate_p1(s, [](const Vec3& x) { return Vec3(x[0] * x[0], x[1] * x[2], std::sin(x[0])); });
  const Eigen::VectorXd rem = rm.project(psi).remainder;
  const RigidMotions::Projection p0 = rm.project(rem);
  CHECK(p0.alpha.norm() < 1e-12);
  CHECK((p0.remainder - rem).norm() < 1e-12);
  // A constant field is a translation; the rotation moments vanish by symmetry.
  const RigidMotions::Projection pc = rm.project(interpolate_p1(s, [](const Vec3&) { return Vec3(1, 0, 0); }));
  CHECK(pc.alpha[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(pc.alpha.tail<5>().norm() < 1e-13);
  CHECK(pc.remainder.norm() < 1e-12);
}

TEST_CASE("rigid-motion constraint rows") {
  const SurfaceMesh& s = test::outer(1);
  const RigidMotions rm(s);
  const Eigen::MatrixXd& R = rm.constraint_rows();
  for (int k = 0; k < 6; ++k) CHECK((R * rm.interpolants().col(k) - rm.gram().col(k)).norm() < 1e-12);
  const Eigen::VectorXd rem = rm.project(interpolate_p1(s, affine)).remainder;
  CHECK((R * rem).norm() < 1e-10);
  const Eigen::VectorXd ez = interpolate_p1(s, [](const Vec3&) { return Vec3(0, 0, 1); });
  CHECK((R * ez)[2] == doctest::Approx(24.0).epsilon(1e-13));
}

TEST_CASE("m field projection") {
  const SurfaceMesh& s = test::outer(1);
  const MField mf(s);
  CHECK(mf.m_dot_nu() == doctest::Approx(24.0).epsilon(1e-13));
  const MField::Projection p = mf.project(normal_density(s));
  CHECK(p.s == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(p.remainder.norm() < 1e-12);
  const Eigen::VectorXd rho = interpolate_density(s, affine);
  const Eigen::VectorXd r0 = mf.project(rho).remainder;
  CHECK(std::abs(mf.moment(r0)) < 1e-12);
  CHECK(std::abs(mf.project(r0).s) < 1e-13);
}

TEST_CASE("P1 prolongation reproduces affine fields") {
  const MeshHierarchy& H = test::annulus();
  const SurfaceMesh fine = extract_surface(H.level(2), kGammaOuter), coarse = extract_surface(H.level(1), kGammaOuter);
  const SparseMatrix P = prolongation_p1(fine, coarse, H.parents[2]);
  CHECK((P * interpolate_p1(coarse, affine) - interpolate_p1(fine, affine)).norm() < 1e-13);
}

TEST_CASE("velocity and vorticity projections") {
  const TetMesh& m = test::annulus().level(1);
  const Eigen::VectorXd u = project_velocity(m, affine);
  for (int t = 0; t < m.num_tets(); t += 11) CHECK((u.segment<3>(3 * t) - affine(m.centroid(t))).norm() < 1e-13);
  CHECK(velocity_mass(m).sum() == doctest::Approx(21.0).epsilon(1e-12));
  const Mat3 A = skew_from_coeffs(1, 2, 3);
  CHECK((A + A.transpose()).norm() == 0.0);
  CHECK(A(0, 1) == 1.0);
  CHECK(A(0, 2) == 2.0);
  CHECK(A(1, 2) == 3.0);
}
