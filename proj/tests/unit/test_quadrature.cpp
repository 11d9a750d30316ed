#include "common.hpp"

#include <cmath>
#include <random>

using namespace sfb;

namespace {

// int over the reference triangle of x^i y^j = i! j! / (i + j + 2)!
double tri_monomial(int i, int j) { return std::tgamma(i + 1) * std::tgamma(j + 1) / std::tgamma(i + j + 3); }
// int over the reference tet of x^i y^j z^k = i! j! k! / (i + j + k + 3)!
double tet_monomial(int i, int j, int k) {
  return std::tgamma(i + 1) * std::tgamma(j + 1) * std::tgamma(k + 1) / std::tgamma(i + j + k + 4);
}

}  // namespace

TEST_CASE("reference volumes and low moments") {
  double v = 0.0;
  for (double w : tet_rule(1).w) v += w;
  CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  double ix = 0.0, ixy = 0.0;
  const TriRule& r1 = triangle_rule(1);
  for (int q = 0; q < r1.size(); ++q) ix += r1.w[q] * r1.p[q][0];
  const TriRule& r2 = triangle_rule(2);
  for (int q = 0; q < r2.size(); ++q) ixy += r2.w[q] * r2.p[q][0] * r2.p[q][1];
  CHECK(ix == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(ixy == doctest::Approx(1.0 / 24.0).epsilon(1e-15));
}

TEST_CASE("triangle and tet rules are exact to their degree") {
  for (int deg = 1; deg <= 12; ++deg) {
    const TriRule& r = triangle_rule(deg);
    CHECK(r.degree >= deg);
    for (double w : r.w) CHECK(w > 0.0);
    for (int i = 0; i <= deg; ++i)
      for (int j = 0; i + j <= deg; ++j) {
        double s = 0.0;
        for (int q = 0; q < r.size(); ++q) s += r.w[q] * std::pow(r.p[q][0], i) * std::pow(r.p[q][1], j);
        CHECK(s == doctest::Approx(tri_monomial(i, j)).epsilon(1e-13));
      }
    const TetRule& t = tet_rule(deg);
    for (int i = 0; i <= deg; ++i)
      for (int j = 0; i + j <= deg; ++j)
        for (int k = 0; i + j + k <= deg; ++k) {
          double s = 0.0;
          for (int q = 0; q < t.size(); ++q)
            s += t.w[q] * std::pow(t.p[q][0], i) * std::pow(t.p[q][1], j) * std::pow(t.p[q][2], k);
          CHECK(s == doctest::Approx(tet_monomial(i, j, k)).epsilon(1e-13));
        }
  }
}

TEST_CASE("singular pair rules integrate constants exactly") {
  for (PairKind k : {PairKind::Identical, PairKind::SharedEdge, PairKind::SharedVertex})
    for (int order : {2, 5, 8}) {
      double s = 0.0;
      for (double w : singular_pair_rule(k, order).w) s += w;
      CHECK(s == doctest::Approx(0.25).epsilon(1e-13));
    }
}

TEST_CASE("self-convergence of the identical-pair Coulomb integral") {
  // Reference triangle against itself, where x and y coincide as maps.
  auto coulomb = [](int order) {
    const PairRule& r = singular_pair_rule(PairKind::Identical, order);
    double s = 0.0;
    for (int q = 0; q < r.size(); ++q) s += r.w[q] / (r.x[q] - r.y[q]).norm();
    return s;
  };
  std::vector<double> v;
  for (int n = 2; n <= 12; n += 2) v.push_back(coulomb(n));
  const double ref = v.back();
  for (std::size_t i = 0; i + 2 < v.size(); ++i)
    CHECK(std::abs(v[i + 1] - ref) <= std::abs(v[i] - ref));
  CHECK(std::abs(coulomb(8) - coulomb(10)) < 1e-6 * std::abs(ref));
}

TEST_CASE("separated pair against the centroid approximation") {
  // Two unit right triangles five diameters apart.
  SurfaceMesh s;
  s.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(8, 0, 0), Vec3(9, 0, 0), Vec3(8, 1, 0)};
  s.tris = {{0, 1, 2}, {3, 4, 5}};
  s.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
  s.areas = {0.5, 0.5};
  REQUIRE(classify_pair(s, 0, 1) == PairKind::Regular);
  std::vector<PairPoint> pts;
  pair_points(s, 0, 1, QuadOptions{}, pts);
  double one = 0.0, coul = 0.0;
  for (const PairPoint& p : pts) {
    one += p.w;
    coul += p.w / (p.x - p.y).norm();
  }
  CHECK(one == doctest::Approx(0.25).epsilon(1e-13));
  const double approx = 0.25 / (s.tri_centroid(0) - s.tri_centroid(1)).norm();
  CHECK(std::abs(coul - approx) < 0.05 * approx);
}

TEST_CASE("pair points carry area Jacobians for every pair kind") {
  const SurfaceMesh& s = test::outer(1);
  std::vector<PairPoint> pts;
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> pick(0, s.num_tris() - 1);
  for (int it = 0; it < 40; ++it) {
    const int a = pick(rng), b = it < 4 ? a : pick(rng);
    pair_points(s, a, b, QuadOptions{}, pts);
    double w = 0.0;
    for (const PairPoint& p : pts) w += p.w;
    CHECK(w == doctest::Approx(s.areas[a] * s.areas[b]).epsilon(1e-12));
  }
}
