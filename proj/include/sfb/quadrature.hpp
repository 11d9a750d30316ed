#pragma once

#include "sfb/geometry.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sfb {

using Vec2 = Eigen::Vector2d;

// Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::vector<double> x, w;
};
const GaussRule& gauss_legendre01(int n);

// Reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct TriRule {
  std::vector<Vec2> p;
  std::vector<double> w;
  int degree = 0;
  int size() const { return static_cast<int>(w.size()); }
};

// Reference tetrahedron with vertices 0, e1, e2, e3; weights sum to 1/6.
struct TetRule {
  std::vector<Vec3> p;
  std::vector<double> w;
  int degree = 0;
  int size() const { return static_cast<int>(w.size()); }
};

// Collapsed (conical product) Gauss rules: exact to the requested degree,
// all weights positive. Degrees 1..20.
const TriRule& triangle_rule(int degree);
const TetRule& tet_rule(int degree);
// n x n collapsed Gauss points on the triangle (degree 2n - 2).
const TriRule& triangle_rule_points(int n);

enum class PairKind { Regular, Identical, SharedEdge, SharedVertex };

// Quadrature on (reference triangle)^2. For the singular kinds the shared
// vertices are local vertex 0 (vertex) or 0 and 1 (edge) of both triangles,
// with matching order. Weights sum to 1/4.
struct PairRule {
  std::vector<Vec2> x, y;
  std::vector<double> w;
  int size() const { return static_cast<int>(w.size()); }
};

// Sauter-Schwab regularising transforms with `order` Gauss points per
// hypercube direction.
const PairRule& singular_pair_rule(PairKind kind, int order);

}  // namespace sfb
