#pragma once

// Template definitions for bem.hpp.

#include <cmath>

namespace sfb {

template <class F>
void integrate_point_triangle(const SurfaceMesh& s, int t, const Vec3& x, F&& f) {
  const auto& T = s.tris[t];
  const Vec3& A = s.vertices[T[0]];
  const Vec3 e1 = s.vertices[T[1]] - A, e2 = s.vertices[T[2]] - A;
  const double area2 = 2.0 * s.areas[t];
  const double diam = s.diameter(t);
  const double dist = (x - s.tri_centroid(t)).norm();
  if (dist > 2.0 * diam) {
    const TriRule& r = triangle_rule_points(dist > 6.0 * diam ? 4 : 7);
    for (int k = 0; k < r.size(); ++k) {
      const double u = r.p[k][0], v = r.p[k][1];
      f(r.w[k] * area2, std::array<double, 3>{1.0 - u - v, u, v}, Vec3(A + u * e1 + v * e2));
    }
    return;
  }

  // Signed split into three triangles around the projection of x, with a sinh
  // substitution in the radial direction.
  const Vec3& n = s.normals[t];
  const double hgt = (x - A).dot(n);
  const Vec3 p = x - hgt * n;
  const double d = std::abs(hgt);
  const double g11 = e1.dot(e1), g12 = e1.dot(e2), g22 = e2.dot(e2);
  const double det = g11 * g22 - g12 * g12;
  auto bary = [&](const Vec3& y) {
    const Vec3 q = y - A;
    const double b1 = e1.dot(q), b2 = e2.dot(q);
    const double u = (g22 * b1 - g12 * b2) / det, v = (g11 * b2 - g12 * b1) / det;
    return std::array<double, 3>{1.0 - u - v, u, v};
  };
  const GaussRule& ga = gauss_legendre01(20);
  const GaussRule& gr = gauss_legendre01(20);
  const bool on_plane = d < 1e-12 * diam;
  for (int k = 0; k < 3; ++k) {
    const Vec3 a = s.vertices[T[k]] - p, b = s.vertices[T[(k + 1) % 3]] - p;
    const double J0 = a.cross(b).dot(n);
    if (std::abs(J0) < 1e-14 * area2) continue;
    for (std::size_t it = 0; it < ga.x.size(); ++it) {
      const Vec3 w = a + ga.x[it] * (b - a);
      const double L = w.norm();
      if (on_plane) {
        for (std::size_t ir = 0; ir < gr.x.size(); ++ir) {
          const double sr = gr.x[ir];
          const Vec3 y = p + sr * w;
          f(J0 * sr * gr.w[ir] * ga.w[it], bary(y), y);
        }
      } else {
        const double tmax = std::asinh(L / d);
        for (std::size_t ir = 0; ir < gr.x.size(); ++ir) {
          const double tau = tmax * gr.x[ir];
          const double sr = (d / L) * std::sinh(tau);
          const double ds = (d / L) * std::cosh(tau) * tmax * gr.w[ir];
          const Vec3 y = p + sr * w;
          f(J0 * sr * ds * ga.w[it], bary(y), y);
        }
      }
    }
  }
}

}  // namespace sfb
