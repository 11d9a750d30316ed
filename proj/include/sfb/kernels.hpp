#pragma once

#include "sfb/geometry.hpp"

namespace sfb {

// Free-space Stokes kernels for viscosity 1/2. Arguments are r = x - y.

// E(x, y) = (I/r + r r^T / r^3) / (4 pi).
Mat3 stokeslet(const Vec3& r);
// Q(x, y) = grad_y (1/|x - y|) / (4 pi) = r / (4 pi r^3).
Vec3 pressure_kernel(const Vec3& r);
// grad_y Q(x, y) = (-I/r^3 + 3 r r^T / r^5) / (4 pi).
Mat3 grad_y_pressure_kernel(const Vec3& r);
// d/dx_k E_ij, returned as dE[k](i, j).
std::array<Mat3, 3> stokeslet_gradient(const Vec3& r);

// Double-layer kernel: (D psi)(x) = int K(x, y) psi(y) ds_y with
// K = 3/(4 pi) (r.n_y) r r^T / r^5. The same matrix is the stresslet traction.
Mat3 double_layer_kernel(const Vec3& r, const Vec3& ny);
// Traction at x (normal n_x) of the Stokeslet: sigma_x(E f) n_x = T f.
Mat3 stokeslet_traction(const Vec3& r, const Vec3& nx);

// Velocity gradient kernel of the double layer: d/dx_k of K(x,y) psi, with
// the result G(i, k) for a fixed density value psi.
Mat3 double_layer_gradient(const Vec3& r, const Vec3& ny, const Vec3& psi);
// Pressure kernel of the double layer: (grad_y Q n_y) . psi.
double double_layer_pressure(const Vec3& r, const Vec3& ny, const Vec3& psi);

}  // namespace sfb
