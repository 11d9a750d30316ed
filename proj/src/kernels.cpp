#include "sfb/kernels.hpp"

#include <numbers>

namespace sfb {

namespace {
constexpr double kInv4Pi = 0.25 / std::numbers::pi;
}

Mat3 stokeslet(const Vec3& r) {
  double d2 = r.squaredNorm();
  double d = std::sqrt(d2);
  return kInv4Pi * (Mat3::Identity() / d + r * r.transpose() / (d2 * d));
}

Vec3 pressure_kernel(const Vec3& r) {
  double d = r.norm();
  return kInv4Pi * r / (d * d * d);
}

Mat3 grad_y_pressure_kernel(const Vec3& r) {
  double d2 = r.squaredNorm();
  double d = std::sqrt(d2);
  double d3 = d2 * d;
  return kInv4Pi * (-Mat3::Identity() / d3 + 3.0 * r * r.transpose() / (d3 * d2));
}

std::array<Mat3, 3> stokeslet_gradient(const Vec3& r) {
  double d2 = r.squaredNorm();
  double d = std::sqrt(d2);
  double d3 = d2 * d, d5 = d3 * d2;
  std::array<Mat3, 3> g;
  for (int k = 0; k < 3; ++k) {
    Mat3& m = g[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = -(i == j ? r[k] : 0.0) / d3;
        v += ((i == k ? r[j] : 0.0) + (j == k ? r[i] : 0.0)) / d3;
        v -= 3.0 * r[i] * r[j] * r[k] / d5;
        m(i, j) = kInv4Pi * v;
      }
  }
  return g;
}

Mat3 double_layer_kernel(const Vec3& r, const Vec3& ny) {
  double d2 = r.squaredNorm();
  double d5 = d2 * d2 * std::sqrt(d2);
  return (3.0 * kInv4Pi * r.dot(ny) / d5) * (r * r.transpose());
}

Mat3 stokeslet_traction(const Vec3& r, const Vec3& nx) {
  double d2 = r.squaredNorm();
  double d5 = d2 * d2 * std::sqrt(d2);
  return (-3.0 * kInv4Pi * r.dot(nx) / d5) * (r * r.transpose());
}

Mat3 double_layer_gradient(const Vec3& r, const Vec3& ny, const Vec3& psi) {
  double d2 = r.squaredNorm();
  double d5 = d2 * d2 * std::sqrt(d2);
  double d7 = d5 * d2;
  double rn = r.dot(ny), rp = r.dot(psi);
  Mat3 G;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      double v = (i == k ? rn * rp : 0.0) / d5 + r[i] * (ny[k] * rp + rn * psi[k]) / d5 -
                 5.0 * r[i] * rn * rp * r[k] / d7;
      G(i, k) = 3.0 * kInv4Pi * v;
    }
  return G;
}

double double_layer_pressure(const Vec3& r, const Vec3& ny, const Vec3& psi) {
  double d2 = r.squaredNorm();
  double d = std::sqrt(d2);
  double d3 = d2 * d, d5 = d3 * d2;
  return kInv4Pi * (-ny.dot(psi) / d3 + 3.0 * r.dot(ny) * r.dot(psi) / d5);
}

}  // namespace sfb
