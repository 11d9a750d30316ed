#include "sfb/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace sfb {

namespace {

std::mutex g_cache_mutex;

GaussRule compute_gauss(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.x[i] = 0.5 * (1.0 - z);
    r.x[n - 1 - i] = 0.5 * (1.0 + z);
    r.w[i] = r.w[n - 1 - i] = 0.5 * w;
  }
  return r;
}

TriRule collapsed_triangle(int n) {
  const GaussRule& g = gauss_legendre01(n);
  TriRule r;
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double u = g.x[i], v = g.x[j];
      r.p.emplace_back(u * (1.0 - v), u * v);
      r.w.push_back(g.w[i] * g.w[j] * u);
    }
  return r;
}

TetRule collapsed_tet(int n) {
  const GaussRule& g = gauss_legendre01(n);
  TetRule r;
  r.degree = 2 * n - 3;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double u = g.x[i], v = g.x[j], w = g.x[k];
        r.p.emplace_back(u * (1.0 - v), u * v * (1.0 - w), u * v * w);
        r.w.push_back(g.w[i] * g.w[j] * g.w[k] * u * u * v);
      }
  return r;
}

// Sauter-Schwab transforms on the triangle {0 <= s2 <= s1 <= 1}; points are
// converted to (u, v) = (s1 - s2, s2) on the standard reference triangle.
PairRule compute_singular(PairKind kind, int n) {
  const GaussRule& g = gauss_legendre01(n);
  PairRule r;
  auto add = [&](double x1, double x2, double y1, double y2, double w) {
    r.x.emplace_back(x1 - x2, x2);
    r.y.emplace_back(y1 - y2, y2);
    r.w.push_back(w);
  };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double xi = g.x[a], e1 = g.x[b], e2 = g.x[c], e3 = g.x[d];
          double w = g.w[a] * g.w[b] * g.w[c] * g.w[d];
          switch (kind) {
            case PairKind::Identical: {
              double J = w * xi * xi * xi * e1 * e1 * e2;
              add(xi, xi * (1 - e1 + e1 * e2), xi * (1 - e1 * e2 * e3), xi * (1 - e1), J);
              add(xi * (1 - e1 * e2 * e3), xi * (1 - e1), xi, xi * (1 - e1 + e1 * e2), J);
              add(xi, xi * e1 * (1 - e2 + e2 * e3), xi * (1 - e1 * e2), xi * e1 * (1 - e2), J);
              add(xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * (1 - e2 + e2 * e3), J);
              add(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * (1 - e2), J);
              add(xi, xi * e1 * (1 - e2), xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), J);
              break;
            }
            case PairKind::SharedEdge: {
              double J = w * xi * xi * xi * e1 * e1;
              add(xi, xi * e1 * e3, xi * (1 - e1 * e2), xi * e1 * (1 - e2), J);
              add(xi, xi * e1, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), J * e2);
              add(xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * e2 * e3, J * e2);
              add(xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), xi, xi * e1, J * e2);
              add(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * e2, J * e2);
              break;
            }
            case PairKind::SharedVertex: {
              double J = w * xi * xi * xi * e2;
              add(xi, xi * e1, xi * e2, xi * e2 * e3, J);
              add(xi * e2, xi * e2 * e3, xi, xi * e1, J);
              break;
            }
            case PairKind::Regular:
              throw std::invalid_argument("singular_pair_rule called with PairKind::Regular");
          }
        }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre01(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument("Gauss-Legendre order out of range");
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(compute_gauss(n));
  return *slot;
}

const TriRule& triangle_rule_points(int n) {
  if (n < 1 || n > 32) throw std::invalid_argument("triangle rule size out of range");
  static std::map<int, std::unique_ptr<TriRule>> cache;
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
  }
  auto rule = std::make_unique<TriRule>(collapsed_triangle(n));
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::move(rule);
  return *slot;
}

const TriRule& triangle_rule(int degree) {
  if (degree < 1 || degree > 20) throw std::invalid_argument("triangle rule degree must be in 1..20");
  return triangle_rule_points((degree + 1) / 2 + 1);
}

const TetRule& tet_rule(int degree) {
  if (degree < 1 || degree > 20) throw std::invalid_argument("tetrahedron rule degree must be in 1..20");
  int n = (degree + 4) / 2;
  static std::map<int, std::unique_ptr<TetRule>> cache;
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
  }
  auto rule = std::make_unique<TetRule>(collapsed_tet(n));
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::move(rule);
  return *slot;
}

const PairRule& singular_pair_rule(PairKind kind, int order) {
  if (order < 1 || order > 24) throw std::invalid_argument("singular quadrature order out of range");
  static std::map<std::pair<int, int>, std::unique_ptr<PairRule>> cache;
  std::pair<int, int> key{static_cast<int>(kind), order};
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  auto rule = std::make_unique<PairRule>(compute_singular(kind, order));
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::move(rule);
  return *slot;
}

}  // namespace sfb
