#include "sfb/bem.hpp"

#include "sfb/kernels.hpp"

#include <algorithm>
#include <numbers>

namespace sfb {

namespace {

constexpr double kInv4Pi = 0.25 / std::numbers::pi;

bool coord_less(const Vec3& p, const Vec3& q) {
  return std::lexicographical_compare(p.data(), p.data() + 3, q.data(), q.data() + 3);
}

// Local vertex order of a triangle by vertex coordinates, so quadrature does
// not depend on how the mesh happens to be labelled.
std::array<int, 3> canonical_order(const SurfaceMesh& s, int t) {
  std::array<int, 3> o{0, 1, 2};
  const auto& T = s.tris[t];
  std::sort(o.begin(), o.end(), [&](int i, int j) { return coord_less(s.vertices[T[i]], s.vertices[T[j]]); });
  return o;
}

struct SubTri {
  std::array<Vec3, 3> bary;  // corners as barycentric coordinates of the parent (canonical order)
  std::array<Vec3, 3> X;     // physical corners
};

double sub_diam(const SubTri& t) {
  return std::max({(t.X[0] - t.X[1]).norm(), (t.X[1] - t.X[2]).norm(), (t.X[2] - t.X[0]).norm()});
}

std::array<SubTri, 4> split(const SubTri& t) {
  auto mid = [&](int i, int j) {
    return std::pair<Vec3, Vec3>{0.5 * (t.bary[i] + t.bary[j]), 0.5 * (t.X[i] + t.X[j])};
  };
  auto [b01, x01] = mid(0, 1);
  auto [b12, x12] = mid(1, 2);
  auto [b20, x20] = mid(2, 0);
  return {SubTri{{t.bary[0], b01, b20}, {t.X[0], x01, x20}}, SubTri{{b01, t.bary[1], b12}, {x01, t.X[1], x12}},
          SubTri{{b20, b12, t.bary[2]}, {x20, x12, t.X[2]}}, SubTri{{b01, b12, b20}, {x01, x12, x20}}};
}

void emit_regular(const SubTri& a, const SubTri& b, const std::array<int, 3>& oa, const std::array<int, 3>& ob,
                  double area_a, double area_b, double frac_a, double frac_b, int n, std::vector<PairPoint>& out) {
  const TriRule& r = triangle_rule_points(n);
  const double scale = 4.0 * area_a * area_b * frac_a * frac_b;
  for (int i = 0; i < r.size(); ++i) {
    const double ua = r.p[i][0], va = r.p[i][1];
    Vec3 mua = (1 - ua - va) * a.bary[0] + ua * a.bary[1] + va * a.bary[2];
    Vec3 xa = (1 - ua - va) * a.X[0] + ua * a.X[1] + va * a.X[2];
    for (int j = 0; j < r.size(); ++j) {
      const double ub = r.p[j][0], vb = r.p[j][1];
      PairPoint pp;
      pp.w = r.w[i] * r.w[j] * scale;
      Vec3 mub = (1 - ub - vb) * b.bary[0] + ub * b.bary[1] + vb * b.bary[2];
      for (int k = 0; k < 3; ++k) {
        pp.la[oa[k]] = mua[k];
        pp.lb[ob[k]] = mub[k];
      }
      pp.x = xa;
      pp.y = (1 - ub - vb) * b.X[0] + ub * b.X[1] + vb * b.X[2];
      out.push_back(pp);
    }
  }
}

void regular_recursive(const SubTri& a, const SubTri& b, const std::array<int, 3>& oa, const std::array<int, 3>& ob,
                       double area_a, double area_b, double frac_a, double frac_b, int depth, const QuadOptions& q,
                       std::vector<PairPoint>& out) {
  const Vec3 ca = (a.X[0] + a.X[1] + a.X[2]) / 3.0, cb = (b.X[0] + b.X[1] + b.X[2]) / 3.0;
  const double ratio = (ca - cb).norm() / std::max(sub_diam(a), sub_diam(b));
  if (ratio >= q.near_ratio || depth >= q.near_depth) {
    emit_regular(a, b, oa, ob, area_a, area_b, frac_a, frac_b, q.regular_points, out);
    return;
  }
  auto sa = split(a);
  auto sb = split(b);
  for (const auto& x : sa)
    for (const auto& y : sb)
      regular_recursive(x, y, oa, ob, area_a, area_b, 0.25 * frac_a, 0.25 * frac_b, depth + 1, q, out);
}

SubTri root(const SurfaceMesh& s, int t, const std::array<int, 3>& o) {
  SubTri r;
  for (int k = 0; k < 3; ++k) {
    r.bary[k] = Vec3::Unit(k);
    r.X[k] = s.vertices[s.tris[t][o[k]]];
  }
  return r;
}

// Surface gradients of the three hat functions of triangle t.
std::array<Vec3, 3> hat_gradients(const SurfaceMesh& s, int t) {
  const auto& T = s.tris[t];
  const Vec3 e1 = s.vertices[T[1]] - s.vertices[T[0]], e2 = s.vertices[T[2]] - s.vertices[T[0]];
  Eigen::Matrix<double, 3, 2> G;
  G.col(0) = e1;
  G.col(1) = e2;
  Eigen::Matrix<double, 2, 3> P = (G.transpose() * G).inverse() * G.transpose();
  Vec3 gu = P.row(0).transpose(), gv = P.row(1).transpose();
  return {Vec3(-gu - gv), gu, gv};
}

// Second stage of W: combine the pair integrals of 1/r and r r^T / r^3 with
// the surface curls of the hat functions. Rows are owned by vertices, so the
// result does not depend on the thread count.
Eigen::MatrixXd assemble_W_from_pairs(const SurfaceMesh& s, const std::vector<double>& I1,
                                      const std::vector<Mat3>& I2, const QuadOptions& q) {
  const int nt = s.num_tris(), nv = s.num_vertices();
  std::vector<std::array<Vec3, 3>> curl(nt);
  // m[t][i][c] = n_c g_i - (g_i)_c n : the Gunter derivative of hat_i e_c.
  std::vector<std::array<std::array<Vec3, 3>, 3>> m(nt);
  for (int t = 0; t < nt; ++t) {
    const auto grad = hat_gradients(s, t);
    const Vec3& n = s.normals[t];
    for (int i = 0; i < 3; ++i) {
      curl[t][i] = n.cross(grad[i]);
      for (int c = 0; c < 3; ++c) m[t][i][c] = n[c] * grad[i] - grad[i][c] * n;
    }
  }
  std::vector<std::vector<std::pair<int, int>>> incident(nv);
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i) incident[s.tris[t][i]].push_back({t, i});

  const double c1 = 0.5 * kInv4Pi;  // 1/(8 pi)
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3 * nv, 3 * nv);
#pragma omp parallel for schedule(dynamic, 4) if (q.parallel)
  for (int v = 0; v < nv; ++v) {
    for (auto [a, i] : incident[v])
      for (int b = 0; b < nt; ++b) {
        const double i1 = I1[static_cast<std::size_t>(a) * nt + b];
        const Mat3& i2 = I2[static_cast<std::size_t>(a) * nt + b];
        for (int j = 0; j < 3; ++j) {
          const int w = s.tris[b][j];
          const double cc = curl[a][i].dot(curl[b][j]);
          for (int cv = 0; cv < 3; ++cv)
            for (int cu = 0; cu < 3; ++cu)
              W(3 * v + cv, 3 * w + cu) += c1 * i1 * ((cv == cu ? cc : 0.0) + m[a][i][cu].dot(m[b][j][cv])) -
                                           kInv4Pi * m[a][i][cv].dot(i2 * m[b][j][cu]);
        }
      }
  }
  return W;
}

}  // namespace

PairKind classify_pair(const SurfaceMesh& s, int a, int b) {
  if (a == b) return PairKind::Identical;
  int shared = 0;
  for (int i : s.tris[a])
    for (int j : s.tris[b]) shared += i == j;
  return shared == 0 ? PairKind::Regular : shared == 1 ? PairKind::SharedVertex : PairKind::SharedEdge;
}

void pair_points(const SurfaceMesh& s, int a, int b, const QuadOptions& q, std::vector<PairPoint>& out) {
  out.clear();
  const auto& A = s.tris[a];
  const auto& B = s.tris[b];
  const PairKind kind = classify_pair(s, a, b);
  if (kind == PairKind::Regular) {
    auto oa = canonical_order(s, a), ob = canonical_order(s, b);
    regular_recursive(root(s, a, oa), root(s, b, ob), oa, ob, s.areas[a], s.areas[b], 1.0, 1.0, 0, q, out);
    return;
  }
  std::array<int, 3> oa, ob;
  if (kind == PairKind::Identical) {
    oa = canonical_order(s, a);
    ob = oa;
  } else {
    std::vector<std::pair<int, int>> sh;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (A[i] == B[j]) sh.push_back({i, j});
    std::sort(sh.begin(), sh.end(), [&](auto p, auto r) { return coord_less(s.vertices[A[p.first]], s.vertices[A[r.first]]); });
    auto rest = [&](const std::array<int, 3>& T, bool first) {
      std::vector<int> r;
      for (int i = 0; i < 3; ++i) {
        bool used = false;
        for (auto& pr : sh) used |= (first ? pr.first : pr.second) == i;
        if (!used) r.push_back(i);
      }
      std::sort(r.begin(), r.end(), [&](int i, int j) { return coord_less(s.vertices[T[i]], s.vertices[T[j]]); });
      return r;
    };
    auto ra = rest(A, true), rb = rest(B, false);
    int k = 0;
    for (auto& pr : sh) {
      oa[k] = pr.first;
      ob[k] = pr.second;
      ++k;
    }
    for (std::size_t i = 0; i < ra.size(); ++i) {
      oa[k + i] = ra[i];
      ob[k + i] = rb[i];
    }
  }
  const PairRule& r = singular_pair_rule(kind, q.singular_order);
  const double scale = 4.0 * s.areas[a] * s.areas[b];
  std::array<Vec3, 3> XA, XB;
  for (int k = 0; k < 3; ++k) {
    XA[k] = s.vertices[A[oa[k]]];
    XB[k] = s.vertices[B[ob[k]]];
  }
  out.reserve(r.size());
  for (int i = 0; i < r.size(); ++i) {
    PairPoint pp;
    pp.w = r.w[i] * scale;
    const double ua = r.x[i][0], va = r.x[i][1], ub = r.y[i][0], vb = r.y[i][1];
    const double ma[3] = {1 - ua - va, ua, va}, mb[3] = {1 - ub - vb, ub, vb};
    pp.x = ma[0] * XA[0] + ma[1] * XA[1] + ma[2] * XA[2];
    pp.y = mb[0] * XB[0] + mb[1] * XB[1] + mb[2] * XB[2];
    for (int k = 0; k < 3; ++k) {
      pp.la[oa[k]] = ma[k];
      pp.lb[ob[k]] = mb[k];
    }
    out.push_back(pp);
  }
}

SparseMatrix mass_density_p1(const SurfaceMesh& s) {
  Triplets tr;
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double m = s.areas[t] * (i == j ? 2.0 : 1.0) / 12.0;
        for (int c = 0; c < 3; ++c) tr.emplace_back(9 * t + 3 * i + c, 3 * s.tris[t][j] + c, m);
      }
  SparseMatrix M(density_dofs(s), p1_dofs(s));
  M.setFromTriplets(tr.begin(), tr.end());
  return M;
}

SparseMatrix mass_p1(const SurfaceMesh& s) {
  Triplets tr;
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double m = s.areas[t] * (i == j ? 2.0 : 1.0) / 12.0;
        for (int c = 0; c < 3; ++c) tr.emplace_back(3 * s.tris[t][i] + c, 3 * s.tris[t][j] + c, m);
      }
  SparseMatrix M(p1_dofs(s), p1_dofs(s));
  M.setFromTriplets(tr.begin(), tr.end());
  return M;
}

SparseMatrix mass_density(const SurfaceMesh& s) {
  Triplets tr;
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double m = s.areas[t] * (i == j ? 2.0 : 1.0) / 12.0;
        for (int c = 0; c < 3; ++c) tr.emplace_back(9 * t + 3 * i + c, 9 * t + 3 * j + c, m);
      }
  SparseMatrix M(density_dofs(s), density_dofs(s));
  M.setFromTriplets(tr.begin(), tr.end());
  return M;
}

BoundaryOperators assemble_operators(const SurfaceMesh& s, const QuadOptions& q, unsigned which) {
  const int nt = s.num_tris(), nv = s.num_vertices();
  const bool want_v = which & kOpV, want_k = which & kOpK, want_w = which & kOpW;
  BoundaryOperators ops;
  if (want_v) ops.V = Eigen::MatrixXd::Zero(9 * nt, 9 * nt);
  // K against triangle-local linear functions first; gathered to P1 below.
  Eigen::MatrixXd Kloc;
  if (want_k) Kloc = Eigen::MatrixXd::Zero(9 * nt, 9 * nt);
  std::vector<double> I1;
  std::vector<Mat3> I2;
  if (want_w) {
    I1.assign(static_cast<std::size_t>(nt) * nt, 0.0);
    I2.assign(static_cast<std::size_t>(nt) * nt, Mat3::Zero());
  }

  // Upper-triangle pairs a <= b; the lower triangle follows by symmetry of
  // the kernels, which keeps V and W exactly symmetric.
#pragma omp parallel if (q.parallel)
  {
    std::vector<PairPoint> pts;
#pragma omp for schedule(dynamic, 1)
    for (int a = 0; a < nt; ++a)
      for (int b = a; b < nt; ++b) {
        pair_points(s, a, b, q, pts);
        const Vec3& na = s.normals[a];
        const Vec3& nb = s.normals[b];
        double s1[9] = {};
        Mat3 s2[9], kab[9], kba[9];
        for (int k = 0; k < 9; ++k) s2[k] = kab[k] = kba[k] = Mat3::Zero();
        double i1 = 0.0;
        Mat3 i2 = Mat3::Zero();
        for (const auto& p : pts) {
          const Vec3 r = p.x - p.y;
          const double d2 = r.squaredNorm(), d = std::sqrt(d2);
          const double id = 1.0 / d, id3 = id / d2, id5 = id3 / d2;
          const Mat3 rr = r * r.transpose();
          if (want_w) {
            i1 += p.w * id;
            i2 += (p.w * id3) * rr;
          }
          const double rnb = r.dot(nb), rna = r.dot(na);
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const double c = p.w * p.la[i] * p.lb[j];
              const int k = 3 * i + j;
              if (want_v) {
                s1[k] += c * id;
                s2[k] += (c * id3) * rr;
              }
              if (want_k && a != b) {
                kab[k] += (c * rnb * id5) * rr;
                kba[k] -= (c * rna * id5) * rr;
              }
            }
        }
        if (want_w) {
          I1[static_cast<std::size_t>(a) * nt + b] = I1[static_cast<std::size_t>(b) * nt + a] = i1;
          I2[static_cast<std::size_t>(a) * nt + b] = I2[static_cast<std::size_t>(b) * nt + a] = i2;
        }
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const int k = 3 * i + j;
            if (want_v) {
              const Mat3 E = kInv4Pi * (s1[k] * Mat3::Identity() + s2[k]);
              ops.V.block<3, 3>(9 * a + 3 * i, 9 * b + 3 * j) = E;
              ops.V.block<3, 3>(9 * b + 3 * j, 9 * a + 3 * i) = E.transpose();
            }
            if (want_k && a != b) {
              Kloc.block<3, 3>(9 * a + 3 * i, 9 * b + 3 * j) = (3.0 * kInv4Pi) * kab[k];
              Kloc.block<3, 3>(9 * b + 3 * j, 9 * a + 3 * i) = (3.0 * kInv4Pi) * kba[k];
            }
          }
      }
  }

  if (want_k) {
    Triplets tr;
    for (int t = 0; t < nt; ++t)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c) tr.emplace_back(9 * t + 3 * j + c, 3 * s.tris[t][j] + c, 1.0);
    SparseMatrix gather(9 * nt, 3 * nv);
    gather.setFromTriplets(tr.begin(), tr.end());
    ops.K = Kloc * gather;
  }
  if (want_w) ops.W = assemble_W_from_pairs(s, I1, I2, q);
  return ops;
}

Eigen::MatrixXd assemble_V(const SurfaceMesh& s, const QuadOptions& q) { return assemble_operators(s, q, kOpV).V; }
Eigen::MatrixXd assemble_K(const SurfaceMesh& s, const QuadOptions& q) { return assemble_operators(s, q, kOpK).K; }
Eigen::MatrixXd assemble_W(const SurfaceMesh& s, const QuadOptions& q) { return assemble_operators(s, q, kOpW).W; }

TriangleField field_from_p1(const SurfaceMesh& s, const Eigen::VectorXd& c) {
  TriangleField f;
  f.v.resize(s.num_tris());
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i) f.v[t][i] = c.segment<3>(3 * s.tris[t][i]);
  return f;
}

TriangleField field_from_density(const SurfaceMesh& s, const Eigen::VectorXd& c) {
  TriangleField f;
  f.v.resize(s.num_tris());
  for (int t = 0; t < s.num_tris(); ++t)
    for (int i = 0; i < 3; ++i) f.v[t][i] = c.segment<3>(9 * t + 3 * i);
  return f;
}

PotentialValue single_layer_potential(const SurfaceMesh& s, const TriangleField& rho, const Vec3& x,
                                      bool with_gradient) {
  PotentialValue out;
  for (int t = 0; t < s.num_tris(); ++t) {
    const auto& vals = rho.v[t];
    integrate_point_triangle(s, t, x, [&](double w, const std::array<double, 3>& l, const Vec3& y) {
      const Vec3 dens = l[0] * vals[0] + l[1] * vals[1] + l[2] * vals[2];
      const Vec3 r = x - y;
      out.u += w * (stokeslet(r) * dens);
      out.p += w * pressure_kernel(r).dot(dens);
      if (with_gradient) {
        auto g = stokeslet_gradient(r);
        for (int k = 0; k < 3; ++k) out.grad.col(k) += w * (g[k] * dens);
      }
    });
  }
  return out;
}

PotentialValue double_layer_potential(const SurfaceMesh& s, const TriangleField& psi, const Vec3& x,
                                      bool with_gradient) {
  PotentialValue out;
  for (int t = 0; t < s.num_tris(); ++t) {
    const auto& vals = psi.v[t];
    const Vec3& n = s.normals[t];
    integrate_point_triangle(s, t, x, [&](double w, const std::array<double, 3>& l, const Vec3& y) {
      const Vec3 dens = l[0] * vals[0] + l[1] * vals[1] + l[2] * vals[2];
      const Vec3 r = x - y;
      out.u += w * (double_layer_kernel(r, n) * dens);
      out.p += w * double_layer_pressure(r, n, dens);
      if (with_gradient) out.grad += w * double_layer_gradient(r, n, dens);
    });
  }
  return out;
}

}  // namespace sfb
