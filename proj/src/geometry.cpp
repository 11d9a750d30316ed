#include "sfb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace sfb {

namespace {

std::array<int, 3> sorted3(std::array<int, 3> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Vertices of the face opposite local vertex k, in a fixed local order.
constexpr int kFaceVerts[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

}  // namespace

double tet_signed_volume(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  return (p1 - p0).dot((p2 - p0).cross(p3 - p0)) / 6.0;
}

void TetMesh::build_topology() {
  facets.clear();
  tet_facets.assign(tets.size(), {-1, -1, -1, -1});
  volumes.resize(tets.size());
  std::map<std::array<int, 3>, int> index;
  for (int t = 0; t < num_tets(); ++t) {
    const auto& T = tets[t];
    for (int i = 0; i < 4; ++i)
      if (T[i] < 0 || T[i] >= num_vertices()) throw MeshError("tet references a missing vertex");
    double vol = tet_signed_volume(vertices[T[0]], vertices[T[1]], vertices[T[2]], vertices[T[3]]);
    if (!(std::abs(vol) > 0.0)) throw MeshError("degenerate tetrahedron " + std::to_string(t));
    volumes[t] = std::abs(vol);
    for (int k = 0; k < 4; ++k) {
      std::array<int, 3> fv{T[kFaceVerts[k][0]], T[kFaceVerts[k][1]], T[kFaceVerts[k][2]]};
      auto key = sorted3(fv);
      auto it = index.find(key);
      if (it == index.end()) {
        Facet f;
        f.v = fv;
        f.tet[0] = t;
        f.local[0] = k;
        const Vec3& a = vertices[fv[0]];
        Vec3 n = (vertices[fv[1]] - a).cross(vertices[fv[2]] - a);
        f.area = 0.5 * n.norm();
        n.normalize();
        if (n.dot(vertices[T[k]] - a) > 0) n = -n;
        f.normal = n;
        index.emplace(key, num_facets());
        tet_facets[t][k] = num_facets();
        facets.push_back(f);
      } else {
        Facet& f = facets[it->second];
        if (f.tet[1] >= 0) throw MeshError("facet shared by more than two tetrahedra");
        f.tet[1] = t;
        f.local[1] = k;
        tet_facets[t][k] = it->second;
      }
    }
  }
  boundary_facet.assign(boundary.size(), -1);
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    auto it = index.find(sorted3(boundary[i].v));
    if (it == index.end()) throw MeshError("tagged boundary triangle is not a tetrahedron face");
    Facet& f = facets[it->second];
    if (f.tet[1] >= 0) throw MeshError("tagged boundary triangle is an interior facet");
    if (f.tag != 0) throw MeshError("boundary triangle tagged twice");
    f.tag = boundary[i].tag;
    boundary_facet[i] = it->second;
  }
  for (const auto& f : facets)
    if (f.tet[1] < 0 && f.tag == 0)
      throw MeshError("missing physical tag on a boundary facet");
}

double TetMesh::volume() const {
  long double s = 0.0L;
  for (int t = 0; t < num_tets(); ++t) {
    const auto& T = tets[t];
    s += std::abs(static_cast<long double>(
        tet_signed_volume(vertices[T[0]], vertices[T[1]], vertices[T[2]], vertices[T[3]])));
  }
  return static_cast<double>(s);
}

Vec3 TetMesh::centroid(int t) const {
  const auto& T = tets[t];
  return 0.25 * (vertices[T[0]] + vertices[T[1]] + vertices[T[2]] + vertices[T[3]]);
}

Vec3 TetMesh::outward_normal(int t, int k) const {
  const Facet& f = facets[tet_facets[t][k]];
  return f.tet[0] == t ? f.normal : Vec3(-f.normal);
}

double SurfaceMesh::area() const {
  long double s = 0.0L;
  for (double a : areas) s += a;
  return static_cast<double>(s);
}

Vec3 SurfaceMesh::centroid() const {
  Vec3 c = Vec3::Zero();
  for (int t = 0; t < num_tris(); ++t) c += areas[t] * tri_centroid(t);
  return c / area();
}

Vec3 SurfaceMesh::tri_centroid(int t) const {
  const auto& T = tris[t];
  return (vertices[T[0]] + vertices[T[1]] + vertices[T[2]]) / 3.0;
}

double SurfaceMesh::diameter(int t) const {
  const auto& T = tris[t];
  return std::max({(vertices[T[0]] - vertices[T[1]]).norm(), (vertices[T[1]] - vertices[T[2]]).norm(),
                   (vertices[T[2]] - vertices[T[0]]).norm()});
}

double SurfaceMesh::h() const {
  double h = 0.0;
  for (int t = 0; t < num_tris(); ++t) h = std::max(h, diameter(t));
  return h;
}

void validate_mesh(const TetMesh& mesh) {
  bool has[3] = {false, false, false};
  std::map<std::pair<int, int>, int> edge_count[3];
  for (const auto& f : mesh.boundary) {
    if (f.tag != kGammaInner && f.tag != kGammaOuter)
      throw MeshError("unknown physical tag " + std::to_string(f.tag));
    has[f.tag] = true;
    for (int i = 0; i < 3; ++i) {
      int a = f.v[i], b = f.v[(i + 1) % 3];
      ++edge_count[f.tag][{std::min(a, b), std::max(a, b)}];
    }
  }
  if (!has[kGammaInner]) throw MeshError("missing physical tag 1 (GammaInner)");
  if (!has[kGammaOuter]) throw MeshError("missing physical tag 2 (GammaOuter)");
  for (int tag : {1, 2})
    for (const auto& [e, c] : edge_count[tag])
      if (c != 2)
        throw MeshError("boundary with tag " + std::to_string(tag) + " is not closed (edge " +
                        std::to_string(e.first) + "-" + std::to_string(e.second) + ")");
}

TetMesh build_cube_annulus(double a, double b, int level) {
  if (!(a > 0.0) || !(a < b)) throw std::invalid_argument("cube annulus needs 0 < a < b");
  if (level < 0) throw std::invalid_argument("negative refinement level");
  if (36.0 * std::pow(8.0, level) > 1e7) throw std::invalid_argument("refinement level exceeds 1e7 tetrahedra");

  TetMesh m;
  // Vertex id: 4*sx + 2*sy + sz (+8 on the outer cube), s = 1 for the positive side.
  for (double r : {a, b})
    for (int sx = 0; sx < 2; ++sx)
      for (int sy = 0; sy < 2; ++sy)
        for (int sz = 0; sz < 2; ++sz) m.vertices.emplace_back(r * (2 * sx - 1), r * (2 * sy - 1), r * (2 * sz - 1));

  // Each of the six frusta between matching faces is split into Kuhn simplices
  // of its reference cube (xi, eta along the other two axes, zeta radial).
  for (int ax = 0; ax < 3; ++ax) {
    int o0 = ax == 0 ? 1 : 0, o1 = ax == 2 ? 1 : 2;
    for (int side = 0; side < 2; ++side) {
      auto vid = [&](const std::array<int, 3>& c) {
        int s[3];
        s[ax] = side;
        s[o0] = c[0];
        s[o1] = c[1];
        return 8 * c[2] + 4 * s[0] + 2 * s[1] + s[2];
      };
      std::array<int, 3> perm{0, 1, 2};
      do {
        std::array<int, 3> c{0, 0, 0};
        std::array<int, 4> t;
        t[0] = vid(c);
        for (int k = 0; k < 3; ++k) {
          c[perm[k]] = 1;
          t[k + 1] = vid(c);
        }
        m.tets.push_back(t);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }

  // Tag boundary faces by which cube they lie on.
  {
    std::map<std::array<int, 3>, int> count;
    for (const auto& T : m.tets)
      for (int k = 0; k < 4; ++k) {
        std::array<int, 3> fv{T[kFaceVerts[k][0]], T[kFaceVerts[k][1]], T[kFaceVerts[k][2]]};
        ++count[sorted3(fv)];
      }
    for (const auto& T : m.tets)
      for (int k = 0; k < 4; ++k) {
        std::array<int, 3> fv{T[kFaceVerts[k][0]], T[kFaceVerts[k][1]], T[kFaceVerts[k][2]]};
        if (count[sorted3(fv)] != 1) continue;
        int tag = fv[0] < 8 ? kGammaInner : kGammaOuter;
        m.boundary.push_back({fv, tag});
      }
  }
  m.build_topology();
  for (int l = 0; l < level; ++l) m = refine_uniform(m);
  return m;
}

MeshHierarchy hierarchy_from_mesh(const TetMesh& coarse, int max_level) {
  MeshHierarchy h;
  h.levels.push_back(coarse);
  h.parents.emplace_back();
  for (int l = 1; l <= max_level; ++l) {
    VertexParents p;
    h.levels.push_back(refine_uniform(h.levels.back(), &p));
    h.parents.push_back(std::move(p));
  }
  return h;
}

MeshHierarchy build_annulus_hierarchy(double a, double b, int max_level) {
  MeshHierarchy h = hierarchy_from_mesh(build_cube_annulus(a, b, 0), max_level);
  h.a = a;
  h.b = b;
  return h;
}

TetMesh refine_uniform(const TetMesh& mesh, VertexParents* parents) {
  TetMesh out;
  out.vertices = mesh.vertices;
  VertexParents par(mesh.vertices.size());
  for (int i = 0; i < mesh.num_vertices(); ++i) par[i] = {i, i};
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int i, int j) {
    std::pair<int, int> key{std::min(i, j), std::max(i, j)};
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[i] + mesh.vertices[j]));
    par.push_back({key.first, key.second});
    mid.emplace(key, id);
    return id;
  };
  out.tets.reserve(8 * mesh.tets.size());
  for (const auto& T : mesh.tets) {
    int x0 = T[0], x1 = T[1], x2 = T[2], x3 = T[3];
    int m01 = midpoint(x0, x1), m02 = midpoint(x0, x2), m03 = midpoint(x0, x3);
    int m12 = midpoint(x1, x2), m13 = midpoint(x1, x3), m23 = midpoint(x2, x3);
    // Bey's ordering keeps the children in at most three similarity classes.
    out.tets.push_back({x0, m01, m02, m03});
    out.tets.push_back({m01, x1, m12, m13});
    out.tets.push_back({m02, m12, x2, m23});
    out.tets.push_back({m03, m13, m23, x3});
    out.tets.push_back({m01, m02, m03, m13});
    out.tets.push_back({m01, m02, m12, m13});
    out.tets.push_back({m02, m03, m13, m23});
    out.tets.push_back({m02, m12, m13, m23});
  }
  out.boundary.reserve(4 * mesh.boundary.size());
  for (const auto& f : mesh.boundary) {
    int a = f.v[0], b = f.v[1], c = f.v[2];
    int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    out.boundary.push_back({{a, ab, ca}, f.tag});
    out.boundary.push_back({{ab, b, bc}, f.tag});
    out.boundary.push_back({{ca, bc, c}, f.tag});
    out.boundary.push_back({{ab, bc, ca}, f.tag});
  }
  out.build_topology();
  if (parents) *parents = std::move(par);
  return out;
}

SurfaceMesh extract_surface(const TetMesh& mesh, int tag) {
  SurfaceMesh s;
  s.tag = tag;
  std::vector<int> vmap(mesh.vertices.size(), -1);
  std::vector<int> faces;
  for (std::size_t i = 0; i < mesh.boundary.size(); ++i)
    if (mesh.boundary[i].tag == tag) faces.push_back(static_cast<int>(i));
  if (faces.empty()) throw MeshError("no boundary triangles with tag " + std::to_string(tag));
  for (int i : faces)
    for (int v : mesh.boundary[i].v) vmap[v] = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (vmap[v] == 0) {
      vmap[v] = s.num_vertices();
      s.vertices.push_back(mesh.vertices[v]);
      s.volume_vertex.push_back(v);
    }
  for (int i : faces) {
    int fi = mesh.boundary_facet.at(i);
    const Facet& f = mesh.facets[fi];
    Vec3 nu = tag == kGammaInner ? Vec3(-f.normal) : f.normal;
    std::array<int, 3> t{vmap[f.v[0]], vmap[f.v[1]], vmap[f.v[2]]};
    Vec3 n = (s.vertices[t[1]] - s.vertices[t[0]]).cross(s.vertices[t[2]] - s.vertices[t[0]]);
    if (n.dot(nu) < 0) std::swap(t[1], t[2]);
    s.tris.push_back(t);
    s.facet.push_back(fi);
    s.tet.push_back(f.tet[0]);
    s.normals.push_back(nu);
    s.areas.push_back(f.area);
  }
  return s;
}

double mesh_diameter(const TetMesh& mesh) {
  double h = 0.0;
  for (const auto& T : mesh.tets)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) h = std::max(h, (mesh.vertices[T[i]] - mesh.vertices[T[j]]).norm());
  return h;
}

TetMesh parse_msh(const std::string& text, MshReport* report) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw MeshError("msh line " + std::to_string(lineno) + ": " + msg);
  };
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };

  TetMesh m;
  std::map<long, int> node_index;
  bool have_format = false, have_nodes = false, have_elements = false;
  while (next()) {
    if (line == "$MeshFormat") {
      if (!next()) fail("unexpected end of file in $MeshFormat");
      std::istringstream ls(line);
      double version;
      int ftype, dsize;
      if (!(ls >> version >> ftype >> dsize)) fail("malformed $MeshFormat header");
      if (version < 2.0 || version >= 3.0) fail("unsupported msh version (need 2.x)");
      if (ftype != 0) fail("binary msh files are not supported");
      if (!next() || line != "$EndMeshFormat") fail("expected $EndMeshFormat");
      have_format = true;
    } else if (line == "$Nodes") {
      if (!next()) fail("unexpected end of file in $Nodes");
      long n;
      if (!(std::istringstream(line) >> n) || n < 0) fail("malformed node count");
      for (long i = 0; i < n; ++i) {
        if (!next()) fail("unexpected end of file in $Nodes");
        std::istringstream ls(line);
        long id;
        double x, y, z;
        if (!(ls >> id >> x >> y >> z)) fail("malformed node record");
        if (!node_index.emplace(id, m.num_vertices()).second) fail("duplicate node id " + std::to_string(id));
        m.vertices.emplace_back(x, y, z);
      }
      if (!next() || line != "$EndNodes") fail("expected $EndNodes");
      have_nodes = true;
    } else if (line == "$Elements") {
      if (!have_nodes) fail("$Elements before $Nodes");
      if (!next()) fail("unexpected end of file in $Elements");
      long n;
      if (!(std::istringstream(line) >> n) || n < 0) fail("malformed element count");
      for (long i = 0; i < n; ++i) {
        if (!next()) fail("unexpected end of file in $Elements");
        std::istringstream ls(line);
        long id;
        int type, ntags;
        if (!(ls >> id >> type >> ntags) || ntags < 0) fail("malformed element record");
        std::vector<long> tags(ntags);
        for (auto& t : tags)
          if (!(ls >> t)) fail("malformed element tags");
        int nn = type == 2 ? 3 : type == 4 ? 4 : type == 15 ? 1 : type == 1 ? 2 : -1;
        if (nn < 0) fail("unsupported element type " + std::to_string(type));
        std::array<int, 4> v{};
        for (int k = 0; k < nn; ++k) {
          long nid;
          if (!(ls >> nid)) fail("malformed element node list");
          auto it = node_index.find(nid);
          if (it == node_index.end()) fail("element references unknown node " + std::to_string(nid));
          v[k] = it->second;
        }
        if (type == 2) {
          if (tags.empty()) fail("triangle without physical tag");
          m.boundary.push_back({{v[0], v[1], v[2]}, static_cast<int>(tags[0])});
        } else if (type == 4) {
          m.tets.push_back(v);
        }
      }
      if (!next() || line != "$EndElements") fail("expected $EndElements");
      have_elements = true;
    } else if (!line.empty() && line[0] == '$') {
      std::string end = "$End" + line.substr(1);
      while (true) {
        if (!next()) fail("unterminated section " + line);
        if (line == end) break;
      }
    } else {
      fail("unexpected content outside a section");
    }
  }
  if (!have_format) throw MeshError("msh: missing $MeshFormat section");
  if (!have_elements) throw MeshError("msh: missing $Elements section");
  if (m.tets.empty()) throw MeshError("msh: no tetrahedra");

  int repaired = 0;
  for (auto& T : m.tets) {
    if (tet_signed_volume(m.vertices[T[0]], m.vertices[T[1]], m.vertices[T[2]], m.vertices[T[3]]) < 0) {
      std::swap(T[2], T[3]);
      ++repaired;
    }
  }
  if (report) report->repaired_tets = repaired;
  validate_mesh(m);
  m.build_topology();
  return m;
}

TetMesh load_msh(const std::string& path, MshReport* report) {
  std::ifstream f(path);
  if (!f) throw MeshError("cannot open mesh file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_msh(ss.str(), report);
}

void write_msh(const TetMesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw MeshError("cannot write mesh file " + path);
  f.precision(17);
  f << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << mesh.num_vertices() << "\n";
  for (int i = 0; i < mesh.num_vertices(); ++i)
    f << i + 1 << " " << mesh.vertices[i].x() << " " << mesh.vertices[i].y() << " " << mesh.vertices[i].z() << "\n";
  f << "$EndNodes\n$Elements\n" << mesh.boundary.size() + mesh.tets.size() << "\n";
  long id = 1;
  for (const auto& b : mesh.boundary)
    f << id++ << " 2 2 " << b.tag << " " << b.tag << " " << b.v[0] + 1 << " " << b.v[1] + 1 << " " << b.v[2] + 1 << "\n";
  for (const auto& T : mesh.tets)
    f << id++ << " 4 2 0 0 " << T[0] + 1 << " " << T[1] + 1 << " " << T[2] + 1 << " " << T[3] + 1 << "\n";
  f << "$EndElements\n";
}

}  // namespace sfb
