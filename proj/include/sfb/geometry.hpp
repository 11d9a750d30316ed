#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfb {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Physical tags of the two boundary components.
enum BoundaryTag : int { kGammaInner = 1, kGammaOuter = 2 };

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TaggedFace {
  std::array<int, 3> v;
  int tag = 0;
};

struct Facet {
  std::array<int, 3> v;
  std::array<int, 2> tet{-1, -1};
  std::array<int, 2> local{-1, -1};  // local face index = opposite vertex
  int tag = 0;                        // 0 for interior facets
  Vec3 normal;                        // unit, outward for tet[0]
  double area = 0.0;
};

struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<TaggedFace> boundary;

  // Filled by build_topology().
  std::vector<Facet> facets;
  std::vector<std::array<int, 4>> tet_facets;  // facet of the face opposite local vertex k
  std::vector<double> volumes;
  std::vector<int> boundary_facet;  // boundary face -> facet index

  void build_topology();
  double volume() const;
  int num_tets() const { return static_cast<int>(tets.size()); }
  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_facets() const { return static_cast<int>(facets.size()); }
  Vec3 centroid(int t) const;
  // Outward unit normal of local face k of tet t.
  Vec3 outward_normal(int t, int k) const;
};

// A boundary component. Triangles are ordered so that the right-hand normal
// equals the paper-convention normal: out of the shell on the outer cube and
// into the shell (away from the origin) on the inner cube.
struct SurfaceMesh {
  int tag = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> tris;
  std::vector<int> volume_vertex;  // surface vertex -> volume vertex
  std::vector<int> facet;          // triangle -> volume facet
  std::vector<int> tet;            // triangle -> adjacent tet
  std::vector<Vec3> normals;
  std::vector<double> areas;

  int num_tris() const { return static_cast<int>(tris.size()); }
  int num_vertices() const { return static_cast<int>(vertices.size()); }
  double area() const;
  Vec3 centroid() const;  // area-weighted
  Vec3 tri_centroid(int t) const;
  double diameter(int t) const;
  double h() const;  // max triangle diameter
};

// Vertex parents after uniform refinement: {i, i} for a copy, {i, j} for a midpoint.
using VertexParents = std::vector<std::array<int, 2>>;

struct MeshHierarchy {
  std::vector<TetMesh> levels;
  std::vector<VertexParents> parents;  // parents[l] maps level l to l-1; parents[0] empty
  double a = 0.0, b = 0.0;

  int num_levels() const { return static_cast<int>(levels.size()); }
  const TetMesh& level(int l) const { return levels.at(l); }
};

double tet_signed_volume(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3);

TetMesh build_cube_annulus(double a, double b, int level);
MeshHierarchy build_annulus_hierarchy(double a, double b, int max_level);
MeshHierarchy hierarchy_from_mesh(const TetMesh& coarse, int max_level);

TetMesh refine_uniform(const TetMesh& mesh, VertexParents* parents = nullptr);
SurfaceMesh extract_surface(const TetMesh& mesh, int tag);

// Max tetrahedron diameter (longest edge).
double mesh_diameter(const TetMesh& mesh);

struct MshReport {
  int repaired_tets = 0;
};

TetMesh load_msh(const std::string& path, MshReport* report = nullptr);
TetMesh parse_msh(const std::string& text, MshReport* report = nullptr);
void write_msh(const TetMesh& mesh, const std::string& path);

// Mesh checks used by load_msh and the structured generator.
void validate_mesh(const TetMesh& mesh);

}  // namespace sfb
