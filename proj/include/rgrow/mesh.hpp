#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace rgrow {

using VertexId = int;
using VertexSet = std::vector<VertexId>;

// Source space: one dipole per vertex, oriented along the vertex normal.
// Columns of `positions` / `normals` are vertices, columns of `triangles`
// are zero-based index triples.
struct TriangleMesh {
  Eigen::Matrix3Xd positions;
  Eigen::Matrix3Xd normals;
  Eigen::Matrix3Xi triangles;

  Eigen::Index vertex_count() const { return positions.cols(); }
  Eigen::Index triangle_count() const { return triangles.cols(); }

  // Throws InvalidArgument when an index is out of range, a triangle is
  // degenerate or a normal is not unit length (1e-6).
  void validate() const;
};

// Per-vertex sorted neighbor lists derived from mesh edges.
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  explicit AdjacencyGraph(std::vector<std::vector<VertexId>> neighbors);

  std::size_t vertex_count() const { return neighbors_.size(); }
  const std::vector<VertexId>& neighbors(VertexId v) const { return neighbors_[static_cast<std::size_t>(v)]; }
  std::size_t edge_count() const;

 private:
  std::vector<std::vector<VertexId>> neighbors_;
};

// Subdivided icosahedron projected onto a sphere centered at the origin.
// Vertex count is 10*4^s + 2. Throws InvalidArgument for subdivisions > 7.
TriangleMesh generate_icosphere(int subdivisions, double radius);

// Planar rows x cols lattice in the z = 0 plane, vertex (r, c) at index
// r*cols + c and position (c*spacing, r*spacing, 0). Each quad is split along
// the diagonal from (r, c) to (r+1, c+1).
TriangleMesh generate_grid(int rows, int cols, double spacing);

// Disjoint union; indices of later meshes are shifted.
TriangleMesh concatenate(const std::vector<TriangleMesh>& parts);

// Rigid translation of every vertex.
TriangleMesh translated(TriangleMesh mesh, const Eigen::Vector3d& offset);

AdjacencyGraph build_adjacency(const TriangleMesh& mesh);

// Components sorted by smallest member; members sorted ascending.
std::vector<VertexSet> connected_components(const AdjacencyGraph& graph);

// Text format: "V F", V lines "x y z nx ny nz", F lines "a b c".
// Normals off by less than 1e-3 are renormalized and reported in `warnings`.
TriangleMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
TriangleMesh parse_mesh(const std::string& text, std::vector<std::string>* warnings = nullptr);
void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);
std::string format_mesh(const TriangleMesh& mesh);

}  // namespace rgrow
