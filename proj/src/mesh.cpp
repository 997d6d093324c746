#include "rgrow/mesh.hpp"

#include "rgrow/errors.hpp"
#include "rgrow/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string_view>
#include <utility>

namespace rgrow {

namespace {

constexpr double kNormalTolerance = 1e-6;
constexpr double kNormalRepairLimit = 1e-3;

std::vector<std::string_view> split_tokens(const std::string& text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.data() + start, i - start);
  }
  return tokens;
}

}  // namespace

void TriangleMesh::validate() const {
  const Eigen::Index nv = vertex_count();
  if (normals.cols() != nv) throw InvalidArgument("normal count differs from vertex count");
  for (Eigen::Index t = 0; t < triangle_count(); ++t) {
    const auto tri = triangles.col(t);
    for (int k = 0; k < 3; ++k) {
      if (tri(k) < 0 || tri(k) >= nv) {
        throw InvalidArgument("triangle " + std::to_string(t) + " references vertex " + std::to_string(tri(k)) +
                              " of " + std::to_string(nv));
      }
    }
    if (tri(0) == tri(1) || tri(1) == tri(2) || tri(0) == tri(2)) {
      throw InvalidArgument("degenerate triangle " + std::to_string(t));
    }
  }
  for (Eigen::Index v = 0; v < nv; ++v) {
    if (std::abs(normals.col(v).norm() - 1.0) > kNormalTolerance) {
      throw InvalidArgument("normal of vertex " + std::to_string(v) + " is not unit length");
    }
  }
}

AdjacencyGraph::AdjacencyGraph(std::vector<std::vector<VertexId>> neighbors) : neighbors_(std::move(neighbors)) {}

std::size_t AdjacencyGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& adj : neighbors_) total += adj.size();
  return total / 2;
}

TriangleMesh generate_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 7) {
    throw InvalidArgument("icosphere subdivisions must be in [0, 7], got " + std::to_string(subdivisions));
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("icosphere radius must be positive");

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
  };

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int id = static_cast<int>(verts.size());
      verts.push_back((verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized());
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh mesh;
  const auto nv = static_cast<Eigen::Index>(verts.size());
  mesh.positions.resize(3, nv);
  mesh.normals.resize(3, nv);
  for (Eigen::Index i = 0; i < nv; ++i) {
    mesh.normals.col(i) = verts[static_cast<std::size_t>(i)];
    mesh.positions.col(i) = radius * verts[static_cast<std::size_t>(i)];
  }
  mesh.triangles.resize(3, static_cast<Eigen::Index>(faces.size()));
  for (std::size_t t = 0; t < faces.size(); ++t) {
    mesh.triangles.col(static_cast<Eigen::Index>(t)) << faces[t][0], faces[t][1], faces[t][2];
  }
  return mesh;
}

TriangleMesh generate_grid(int rows, int cols, double spacing) {
  if (rows < 2 || cols < 2) throw InvalidArgument("grid needs at least 2 rows and 2 columns");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidArgument("grid spacing must be positive");
  TriangleMesh mesh;
  const Eigen::Index nv = static_cast<Eigen::Index>(rows) * cols;
  mesh.positions.resize(3, nv);
  mesh.normals.resize(3, nv);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Eigen::Index v = static_cast<Eigen::Index>(r) * cols + c;
      mesh.positions.col(v) << c * spacing, r * spacing, 0.0;
      mesh.normals.col(v) = Eigen::Vector3d::UnitZ();
    }
  }
  mesh.triangles.resize(3, 2 * static_cast<Eigen::Index>(rows - 1) * (cols - 1));
  Eigen::Index t = 0;
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      const int ll = r * cols + c;
      const int lr = ll + 1;
      const int ul = ll + cols;
      const int ur = ul + 1;
      mesh.triangles.col(t++) << ll, lr, ur;
      mesh.triangles.col(t++) << ll, ur, ul;
    }
  }
  return mesh;
}

TriangleMesh concatenate(const std::vector<TriangleMesh>& parts) {
  Eigen::Index nv = 0;
  Eigen::Index nt = 0;
  for (const auto& p : parts) {
    nv += p.vertex_count();
    nt += p.triangle_count();
  }
  TriangleMesh out;
  out.positions.resize(3, nv);
  out.normals.resize(3, nv);
  out.triangles.resize(3, nt);
  Eigen::Index v0 = 0;
  Eigen::Index t0 = 0;
  for (const auto& p : parts) {
    out.positions.middleCols(v0, p.vertex_count()) = p.positions;
    out.normals.middleCols(v0, p.vertex_count()) = p.normals;
    out.triangles.middleCols(t0, p.triangle_count()) = p.triangles.array() + static_cast<int>(v0);
    v0 += p.vertex_count();
    t0 += p.triangle_count();
  }
  return out;
}

TriangleMesh translated(TriangleMesh mesh, const Eigen::Vector3d& offset) {
  mesh.positions.colwise() += offset;
  return mesh;
}

AdjacencyGraph build_adjacency(const TriangleMesh& mesh) {
  std::vector<std::vector<VertexId>> adj(static_cast<std::size_t>(mesh.vertex_count()));
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    const auto tri = mesh.triangles.col(t);
    for (int k = 0; k < 3; ++k) {
      const int a = tri(k);
      const int b = tri((k + 1) % 3);
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return AdjacencyGraph(std::move(adj));
}

std::vector<VertexSet> connected_components(const AdjacencyGraph& graph) {
  const auto n = graph.vertex_count();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  for (std::size_t v = 0; v < n; ++v) {
    for (VertexId w : graph.neighbors(static_cast<VertexId>(v))) {
      const int a = find(static_cast<int>(v));
      const int b = find(w);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  }
  // Roots are the smallest member after union-by-min, so iterating v in
  // order creates components sorted by their smallest vertex.
  std::vector<VertexSet> components;
  std::vector<int> slot(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    const auto root = static_cast<std::size_t>(find(static_cast<int>(v)));
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(components.size());
      components.emplace_back();
    }
    components[static_cast<std::size_t>(slot[root])].push_back(static_cast<VertexId>(v));
  }
  return components;
}

TriangleMesh parse_mesh(const std::string& text, std::vector<std::string>* warnings) {
  const auto tokens = split_tokens(text);
  if (tokens.size() < 2) throw ParseError("mesh: missing 'V F' header");
  long long nv = 0;
  long long nf = 0;
  try {
    nv = parse_integer(tokens[0]);
    nf = parse_integer(tokens[1]);
  } catch (const ParseError&) {
    throw ParseError("mesh: malformed 'V F' header");
  }
  if (nv < 0 || nf < 0) throw ParseError("mesh: negative counts in header");
  const auto expected = 2 + 6 * static_cast<std::size_t>(nv) + 3 * static_cast<std::size_t>(nf);
  if (tokens.size() != expected) {
    throw ParseError("mesh: expected " + std::to_string(expected) + " tokens, found " + std::to_string(tokens.size()));
  }
  TriangleMesh mesh;
  mesh.positions.resize(3, nv);
  mesh.normals.resize(3, nv);
  mesh.triangles.resize(3, nf);
  std::size_t at = 2;
  for (Eigen::Index v = 0; v < nv; ++v) {
    for (int k = 0; k < 3; ++k) mesh.positions(k, v) = parse_double(tokens[at++]);
    for (int k = 0; k < 3; ++k) mesh.normals(k, v) = parse_double(tokens[at++]);
    if (!mesh.positions.col(v).allFinite() || !mesh.normals.col(v).allFinite()) {
      throw ParseError("mesh: non-finite value at vertex " + std::to_string(v));
    }
    const double norm = mesh.normals.col(v).norm();
    const double dev = std::abs(norm - 1.0);
    if (dev > kNormalTolerance) {
      if (dev >= kNormalRepairLimit) {
        throw ParseError("mesh: normal of vertex " + std::to_string(v) + " has norm " + format_double(norm));
      }
      mesh.normals.col(v) /= norm;
      if (warnings) {
        warnings->push_back("normal of vertex " + std::to_string(v) + " renormalized from " + format_double(norm));
      }
    }
  }
  for (Eigen::Index t = 0; t < nf; ++t) {
    for (int k = 0; k < 3; ++k) {
      const long long idx = parse_integer(tokens[at++]);
      if (idx < 0 || idx >= nv) {
        throw ParseError("mesh: triangle " + std::to_string(t) + " index " + std::to_string(idx) + " out of range");
      }
      mesh.triangles(k, t) = static_cast<int>(idx);
    }
  }
  try {
    mesh.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("mesh: ") + e.what());
  }
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_mesh(read_text_file(path), warnings);
}

std::string format_mesh(const TriangleMesh& mesh) {
  std::string out = std::to_string(mesh.vertex_count()) + " " + std::to_string(mesh.triangle_count()) + "\n";
  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
    for (int k = 0; k < 3; ++k) out += format_double(mesh.positions(k, v)) + ' ';
    for (int k = 0; k < 3; ++k) out += format_double(mesh.normals(k, v)) + (k == 2 ? '\n' : ' ');
  }
  for (Eigen::Index t = 0; t < mesh.triangle_count(); ++t) {
    out += std::to_string(mesh.triangles(0, t)) + ' ' + std::to_string(mesh.triangles(1, t)) + ' ' +
           std::to_string(mesh.triangles(2, t)) + '\n';
  }
  return out;
}

void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) { write_text_file(path, format_mesh(mesh)); }

}  // namespace rgrow
