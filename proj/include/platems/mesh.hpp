#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace platems {

inline constexpr double kGeomTol = 1e-12;

// Square periodic material layout on the unit cell: k x k integer ids,
// row-major with row 0 at the bottom (y2 in [0, 1/k)).
struct MaterialRaster {
  int k = 1;
  std::vector<int> cells;  // size k*k, cells[iy*k + ix]

  int at(int ix, int iy) const {
    ix %= k; if (ix < 0) ix += k;
    iy %= k; if (iy < 0) iy += k;
    return cells[static_cast<size_t>(iy) * k + ix];
  }

  // Lookup by unit-cell coordinates, y in [0,1]^2; y = 1 maps to the top row.
  int material_at(double y1, double y2) const {
    auto clampi = [this](double y) {
      int i = static_cast<int>(std::floor(y * k));
      if (i < 0) i = 0;
      if (i >= k) i = k - 1;
      return i;
    };
    return cells[static_cast<size_t>(clampi(y2)) * k + clampi(y1)];
  }

  int max_id() const {
    int m = 0;
    for (int v : cells) m = v > m ? v : m;
    return m;
  }
};

inline MaterialRaster uniform_raster(int id = 0) { return MaterialRaster{1, {id}}; }

struct PointLocation {
  int triangle = -1;
  std::array<double, 3> bary{};  // matches vertex order of the triangle
};

// Conforming triangulation. All meshes produced here are structured splits
// of an axis-aligned rectangle; the structured descriptor enables O(1)
// point location and is dropped when a mesh is rebuilt from raw arrays.
struct TriMesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;     // CCW vertex ids
  std::vector<std::array<int, 2>> edges;         // canonical low->high vertex ids
  std::vector<std::array<int, 3>> triangle_edges;  // local edges (0,1),(1,2),(2,0)
  std::vector<int> element_material;
  std::vector<bool> boundary_vertex;
  std::vector<bool> boundary_edge;
  std::vector<double> areas;
  std::vector<std::vector<int>> vertex_triangles;

  bool structured = false;
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, hx = 0, hy = 0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  double area(int t) const { return areas[t]; }

  Eigen::Vector2d centroid(int t) const {
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
  }

  // Midpoint of global edge e.
  Eigen::Vector2d edge_midpoint(int e) const {
    return 0.5 * (vertices[edges[e][0]] + vertices[edges[e][1]]);
  }

  // Unit normal of edge e under the canonical orientation: the direction
  // low-index -> high-index vertex rotated by +90 degrees.
  Eigen::Vector2d edge_normal(int e) const {
    const Eigen::Vector2d t =
        (vertices[edges[e][1]] - vertices[edges[e][0]]).normalized();
    return Eigen::Vector2d(-t.y(), t.x());
  }
};

namespace detail {

inline void finish_topology(TriMesh& m) {
  const int nv = m.n_vertices();
  const int nt = m.n_triangles();
  m.areas.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = m.triangles[t];
    const Eigen::Vector2d e1 = m.vertices[tri[1]] - m.vertices[tri[0]];
    const Eigen::Vector2d e2 = m.vertices[tri[2]] - m.vertices[tri[0]];
    const double a2 = e1.x() * e2.y() - e1.y() * e2.x();
    if (!(a2 > 0.0))
      throw std::invalid_argument("TriMesh: triangle " + std::to_string(t) +
                                  " is degenerate or not counter-clockwise");
    m.areas[t] = 0.5 * a2;
  }

  std::unordered_map<std::uint64_t, int> edge_ids;
  edge_ids.reserve(static_cast<size_t>(nt) * 2);
  std::vector<int> edge_use;
  m.edges.clear();
  m.triangle_edges.assign(nt, {-1, -1, -1});
  for (int t = 0; t < nt; ++t) {
    for (int le = 0; le < 3; ++le) {
      int a = m.triangles[t][le];
      int b = m.triangles[t][(le + 1) % 3];
      if (a > b) std::swap(a, b);
      const std::uint64_t key =
          static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(nv) + b;
      auto it = edge_ids.find(key);
      int id;
      if (it == edge_ids.end()) {
        id = static_cast<int>(m.edges.size());
        edge_ids.emplace(key, id);
        m.edges.push_back({a, b});
        edge_use.push_back(0);
      } else {
        id = it->second;
      }
      m.triangle_edges[t][le] = id;
      ++edge_use[id];
    }
  }

  m.boundary_edge.assign(m.edges.size(), false);
  m.boundary_vertex.assign(nv, false);
  for (size_t e = 0; e < m.edges.size(); ++e) {
    if (edge_use[e] > 2)
      throw std::invalid_argument("TriMesh: edge shared by more than two triangles");
    if (edge_use[e] == 1) {
      m.boundary_edge[e] = true;
      m.boundary_vertex[m.edges[e][0]] = true;
      m.boundary_vertex[m.edges[e][1]] = true;
    }
  }

  m.vertex_triangles.assign(nv, {});
  for (int t = 0; t < nt; ++t)
    for (int v : m.triangles[t]) m.vertex_triangles[v].push_back(t);

  if (m.element_material.size() != static_cast<size_t>(nt))
    m.element_material.assign(nt, 0);
}

}  // namespace detail

// nx x ny squares over [ax,bx] x [ay,by], each square split along its
// lower-left -> upper-right diagonal. Square s = j*nx + i yields triangles
// 2s = (v00, v10, v11) and 2s+1 = (v00, v11, v01).
inline TriMesh build_structured_mesh(int nx, int ny, double ax = 0.0, double ay = 0.0,
                                     double bx = 1.0, double by = 1.0) {
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("build_structured_mesh: resolution must be >= 1");
  if (!(bx > ax) || !(by > ay))
    throw std::invalid_argument("build_structured_mesh: empty rectangle");
  TriMesh m;
  m.structured = true;
  m.nx = nx;
  m.ny = ny;
  m.x0 = ax;
  m.y0 = ay;
  m.hx = (bx - ax) / nx;
  m.hy = (by - ay) / ny;

  m.vertices.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.emplace_back(ax + i * m.hx, ay + j * m.hy);

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  m.triangles.reserve(static_cast<size_t>(nx) * ny * 2);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }
  detail::finish_topology(m);
  return m;
}

// Rebuild derived topology from raw vertex/triangle arrays. Used when a
// mesh is assembled or permuted by hand; the structured fast path is lost.
inline TriMesh rebuild_topology(std::vector<Eigen::Vector2d> vertices,
                                std::vector<std::array<int, 3>> triangles,
                                std::vector<int> element_material = {}) {
  TriMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  m.element_material = std::move(element_material);
  detail::finish_topology(m);
  return m;
}

namespace detail {

inline PointLocation bary_of(const TriMesh& m, int t, const Eigen::Vector2d& x) {
  const auto& tri = m.triangles[t];
  const Eigen::Vector2d& p0 = m.vertices[tri[0]];
  const Eigen::Vector2d e1 = m.vertices[tri[1]] - p0;
  const Eigen::Vector2d e2 = m.vertices[tri[2]] - p0;
  const Eigen::Vector2d d = x - p0;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  const double l1 = (d.x() * e2.y() - d.y() * e2.x()) / det;
  const double l2 = (e1.x() * d.y() - e1.y() * d.x()) / det;
  return PointLocation{t, {1.0 - l1 - l2, l1, l2}};
}

}  // namespace detail

// First triangle in enumeration order whose closed region contains x,
// scanning all triangles. Reference path; also the fallback for meshes
// without a structured descriptor.
inline PointLocation locate_point_scan(const TriMesh& m, const Eigen::Vector2d& x) {
  for (int t = 0; t < m.n_triangles(); ++t) {
    PointLocation loc = detail::bary_of(m, t, x);
    if (loc.bary[0] >= -kGeomTol && loc.bary[1] >= -kGeomTol && loc.bary[2] >= -kGeomTol)
      return loc;
  }
  throw std::domain_error("locate_point: point outside the mesh domain");
}

// Locate x in the closed mesh domain. Points on shared edges or vertices
// resolve to the lowest-index triangle containing them.
inline PointLocation locate_point(const TriMesh& m, const Eigen::Vector2d& x) {
  if (!m.structured) return locate_point_scan(m, x);
  const double u = (x.x() - m.x0) / m.hx;
  const double v = (x.y() - m.y0) / m.hy;
  if (u < -kGeomTol / m.hx || u > m.nx + kGeomTol / m.hx ||
      v < -kGeomTol / m.hy || v > m.ny + kGeomTol / m.hy)
    throw std::domain_error("locate_point: point outside the mesh domain");

  // Exact grid lines resolve to the lower / left cell so that the chosen
  // triangle index is the lowest among all triangles containing x.
  auto cell = [](double w, int n) {
    double f = std::floor(w);
    int i = static_cast<int>(f);
    if (w == f && i > 0) --i;
    if (i < 0) i = 0;
    if (i > n - 1) i = n - 1;
    return i;
  };
  const int i = cell(u, m.nx);
  const int j = cell(v, m.ny);
  const double xi = u - i;
  const double eta = v - j;
  const int s = j * m.nx + i;
  const int t = (eta <= xi) ? 2 * s : 2 * s + 1;
  return detail::bary_of(m, t, x);
}

// Assign element materials from the raster tiled with period eps, using
// y = centroid / eps. Mesh lines must align with raster interfaces: each
// triangle has to fit inside one raster cell, otherwise the mesh cannot
// represent the coefficient and the call fails. eps = 1 is the unit-cell
// mode where the mesh covers [0,1]^2 directly.
inline void assign_materials(TriMesh& mesh, const MaterialRaster& raster, double eps = 1.0) {
  if (!(eps > 0.0)) throw std::invalid_argument("assign_materials: eps must be positive");
  if (raster.k < 1 || raster.cells.size() != static_cast<size_t>(raster.k) * raster.k)
    throw std::invalid_argument("assign_materials: malformed raster");
  const double w = eps / raster.k;  // raster cell width in mesh coordinates
  const double tol = 1e-12 * (1.0 + std::abs(eps));
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const Eigen::Vector2d c = mesh.centroid(t);
    const int gi = static_cast<int>(std::floor(c.x() / w));
    const int gj = static_cast<int>(std::floor(c.y() / w));
    for (int v : mesh.triangles[t]) {
      const Eigen::Vector2d& p = mesh.vertices[v];
      if (p.x() < gi * w - tol || p.x() > (gi + 1) * w + tol ||
          p.y() < gj * w - tol || p.y() > (gj + 1) * w + tol)
        throw std::invalid_argument(
            "assign_materials: mesh lines do not align with raster interfaces");
    }
    mesh.element_material[t] = raster.at(gi, gj);
  }
}

}  // namespace platems
