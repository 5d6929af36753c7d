#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "platems/mesh.hpp"

namespace platems {

// Legacy ASCII VTK export of a triangle mesh with optional per-vertex
// scalar fields; element materials always go out as CELL_DATA.
inline void write_vtk(
    const std::string& path, const TriMesh& mesh,
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& point_fields = {},
    const std::string& title = "plate fields") {
  for (const auto& [name, values] : point_fields) {
    if (values.size() != mesh.n_vertices())
      throw std::invalid_argument("write_vtk: field '" + name + "' has wrong size");
    if (name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("write_vtk: field name '" + name + "' contains whitespace");
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vtk: cannot open '" + path + "'");
  out.precision(17);

  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << mesh.n_vertices() << " double\n";
  for (const Eigen::Vector2d& p : mesh.vertices) out << p.x() << ' ' << p.y() << " 0\n";

  const int nt = mesh.n_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";

  out << "CELL_DATA " << nt << "\nSCALARS element_material int 1\nLOOKUP_TABLE default\n";
  for (int m : mesh.element_material) out << m << '\n';

  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.n_vertices() << '\n';
    for (const auto& [name, values] : point_fields) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < values.size(); ++i) out << values[i] << '\n';
    }
  }

  if (!out) throw std::runtime_error("write_vtk: write to '" + path + "' failed");
}

}  // namespace platems
