#pragma once

#include <array>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "platems/material.hpp"
#include "platems/mesh.hpp"
#include "platems/morley.hpp"
#include "platems/multiindex.hpp"

namespace platems {

// Nodal P1 field helpers. Derivative fields recovered from the plate
// solution are stored as one value per mesh vertex and interpolated
// linearly inside each triangle.
inline double p1_value(const TriMesh& m, const Eigen::VectorXd& nodal,
                       const PointLocation& loc) {
  const auto& tri = m.triangles[loc.triangle];
  return nodal[tri[0]] * loc.bary[0] + nodal[tri[1]] * loc.bary[1] +
         nodal[tri[2]] * loc.bary[2];
}

// Constant gradient of a P1 field on one triangle, from the barycentric
// gradients grad(lambda_i) = perp(opposite edge) / (2 area).
inline Eigen::Vector2d p1_gradient(const TriMesh& m, const Eigen::VectorXd& nodal, int t) {
  const auto& tri = m.triangles[t];
  const Eigen::Vector2d& p0 = m.vertices[tri[0]];
  const Eigen::Vector2d& p1 = m.vertices[tri[1]];
  const Eigen::Vector2d& p2 = m.vertices[tri[2]];
  const double inv2a = 1.0 / (2.0 * m.area(t));
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  g += nodal[tri[0]] * Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) * inv2a;
  g += nodal[tri[1]] * Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) * inv2a;
  g += nodal[tri[2]] * Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) * inv2a;
  return g;
}

// Area-weighted average of per-element constants onto vertices. Boundary
// vertices average one-sidedly over whatever elements touch them.
inline Eigen::VectorXd vertex_average(const TriMesh& m, const std::vector<double>& elem) {
  Eigen::VectorXd num = Eigen::VectorXd::Zero(m.n_vertices());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const double a = m.area(t);
    for (int v : m.triangles[t]) {
      num[v] += a * elem[t];
      den[v] += a;
    }
  }
  return num.cwiseQuotient(den);
}

// Vertex-averaged derivative fields of a plate solution, one nodal field
// per sorted derivative multi-index: d2 {11, 12, 22}, d3 {111, 112, 122,
// 222}, d4 {1111, 1112, 1122, 1222, 2222}.
struct MacroDerivatives {
  std::array<Eigen::VectorXd, 3> d2;
  std::array<Eigen::VectorXd, 4> d3;
  std::array<Eigen::VectorXd, 5> d4;
};

// Three-stage recovery cascade: element Hessians of the FE solution are
// averaged to vertices, then each next order differentiates the previous
// nodal fields elementwise and averages again. Elementwise values for a
// sorted multi-index are averaged over all ordered derivative routes so
// the result is symmetric by construction. Exact for quadratics.
inline MacroDerivatives recover_derivatives(const MorleySpace& sp,
                                            const Eigen::VectorXd& dofs) {
  const TriMesh& m = sp.mesh();
  const int nt = m.n_triangles();
  MacroDerivatives out;

  std::vector<double> elem(nt);
  for (int c = 0; c < 3; ++c) {
    const auto [i, j] = sorted_tuple<2>(c);
    for (int t = 0; t < nt; ++t) elem[t] = local_hessian(sp, dofs, t)(i, j);
    out.d2[c] = vertex_average(m, elem);
  }

  for (int slot = 0; slot < 4; ++slot) {
    for (int t = 0; t < nt; ++t) {
      double acc = 0.0;
      int count = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            if (i + j + k != slot) continue;
            acc += p1_gradient(m, out.d2[sorted_slot2(j, k)], t)[i];
            ++count;
          }
      elem[t] = acc / count;
    }
    out.d3[slot] = vertex_average(m, elem);
  }

  for (int slot = 0; slot < 5; ++slot) {
    for (int t = 0; t < nt; ++t) {
      double acc = 0.0;
      int count = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
              if (i + j + k + l != slot) continue;
              acc += p1_gradient(m, out.d3[sorted_slot3(j, k, l)], t)[i];
              ++count;
            }
      elem[t] = acc / count;
    }
    out.d4[slot] = vertex_average(m, elem);
  }
  return out;
}

// Clamped plate bending solve: find the deflection with
//   int D d2w d2v = int q v  for all test functions v,
// w = g1 and dw/dn = g2 on the boundary (zero when omitted).
inline Eigen::VectorXd solve_clamped_plate(
    const MorleySpace& sp, const CoefficientField& coeff,
    const std::function<double(const Eigen::Vector2d&, int)>& q,
    const std::function<double(const Eigen::Vector2d&)>& g1 = nullptr,
    const std::function<double(const Eigen::Vector2d&, const Eigen::Vector2d&)>& g2 =
        nullptr,
    double tol = 1e-10) {
  LinearSystem sys = assemble_bilinear(sp, coeff);
  sys.b = assemble_load(sp, q);
  sys.tol = tol;
  apply_clamped_bc(sys, g1, g2);
  return solve(sys);
}

inline Eigen::VectorXd solve_clamped_plate(const MorleySpace& sp,
                                           const CoefficientField& coeff, double q,
                                           double tol = 1e-10) {
  return solve_clamped_plate(
      sp, coeff, [q](const Eigen::Vector2d&, int) { return q; }, nullptr, nullptr, tol);
}

struct MacroSolution {
  Eigen::VectorXd dofs;
  MacroDerivatives deriv;
};

inline MacroSolution solve_macro(const MorleySpace& sp, const BendingTensor& Dhat,
                                 double q, double tol = 1e-10) {
  MacroSolution sol;
  sol.dofs = solve_clamped_plate(sp, constant_coefficient(Dhat), q, tol);
  sol.deriv = recover_derivatives(sp, sol.dofs);
  return sol;
}

}  // namespace platems
