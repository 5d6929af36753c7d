#pragma once

#include <random>

#include "platems/cell.hpp"
#include "platems/material.hpp"
#include "platems/mesh.hpp"
#include "platems/morley.hpp"

namespace testutil {

inline std::mt19937 rng(unsigned seed = 20240817u) { return std::mt19937(seed); }

// 2x2 checkerboard of materials 0/1.
inline platems::MaterialRaster checkerboard() {
  return platems::MaterialRaster{2, {0, 1, 1, 0}};
}

// 4x4 layout with a centered 2x2 inclusion of material 1 (area fraction 1/4).
inline platems::MaterialRaster centered_inclusion() {
  return platems::MaterialRaster{4,
                                 {0, 0, 0, 0,
                                  0, 1, 1, 0,
                                  0, 1, 1, 0,
                                  0, 0, 0, 0}};
}

// Independent right-hand-side assembly for the fourth-order cell
// problem: each of the six terms is integrated on its own with the
// quadrature rule, with no shared coefficient precomputation.
inline Eigen::VectorXd n4_rhs_term_oracle(const platems::MorleySpace& sp,
                                          const platems::CoefficientField& coeff,
                                          const std::array<Eigen::VectorXd, 3>& n2,
                                          const std::array<Eigen::VectorXd, 4>& n3,
                                          const platems::BendingTensor& Dhat, int a1, int a2,
                                          int a3, int a4) {
  using namespace platems;
  const TriMesh& m = sp.mesh();
  const TriQuadrature& rule = tri_quadrature_deg4();
  const Eigen::VectorXd& N2 = n2[sorted_slot2(a3, a4)];
  const Eigen::VectorXd& N3 = n3[sorted_slot3(a2, a3, a4)];
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sp.n_dofs());

  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const auto& tri = m.triangles[t];
    const auto& dofs = sp.element_dofs(t);
    for (int q = 0; q < TriQuadrature::n_points; ++q) {
      const Eigen::Vector2d x =
          quad_point(rule, q, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
      const double w = rule.weight[q] * m.area(t);
      const Eigen::Matrix2d H2 = local_hessian(sp, N2, t);
      const Eigen::Matrix2d H3 = local_hessian(sp, N3, t);
      const Eigen::Vector2d g2 = local_gradient(sp, N2, t, x);
      const Eigen::Vector2d g3 = local_gradient(sp, N3, t, x);
      const double v2 = local_value(sp, N2, t, x);
      for (int b = 0; b < 6; ++b) {
        const double phi = sp.basis(t).values(x)[b];
        const Eigen::Vector2d gphi = sp.basis(t).gradients(x).row(b).transpose();
        const Eigen::Matrix2d Hphi = sp.hessians(t)[b];
        double term1 = (Dhat(a1, a2, a3, a4) - D(a1, a2, a3, a4)) * phi;
        double term2 = 0.0;
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) term2 += 2.0 * D(a1, j, k, l) * H3(k, l) * gphi[j];
        double term3 = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l)
              term3 -= 2.0 * D(i, j, a1, l) * g3[l] * Hphi(i, j);
        double term4 = 0.0;
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) term4 -= D(a1, a2, k, l) * H2(k, l) * phi;
        double term5 = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) term5 -= D(i, j, a1, a2) * v2 * Hphi(i, j);
        double term6 = 0.0;
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l) term6 += 4.0 * D(a1, j, a2, l) * g2[l] * gphi[j];
        f[dofs[b]] += w * (term1 + term2 + term3 + term4 + term5 + term6);
      }
    }
  }
  return f;
}

}  // namespace testutil
