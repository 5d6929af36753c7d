#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "platems/material.hpp"
#include "platems/mesh.hpp"
#include "platems/morley.hpp"
#include "platems/multiindex.hpp"
#include "platems/quadrature.hpp"

namespace platems {

// Corrector functions on the unit cell, one per sorted multi-index slot:
//   n2: {11, 12, 22}, n3: {111, 112, 122, 222},
//   n4: {1111, 1112, 1122, 1222, 2222}.
// All solve the clamped cell bilinear form with different right-hand
// sides; mixed-index functions are stored once and enter expansions with
// their index multiplicity.
struct CellFunctions {
  std::array<Eigen::VectorXd, 3> n2;
  std::array<Eigen::VectorXd, 4> n3;
  std::array<Eigen::VectorXd, 5> n4;
};

struct HomogenizedTensor {
  BendingTensor D;                // symmetrized, used downstream
  double asymmetry = 0.0;         // max |raw - raw^T| / max |raw|
  std::array<double, 16> raw{};   // raw[((i*2+j)*2+k)*2+l], no major symmetry applied
};

inline double raw_entry(const HomogenizedTensor& H, int i, int j, int k, int l) {
  return H.raw[((i * 2 + j) * 2 + k) * 2 + l];
}

// Right-hand side of the first corrector problem for the pair (a, b):
//   F(v) = -int D_ij(ab) d2v/dyi dyj.
// The symmetrized unit curvature makes (a,b) and (b,a) identical.
inline Eigen::VectorXd n2_rhs(const MorleySpace& sp, const CoefficientField& coeff,
                              int a, int b) {
  const TriMesh& m = sp.mesh();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sp.n_dofs());
  Eigen::Matrix2d E = Eigen::Matrix2d::Zero();
  E(a, b) += 0.5;
  E(b, a) += 0.5;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const auto& dofs = sp.element_dofs(t);
    const auto& H = sp.hessians(t);
    const double area = m.area(t);
    for (int v = 0; v < 6; ++v) f[dofs[v]] -= area * contract(D, E, H[v]);
  }
  return f;
}

inline std::array<Eigen::VectorXd, 3> solve_n2(const MorleySpace& sp,
                                               const CoefficientField& coeff,
                                               const ClampedSolver& solver) {
  std::array<Eigen::VectorXd, 3> n2;
  n2[0] = solver.solve(n2_rhs(sp, coeff, 0, 0));
  n2[1] = solver.solve(n2_rhs(sp, coeff, 0, 1));
  n2[2] = solver.solve(n2_rhs(sp, coeff, 1, 1));
  return n2;
}

// Right-hand side of the second corrector problem for one ordered index
// triple (a1, a2, a3):
//   F(v) = + 2 int D_(a1)jkl d2N2/dykdyl dv/dyj
//          - 2 int D_ij(a1)l dN2/dyl d2v/dyidyj
//          + 2 int (D - Dbar)_i(a1 a2 a3) dv/dyi    with N2 = N2^(a2 a3)
// and Dbar the cell average of D. Subtracting the average changes nothing
// for smooth clamped test functions (a constant coefficient integrates to
// zero against a gradient), but Morley functions jump in value across
// edge midpoints, so without it a spatially constant coefficient would
// excite the nonconformity and a homogeneous cell would get a spurious
// corrector. Every integrand is affine on an element, so centroid values
// integrate exactly.
inline Eigen::VectorXd n3_rhs_ordered_with(const MorleySpace& sp,
                                           const CoefficientField& coeff,
                                           const Eigen::VectorXd& N2, int a1, int a2,
                                           int a3) {
  const TriMesh& m = sp.mesh();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sp.n_dofs());

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double total_area = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const double area = m.area(t);
    total_area += area;
    for (int j = 0; j < 2; ++j) mean[j] += area * D(j, a1, a2, a3);
  }
  mean /= total_area;

  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const auto& dofs = sp.element_dofs(t);
    const auto& Hb = sp.hessians(t);
    const double area = m.area(t);
    const Eigen::Vector2d c = m.centroid(t);

    const Eigen::Matrix2d H2 = local_hessian(sp, N2, t);
    const Eigen::Vector2d g2 = local_gradient(sp, N2, t, c);

    Eigen::Vector2d vec = Eigen::Vector2d::Zero();
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) s += D(a1, j, k, l) * H2(k, l);
      vec[j] = 2.0 * (s + D(j, a1, a2, a3) - mean[j]);
    }
    Eigen::Matrix2d M;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        M(i, j) = D(i, j, a1, 0) * g2[0] + D(i, j, a1, 1) * g2[1];

    const Eigen::Matrix<double, 6, 2> grads = sp.basis(t).gradients(c);
    for (int v = 0; v < 6; ++v) {
      double contrib = vec.dot(grads.row(v));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) contrib -= 2.0 * M(i, j) * Hb[v](i, j);
      f[dofs[v]] += area * contrib;
    }
  }
  return f;
}

inline Eigen::VectorXd n3_rhs_ordered(const MorleySpace& sp, const CoefficientField& coeff,
                                      const std::array<Eigen::VectorXd, 3>& n2,
                                      int a1, int a2, int a3) {
  return n3_rhs_ordered_with(sp, coeff, n2[sorted_slot2(a2, a3)], a1, a2, a3);
}

inline std::array<Eigen::VectorXd, 4> solve_n3(const MorleySpace& sp,
                                               const CoefficientField& coeff,
                                               const std::array<Eigen::VectorXd, 3>& n2,
                                               const ClampedSolver& solver) {
  std::array<Eigen::VectorXd, 4> n3;
  for (int slot = 0; slot < 4; ++slot) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sp.n_dofs());
    int count = 0;
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int a3 = 0; a3 < 2; ++a3) {
          if (a1 + a2 + a3 != slot) continue;
          rhs += n3_rhs_ordered(sp, coeff, n2, a1, a2, a3);
          ++count;
        }
    rhs /= count;
    n3[slot] = solver.solve(rhs);
  }
  return n3;
}

// Cell average D_ijkl + D_ij(ab) d2N2^(kl)/dya dyb. The clamped cell
// constraint breaks exact major symmetry; the symmetrized tensor is the
// one used downstream and the defect size is reported.
inline HomogenizedTensor homogenize(const MorleySpace& sp, const CoefficientField& coeff,
                                    const std::array<Eigen::VectorXd, 3>& n2) {
  const TriMesh& m = sp.mesh();
  double total_area = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) total_area += m.area(t);
  if (std::abs(total_area - 1.0) > 1e-9)
    throw std::invalid_argument("homogenize: cell mesh must cover the unit cell");

  HomogenizedTensor H;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const double area = m.area(t);
    std::array<Eigen::Matrix2d, 3> H2;
    for (int s = 0; s < 3; ++s) H2[s] = local_hessian(sp, n2[s], t);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            double corr = 0.0;
            const Eigen::Matrix2d& HN = H2[sorted_slot2(k, l)];
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) corr += D(i, j, a, b) * HN(a, b);
            H.raw[((i * 2 + j) * 2 + k) * 2 + l] += area * (D(i, j, k, l) + corr);
          }
  }

  double max_abs = 0.0, max_defect = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const double v = raw_entry(H, i, j, k, l);
          const double w = raw_entry(H, k, l, i, j);
          max_abs = std::max(max_abs, std::abs(v));
          max_defect = std::max(max_defect, std::abs(v - w));
        }
  H.asymmetry = max_abs > 0.0 ? max_defect / max_abs : 0.0;

  auto sym = [&H](int i, int j, int k, int l) {
    return 0.5 * (raw_entry(H, i, j, k, l) + raw_entry(H, k, l, i, j));
  };
  H.D.c = {sym(0, 0, 0, 0), sym(0, 0, 1, 1), sym(0, 0, 0, 1),
           sym(1, 1, 0, 1), sym(0, 1, 0, 1), sym(1, 1, 1, 1)};
  require_elliptic(H.D, "homogenized tensor");
  return H;
}

// Right-hand side of the third corrector problem for one ordered index
// quadruple (a1, a2, a3, a4):
//   F(v) = +   int (Dhat - D)_(a1 a2 a3 a4) v
//          + 2 int D_(a1)jkl d2N3/dykdyl dv/dyj
//          - 2 int D_ij(a1)l dN3/dyl d2v/dyidyj
//          -   int D_(a1 a2)kl d2N2/dykdyl v
//          -   int D_ij(a1 a2) N2 d2v/dyidyj
//          + 4 int D_(a1)j(a2)l dN2/dyl dv/dyj
// with N3 = N3^(a2 a3 a4), N2 = N2^(a3 a4). Integrands are quadratic at
// most; the fixed degree-4 rule integrates them exactly.
inline Eigen::VectorXd n4_rhs_ordered_with(const MorleySpace& sp,
                                           const CoefficientField& coeff,
                                           const Eigen::VectorXd& N2,
                                           const Eigen::VectorXd& N3,
                                           const BendingTensor& Dhat, int a1, int a2,
                                           int a3, int a4) {
  const TriMesh& m = sp.mesh();
  const TriQuadrature& rule = tri_quadrature_deg4();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sp.n_dofs());

  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const auto& tri = m.triangles[t];
    const auto& dofs = sp.element_dofs(t);
    const auto& Hb = sp.hessians(t);
    const double area = m.area(t);

    const Eigen::Matrix2d H2 = local_hessian(sp, N2, t);
    const Eigen::Matrix2d H3 = local_hessian(sp, N3, t);

    const double mismatch = Dhat(a1, a2, a3, a4) - D(a1, a2, a3, a4);

    // Constant coefficient of v: (Dhat - D) - D_(a1 a2)kl d2N2/dykdyl.
    double cv = mismatch;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) cv -= D(a1, a2, k, l) * H2(k, l);

    // Constant coefficient of dv/dyj from the N3 Hessian term.
    Eigen::Vector2d c3 = Eigen::Vector2d::Zero();
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) c3[j] += 2.0 * D(a1, j, k, l) * H3(k, l);

    // Constant coefficient of d2v/dyidyj from the N2 value term.
    Eigen::Matrix2d cH;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) cH(i, j) = D(i, j, a1, a2);

    for (int q = 0; q < TriQuadrature::n_points; ++q) {
      const Eigen::Vector2d x =
          quad_point(rule, q, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
      const double w = rule.weight[q] * area;

      const double v2 = local_value(sp, N2, t, x);
      const Eigen::Vector2d g2 = local_gradient(sp, N2, t, x);
      const Eigen::Vector2d g3 = local_gradient(sp, N3, t, x);

      // Position-dependent coefficient of dv/dyj from the N2 gradient.
      Eigen::Vector2d c2;
      for (int j = 0; j < 2; ++j)
        c2[j] = 4.0 * (D(a1, j, a2, 0) * g2[0] + D(a1, j, a2, 1) * g2[1]);

      // Position-dependent coefficient of d2v from the N3 gradient.
      Eigen::Matrix2d M3;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          M3(i, j) = 2.0 * (D(i, j, a1, 0) * g3[0] + D(i, j, a1, 1) * g3[1]);

      const Vector6 phi = sp.basis(t).values(x);
      const Eigen::Matrix<double, 6, 2> grads = sp.basis(t).gradients(x);
      for (int v = 0; v < 6; ++v) {
        double contrib = cv * phi[v];
        contrib += (c3 + c2).dot(grads.row(v));
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            contrib -= (M3(i, j) + cH(i, j) * v2) * Hb[v](i, j);
        f[dofs[v]] += w * contrib;
      }
    }
  }
  return f;
}

inline Eigen::VectorXd n4_rhs_ordered(const MorleySpace& sp, const CoefficientField& coeff,
                                      const std::array<Eigen::VectorXd, 3>& n2,
                                      const std::array<Eigen::VectorXd, 4>& n3,
                                      const BendingTensor& Dhat, int a1, int a2, int a3,
                                      int a4) {
  return n4_rhs_ordered_with(sp, coeff, n2[sorted_slot2(a3, a4)],
                             n3[sorted_slot3(a2, a3, a4)], Dhat, a1, a2, a3, a4);
}

inline std::array<Eigen::VectorXd, 5> solve_n4(const MorleySpace& sp,
                                               const CoefficientField& coeff,
                                               const std::array<Eigen::VectorXd, 3>& n2,
                                               const std::array<Eigen::VectorXd, 4>& n3,
                                               const BendingTensor& Dhat,
                                               const ClampedSolver& solver) {
  std::array<Eigen::VectorXd, 5> n4;
  for (int slot = 0; slot < 5; ++slot) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sp.n_dofs());
    int count = 0;
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int a3 = 0; a3 < 2; ++a3)
          for (int a4 = 0; a4 < 2; ++a4) {
            if (a1 + a2 + a3 + a4 != slot) continue;
            rhs += n4_rhs_ordered(sp, coeff, n2, n3, Dhat, a1, a2, a3, a4);
            ++count;
          }
    rhs /= count;
    n4[slot] = solver.solve(rhs);
  }
  return n4;
}

struct CellStage {
  CellFunctions fn;
  HomogenizedTensor hom;
};

// Orders the three corrector levels: the cell operator is assembled and
// factorized once, every right-hand side reuses the factorization. The
// homogenized tensor is needed before the third corrector level.
inline CellStage solve_cell_stage(const MorleySpace& sp, const CoefficientField& coeff,
                                  double solver_tol = 1e-10) {
  LinearSystem sys = assemble_bilinear(sp, coeff);
  sys.tol = solver_tol;
  apply_clamped_bc(sys);
  const ClampedSolver solver(sys);
  CellStage stage;
  stage.fn.n2 = solve_n2(sp, coeff, solver);
  stage.fn.n3 = solve_n3(sp, coeff, stage.fn.n2, solver);
  stage.hom = homogenize(sp, coeff, stage.fn.n2);
  stage.fn.n4 = solve_n4(sp, coeff, stage.fn.n2, stage.fn.n3, stage.hom.D, solver);
  return stage;
}

}  // namespace platems
