#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "platems/cell.hpp"
#include "platems/macro.hpp"
#include "platems/material.hpp"
#include "platems/mesh.hpp"
#include "platems/morley.hpp"
#include "platems/multiindex.hpp"
#include "platems/quadrature.hpp"

namespace platems {

// Two-scale deflection field
//   w(x) = w0(x) + sum_{m=2..order} eps^m N_m(x/eps mod 1) : D^m w0(x)
// with the Einstein sums over derivative multi-indices realized through
// sorted slots and binomial multiplicities. order 0 is the plain
// macroscale field; orders 2..4 add the corrector layers.
struct MultiscaleField {
  const MorleySpace* macro = nullptr;
  const Eigen::VectorXd* w0 = nullptr;
  const MacroDerivatives* deriv = nullptr;
  const MorleySpace* cell = nullptr;
  const CellFunctions* fn = nullptr;
  double eps = 0.0;
  int order = 0;

  MultiscaleField(const MorleySpace& macro_space, const Eigen::VectorXd& dofs,
                  const MacroDerivatives& d, int k)
      : macro(&macro_space), w0(&dofs), deriv(&d), order(k) {
    if (k != 0) throw std::invalid_argument("MultiscaleField: correctors required for order > 0");
  }

  MultiscaleField(const MorleySpace& macro_space, const Eigen::VectorXd& dofs,
                  const MacroDerivatives& d, const MorleySpace& cell_space,
                  const CellFunctions& cf, double epsilon, int k)
      : macro(&macro_space), w0(&dofs), deriv(&d), cell(&cell_space), fn(&cf),
        eps(epsilon), order(k) {
    if (k != 0 && k != 2 && k != 3 && k != 4)
      throw std::invalid_argument("MultiscaleField: order must be 0, 2, 3, or 4");
    if (k != 0 && !(epsilon > 0.0))
      throw std::invalid_argument("MultiscaleField: epsilon must be positive");
  }
};

// Maps x into the periodic unit cell.
inline Eigen::Vector2d cell_coordinate(const Eigen::Vector2d& x, double eps) {
  Eigen::Vector2d y;
  for (int i = 0; i < 2; ++i) {
    const double s = x[i] / eps;
    y[i] = std::clamp(s - std::floor(s), 0.0, 1.0);
  }
  return y;
}

struct FieldSample {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

namespace detail {

// Nodal derivative field for a sorted slot, or null past fourth order.
inline const Eigen::VectorXd* deriv_field(const MacroDerivatives& d, int m, int slot) {
  if (m == 2) return &d.d2[slot];
  if (m == 3) return &d.d3[slot];
  if (m == 4) return &d.d4[slot];
  return nullptr;
}

inline const Eigen::VectorXd& cell_fn(const CellFunctions& fn, int m, int slot) {
  if (m == 2) return fn.n2[slot];
  if (m == 3) return fn.n3[slot];
  return fn.n4[slot];
}

}  // namespace detail

// Value, chain-rule gradient, and chain-rule Hessian in one pass (one
// macro and one cell point location). The gradient uses the recovered
// next-order derivative fields for the macroscale factor; chain-rule
// terms that would need fifth or sixth derivatives of the macroscale
// solution are truncated, consistent with recovery stopping at order 4.
inline FieldSample sample(const MultiscaleField& f, const Eigen::Vector2d& x) {
  const TriMesh& mm = f.macro->mesh();
  const PointLocation lm = locate_point(mm, x);

  FieldSample out;
  out.value = local_value(*f.macro, *f.w0, lm.triangle, x);
  out.gradient = local_gradient(*f.macro, *f.w0, lm.triangle, x);
  out.hessian = local_hessian(*f.macro, *f.w0, lm.triangle);
  if (f.order < 2) return out;

  const TriMesh& cm = f.cell->mesh();
  const Eigen::Vector2d y = cell_coordinate(x, f.eps);
  const PointLocation lc = locate_point(cm, y);

  for (int m = 2; m <= f.order; ++m) {
    const double em = std::pow(f.eps, m);
    for (int slot = 0; slot < n_slots(m); ++slot) {
      const double mult = static_cast<double>(multiplicity(m, slot));
      const Eigen::VectorXd& N = detail::cell_fn(*f.fn, m, slot);
      const double nv = local_value(*f.cell, N, lc.triangle, y);
      const Eigen::Vector2d ng = local_gradient(*f.cell, N, lc.triangle, y);
      const Eigen::Matrix2d nh = local_hessian(*f.cell, N, lc.triangle);

      const double dm = p1_value(mm, *detail::deriv_field(*f.deriv, m, slot), lm);

      out.value += em * mult * nv * dm;

      // d/dx_i: eps^(m-1) dN/dy_i * dmw + eps^m N * d(m+1)w_(slot+i)
      Eigen::Vector2d dnext = Eigen::Vector2d::Zero();
      if (m < 4) {
        for (int i = 0; i < 2; ++i)
          dnext[i] = p1_value(mm, *detail::deriv_field(*f.deriv, m + 1, slot + i), lm);
      }
      for (int i = 0; i < 2; ++i) {
        out.gradient[i] += em / f.eps * mult * ng[i] * dm;
        if (m < 4) out.gradient[i] += em * mult * nv * dnext[i];
      }

      // d2/dx_i dx_j: eps^(m-2) Hess_y N * dmw
      //            + eps^(m-1) (dN/dy_i d(m+1)w_j + dN/dy_j d(m+1)w_i)
      //            + eps^m N * d(m+2)w_(slot+i+j)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double h = em / (f.eps * f.eps) * mult * nh(i, j) * dm;
          if (m < 4) h += em / f.eps * mult * (ng[i] * dnext[j] + ng[j] * dnext[i]);
          if (m < 3)
            h += em * mult * nv *
                 p1_value(mm, *detail::deriv_field(*f.deriv, m + 2, slot + i + j), lm);
          out.hessian(i, j) += h;
        }
    }
  }
  return out;
}

inline double reconstruct_value(const MultiscaleField& f, const Eigen::Vector2d& x) {
  return sample(f, x).value;
}

// Plate-bending displacement at through-thickness coordinate x3:
// in-plane components tilt with the deflection slope, the transverse
// component is the deflection itself.
inline Eigen::Vector3d displacement(const MultiscaleField& f, const Eigen::Vector2d& x,
                                    double x3) {
  const FieldSample s = sample(f, x);
  return {-x3 * s.gradient[0], -x3 * s.gradient[1], s.value};
}

// Direct heterogeneous solve used as the reference: identical problem,
// coefficients resolved on a mesh fine enough that every element carries
// one material.
inline Eigen::VectorXd solve_dns(const MorleySpace& sp, const CoefficientField& coeff,
                                 double q, double tol = 1e-10) {
  return solve_clamped_plate(sp, coeff, q, tol);
}

struct ErrorPair {
  double rel_l2 = 0.0;
  double rel_h1 = 0.0;
};

// Relative L2 and H1-seminorm distance to a reference FE solution,
// integrated with the fixed degree-4 rule over the reference mesh.
inline ErrorPair error_vs_reference(const MultiscaleField& f, const MorleySpace& ref_sp,
                                    const Eigen::VectorXd& ref) {
  const TriMesh& m = ref_sp.mesh();
  const TriQuadrature& rule = tri_quadrature_deg4();
  double num_l2 = 0.0, den_l2 = 0.0, num_h1 = 0.0, den_h1 = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    for (int q = 0; q < TriQuadrature::n_points; ++q) {
      const Eigen::Vector2d x =
          quad_point(rule, q, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
      const double w = rule.weight[q] * m.area(t);
      const double rv = local_value(ref_sp, ref, t, x);
      const Eigen::Vector2d rg = local_gradient(ref_sp, ref, t, x);
      const FieldSample s = sample(f, x);
      num_l2 += w * (s.value - rv) * (s.value - rv);
      den_l2 += w * rv * rv;
      num_h1 += w * (s.gradient - rg).squaredNorm();
      den_h1 += w * rg.squaredNorm();
    }
  }
  if (den_l2 <= 0.0 || den_h1 <= 0.0)
    throw std::invalid_argument("error_vs_reference: zero reference norm");
  return {std::sqrt(num_l2 / den_l2), std::sqrt(num_h1 / den_h1)};
}

// Relative broken H2 distance: elementwise Hessian difference against
// the reference FE solution's element Hessians.
inline double broken_h2_vs_reference(const MultiscaleField& f, const MorleySpace& ref_sp,
                                     const Eigen::VectorXd& ref) {
  const TriMesh& m = ref_sp.mesh();
  const TriQuadrature& rule = tri_quadrature_deg4();
  double num = 0.0, den = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const Eigen::Matrix2d rh = local_hessian(ref_sp, ref, t);
    for (int q = 0; q < TriQuadrature::n_points; ++q) {
      const Eigen::Vector2d x =
          quad_point(rule, q, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
      const double w = rule.weight[q] * m.area(t);
      const FieldSample s = sample(f, x);
      num += w * (s.hessian - rh).squaredNorm();
      den += w * rh.squaredNorm();
    }
  }
  if (den <= 0.0) throw std::invalid_argument("broken_h2_vs_reference: zero reference norm");
  return std::sqrt(num / den);
}

struct AnalyticErrors {
  double rel_l2 = 0.0;
  double rel_h1 = 0.0;
  double rel_h2 = 0.0;
};

// Relative errors of an FE solution against a smooth closed-form field,
// for kernel verification against manufactured solutions.
inline AnalyticErrors fe_vs_analytic(
    const MorleySpace& sp, const Eigen::VectorXd& dofs,
    const std::function<double(const Eigen::Vector2d&)>& value,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& gradient,
    const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& hessian) {
  const TriMesh& m = sp.mesh();
  const TriQuadrature& rule = tri_quadrature_deg4();
  double n0 = 0.0, d0 = 0.0, n1 = 0.0, d1 = 0.0, n2 = 0.0, d2 = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const Eigen::Matrix2d fh = local_hessian(sp, dofs, t);
    for (int q = 0; q < TriQuadrature::n_points; ++q) {
      const Eigen::Vector2d x =
          quad_point(rule, q, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
      const double w = rule.weight[q] * m.area(t);
      const double ev = value(x);
      const Eigen::Vector2d eg = gradient(x);
      const Eigen::Matrix2d eh = hessian(x);
      n0 += w * std::pow(local_value(sp, dofs, t, x) - ev, 2);
      d0 += w * ev * ev;
      n1 += w * (local_gradient(sp, dofs, t, x) - eg).squaredNorm();
      d1 += w * eg.squaredNorm();
      n2 += w * (fh - eh).squaredNorm();
      d2 += w * eh.squaredNorm();
    }
  }
  if (d0 <= 0.0 || d1 <= 0.0 || d2 <= 0.0)
    throw std::invalid_argument("fe_vs_analytic: zero reference norm");
  return {std::sqrt(n0 / d0), std::sqrt(n1 / d1), std::sqrt(n2 / d2)};
}

}  // namespace platems
