#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "platems/material.hpp"
#include "platems/mesh.hpp"
#include "platems/quadrature.hpp"

namespace platems {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

// Quadratic nodal basis of one Morley triangle. DOF order: values at the
// three vertices, then normal derivatives at the midpoints of local edges
// (0,1), (1,2), (2,0). The normals handed in are the global canonical edge
// normals, so the resulting local bases agree across elements and no sign
// bookkeeping is needed when scattering.
struct ElementBasis {
  Matrix6 coeff;  // row b: coefficients over {1, X, Y, X^2, XY, Y^2}
  Eigen::Vector2d center;
  double scale = 1.0;

  Eigen::Vector2d local(const Eigen::Vector2d& x) const { return (x - center) / scale; }

  Vector6 values(const Eigen::Vector2d& x) const {
    const Eigen::Vector2d X = local(x);
    Vector6 mono;
    mono << 1.0, X.x(), X.y(), X.x() * X.x(), X.x() * X.y(), X.y() * X.y();
    return coeff * mono;
  }

  // Physical gradients of all six basis functions, one row each.
  Eigen::Matrix<double, 6, 2> gradients(const Eigen::Vector2d& x) const {
    const Eigen::Vector2d X = local(x);
    Eigen::Matrix<double, 6, 2> dmono;
    dmono << 0, 0, 1, 0, 0, 1, 2 * X.x(), 0, X.y(), X.x(), 0, 2 * X.y();
    return coeff * dmono / scale;
  }

  // Constant physical Hessian of basis b.
  Eigen::Matrix2d hessian(int b) const {
    const double s2 = scale * scale;
    Eigen::Matrix2d H;
    H << 2.0 * coeff(b, 3), coeff(b, 4), coeff(b, 4), 2.0 * coeff(b, 5);
    return H / s2;
  }
};

// Build the nodal basis for the triangle (p0, p1, p2) with prescribed unit
// normals on edges (0,1), (1,2), (2,0). Inverts the 6x6 functional matrix
// in a centered, scaled frame; a (nearly) singular matrix means a
// degenerate triangle.
inline ElementBasis element_basis(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                                  const Eigen::Vector2d& p2, const Eigen::Vector2d& n01,
                                  const Eigen::Vector2d& n12, const Eigen::Vector2d& n20) {
  ElementBasis eb;
  eb.center = (p0 + p1 + p2) / 3.0;
  eb.scale = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  if (!(eb.scale > 0.0)) throw std::invalid_argument("element_basis: degenerate triangle");

  auto mono_row = [&](const Eigen::Vector2d& x) {
    const Eigen::Vector2d X = (x - eb.center) / eb.scale;
    Vector6 r;
    r << 1.0, X.x(), X.y(), X.x() * X.x(), X.x() * X.y(), X.y() * X.y();
    return r;
  };
  auto normal_row = [&](const Eigen::Vector2d& mid, const Eigen::Vector2d& n) {
    const Eigen::Vector2d X = (mid - eb.center) / eb.scale;
    Vector6 r;
    r << 0.0, n.x(), n.y(), 2.0 * X.x() * n.x(), X.y() * n.x() + X.x() * n.y(),
        2.0 * X.y() * n.y();
    r /= eb.scale;
    return r;
  };

  Matrix6 F;
  F.row(0) = mono_row(p0).transpose();
  F.row(1) = mono_row(p1).transpose();
  F.row(2) = mono_row(p2).transpose();
  F.row(3) = normal_row(0.5 * (p0 + p1), n01).transpose();
  F.row(4) = normal_row(0.5 * (p1 + p2), n12).transpose();
  F.row(5) = normal_row(0.5 * (p2 + p0), n20).transpose();

  Eigen::FullPivLU<Matrix6> lu(F);
  if (!lu.isInvertible())
    throw std::invalid_argument("element_basis: functional matrix is singular");
  eb.coeff = lu.inverse().transpose();
  return eb;
}

// Morley finite element space on a triangulation: one DOF per vertex
// (function value) and one per edge (normal derivative at the midpoint,
// taken along the canonical global edge normal). flip_edges negates the
// canonical normal of the listed edges; physics is invariant under such
// flips, only the sign of the affected edge DOFs changes.
class MorleySpace {
 public:
  explicit MorleySpace(const TriMesh& mesh, const std::vector<int>& flip_edges = {})
      : mesh_(&mesh) {
    const int nt = mesh.n_triangles();
    const std::unordered_set<int> flips(flip_edges.begin(), flip_edges.end());
    edge_normal_.resize(mesh.n_edges());
    for (int e = 0; e < mesh.n_edges(); ++e) {
      edge_normal_[e] = mesh.edge_normal(e);
      if (flips.count(e)) edge_normal_[e] = -edge_normal_[e];
    }
    element_dofs_.resize(nt);
    sigma_.resize(nt);
    basis_.reserve(nt);
    hess_.resize(nt);
    for (int t = 0; t < nt; ++t) {
      const auto& tri = mesh.triangles[t];
      const auto& te = mesh.triangle_edges[t];
      element_dofs_[t] = {tri[0], tri[1], tri[2], mesh.n_vertices() + te[0],
                          mesh.n_vertices() + te[1], mesh.n_vertices() + te[2]};
      std::array<Eigen::Vector2d, 3> n;
      for (int le = 0; le < 3; ++le) {
        n[le] = edge_normal_[te[le]];
        const Eigen::Vector2d d = mesh.vertices[tri[(le + 1) % 3]] - mesh.vertices[tri[le]];
        const Eigen::Vector2d outward = Eigen::Vector2d(d.y(), -d.x()).normalized();
        sigma_[t][le] = n[le].dot(outward) > 0.0 ? 1.0 : -1.0;
      }
      basis_.push_back(element_basis(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                     mesh.vertices[tri[2]], n[0], n[1], n[2]));
      for (int b = 0; b < 6; ++b) hess_[t][b] = basis_.back().hessian(b);
    }
  }

  const TriMesh& mesh() const { return *mesh_; }
  int n_dofs() const { return mesh_->n_vertices() + mesh_->n_edges(); }
  int vertex_dof(int v) const { return v; }
  int edge_dof(int e) const { return mesh_->n_vertices() + e; }
  const std::array<int, 6>& element_dofs(int t) const { return element_dofs_[t]; }
  const ElementBasis& basis(int t) const { return basis_[t]; }
  const std::array<Eigen::Matrix2d, 6>& hessians(int t) const { return hess_[t]; }
  double sigma(int t, int le) const { return sigma_[t][le]; }
  const Eigen::Vector2d& edge_normal(int e) const { return edge_normal_[e]; }

 private:
  const TriMesh* mesh_;
  std::vector<Eigen::Vector2d> edge_normal_;
  std::vector<std::array<int, 6>> element_dofs_;
  std::vector<std::array<double, 3>> sigma_;
  std::vector<ElementBasis> basis_;
  std::vector<std::array<Eigen::Matrix2d, 6>> hess_;
};

// Element restriction of a FE function on a known triangle.
inline double local_value(const MorleySpace& sp, const Eigen::VectorXd& dofs, int t,
                          const Eigen::Vector2d& x) {
  const Vector6 phi = sp.basis(t).values(x);
  double v = 0.0;
  for (int b = 0; b < 6; ++b) v += dofs[sp.element_dofs(t)[b]] * phi[b];
  return v;
}

inline Eigen::Vector2d local_gradient(const MorleySpace& sp, const Eigen::VectorXd& dofs,
                                      int t, const Eigen::Vector2d& x) {
  const Eigen::Matrix<double, 6, 2> g = sp.basis(t).gradients(x);
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  for (int b = 0; b < 6; ++b) r += dofs[sp.element_dofs(t)[b]] * g.row(b).transpose();
  return r;
}

inline Eigen::Matrix2d local_hessian(const MorleySpace& sp, const Eigen::VectorXd& dofs,
                                     int t) {
  Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
  for (int b = 0; b < 6; ++b) H += dofs[sp.element_dofs(t)[b]] * sp.hessians(t)[b];
  return H;
}

inline double eval_value(const MorleySpace& sp, const Eigen::VectorXd& dofs,
                         const Eigen::Vector2d& x) {
  return local_value(sp, dofs, locate_point(sp.mesh(), x).triangle, x);
}

inline Eigen::Vector2d eval_gradient(const MorleySpace& sp, const Eigen::VectorXd& dofs,
                                     const Eigen::Vector2d& x) {
  return local_gradient(sp, dofs, locate_point(sp.mesh(), x).triangle, x);
}

inline Eigen::Matrix2d eval_hessian(const MorleySpace& sp, const Eigen::VectorXd& dofs,
                                    const Eigen::Vector2d& x) {
  return local_hessian(sp, dofs, locate_point(sp.mesh(), x).triangle);
}

// Nodal interpolant: vertex values plus midpoint normal derivatives.
inline Eigen::VectorXd interpolate(
    const MorleySpace& sp, const std::function<double(const Eigen::Vector2d&)>& f,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& grad_f) {
  const TriMesh& m = sp.mesh();
  Eigen::VectorXd dofs(sp.n_dofs());
  for (int v = 0; v < m.n_vertices(); ++v) dofs[sp.vertex_dof(v)] = f(m.vertices[v]);
  for (int e = 0; e < m.n_edges(); ++e)
    dofs[sp.edge_dof(e)] = sp.edge_normal(e).dot(grad_f(m.edge_midpoint(e)));
  return dofs;
}

// Symmetric sparse system with optional per-DOF Dirichlet-type constraints
// (value constraints only; a constrained DOF is eliminated symmetrically).
struct LinearSystem {
  const MorleySpace* space = nullptr;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<char> constrained;
  Eigen::VectorXd bc_value;
  double tol = 1e-10;
};

// Energy bilinear form: sum over elements of area * D : Hess(u) : Hess(v)
// with the element-constant coefficient tensor. Integrands are constant,
// so the element matrices are exact; blocks are mirrored to keep the
// assembled matrix symmetric to the last bit.
inline LinearSystem assemble_bilinear(const MorleySpace& sp, const CoefficientField& coeff) {
  const TriMesh& m = sp.mesh();
  LinearSystem sys;
  sys.space = &sp;
  sys.A.resize(sp.n_dofs(), sp.n_dofs());
  sys.b = Eigen::VectorXd::Zero(sp.n_dofs());
  sys.constrained.assign(sp.n_dofs(), 0);
  sys.bc_value = Eigen::VectorXd::Zero(sp.n_dofs());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m.n_triangles()) * 36);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const BendingTensor& D = coeff.material(m.element_material[t]);
    const auto& H = sp.hessians(t);
    const auto& dofs = sp.element_dofs(t);
    const double area = m.area(t);
    for (int a = 0; a < 6; ++a) {
      for (int b = a; b < 6; ++b) {
        const double val = area * contract(D, H[b], H[a]);
        trip.emplace_back(dofs[a], dofs[b], val);
        if (a != b) trip.emplace_back(dofs[b], dofs[a], val);
      }
    }
  }
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

// Load functional with the fixed degree-4 rule; q is evaluated per
// quadrature point and may depend on the element id.
inline Eigen::VectorXd assemble_load(
    const MorleySpace& sp, const std::function<double(const Eigen::Vector2d&, int)>& q) {
  const TriMesh& m = sp.mesh();
  const TriQuadrature& rule = tri_quadrature_deg4();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sp.n_dofs());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const auto& dofs = sp.element_dofs(t);
    const double area = m.area(t);
    for (int i = 0; i < TriQuadrature::n_points; ++i) {
      const Eigen::Vector2d x =
          quad_point(rule, i, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
      const double w = rule.weight[i] * area * q(x, t);
      const Vector6 phi = sp.basis(t).values(x);
      for (int b = 0; b < 6; ++b) f[dofs[b]] += w * phi[b];
    }
  }
  return f;
}

inline Eigen::VectorXd assemble_load(const MorleySpace& sp, double q) {
  return assemble_load(sp, [q](const Eigen::Vector2d&, int) { return q; });
}

// Clamped boundary: vertex values from g1, edge-midpoint normal slopes
// from g2(point, outward unit normal). The stored DOF is the derivative
// along the canonical edge normal, hence the sigma sign.
inline void apply_clamped_bc(
    LinearSystem& sys,
    const std::function<double(const Eigen::Vector2d&)>& g1 = nullptr,
    const std::function<double(const Eigen::Vector2d&, const Eigen::Vector2d&)>& g2 =
        nullptr) {
  const MorleySpace& sp = *sys.space;
  const TriMesh& m = sp.mesh();
  for (int v = 0; v < m.n_vertices(); ++v) {
    if (!m.boundary_vertex[v]) continue;
    sys.constrained[sp.vertex_dof(v)] = 1;
    sys.bc_value[sp.vertex_dof(v)] = g1 ? g1(m.vertices[v]) : 0.0;
  }
  for (int t = 0; t < m.n_triangles(); ++t) {
    for (int le = 0; le < 3; ++le) {
      const int e = m.triangle_edges[t][le];
      if (!m.boundary_edge[e]) continue;
      const int dof = sp.edge_dof(e);
      sys.constrained[dof] = 1;
      if (g2) {
        const double s = sp.sigma(t, le);
        const Eigen::Vector2d outward = s * sp.edge_normal(e);
        sys.bc_value[dof] = s * g2(m.edge_midpoint(e), outward);
      } else {
        sys.bc_value[dof] = 0.0;
      }
    }
  }
}

// Direct sparse factorization of the reduced SPD system with a conjugate
// gradient fallback. The factorization is reusable across right-hand
// sides; the normwise backward error of every solve must meet the system
// tolerance. Backward error, not plain relative residual: the latter is
// bounded below by roughly machine epsilon times the condition number and
// is unreachable for fine meshes of a fourth-order operator.
class ClampedSolver {
 public:
  explicit ClampedSolver(const LinearSystem& sys) : sys_(&sys) {
    const int n = static_cast<int>(sys.constrained.size());
    free_index_.assign(n, -1);
    for (int i = 0; i < n; ++i)
      if (!sys.constrained[i]) free_index_[i] = n_free_++;

    std::vector<Eigen::Triplet<double>> ff, fc;
    for (int c = 0; c < sys.A.outerSize(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, c); it; ++it) {
        const int r = static_cast<int>(it.row());
        if (free_index_[r] < 0) continue;
        if (free_index_[c] >= 0)
          ff.emplace_back(free_index_[r], free_index_[c], it.value());
        else
          fc.emplace_back(free_index_[r], n_constrained_index(c), it.value());
      }
    }
    Aff_.resize(n_free_, n_free_);
    Aff_.setFromTriplets(ff.begin(), ff.end());
    Aff_.makeCompressed();
    Afc_.resize(n_free_, static_cast<int>(constrained_list_.size()));
    Afc_.setFromTriplets(fc.begin(), fc.end());
    Afc_.makeCompressed();

    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    ldlt_->compute(Aff_);
    direct_ok_ = ldlt_->info() == Eigen::Success;

    anorm_ = 0.0;
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n_free_);
    for (int k = 0; k < Aff_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Aff_, k); it; ++it)
        row_sums[it.row()] += std::abs(it.value());
    if (n_free_ > 0) anorm_ = row_sums.maxCoeff();
  }

  int n_free() const { return n_free_; }
  double last_residual() const { return last_residual_; }
  const Eigen::SparseMatrix<double>& reduced_matrix() const { return Aff_; }

  // Solve with the constrained values of the owning system and an
  // arbitrary full-length right-hand side.
  Eigen::VectorXd solve(const Eigen::VectorXd& full_rhs) const {
    const int n = static_cast<int>(free_index_.size());
    if (full_rhs.size() != n)
      throw std::invalid_argument("ClampedSolver: right-hand side has wrong size");

    Eigen::VectorXd xc(constrained_list_.size());
    for (size_t i = 0; i < constrained_list_.size(); ++i)
      xc[static_cast<int>(i)] = sys_->bc_value[constrained_list_[i]];

    Eigen::VectorXd rf(n_free_);
    for (int i = 0; i < n; ++i)
      if (free_index_[i] >= 0) rf[free_index_[i]] = full_rhs[i];
    rf -= Afc_ * xc;

    Eigen::VectorXd xf = Eigen::VectorXd::Zero(n_free_);
    const double rhs_inf = rf.lpNorm<Eigen::Infinity>();
    auto backward_error = [&]() {
      const double denom = anorm_ * xf.lpNorm<Eigen::Infinity>() + rhs_inf;
      if (denom == 0.0) return 0.0;
      return (rf - Aff_ * xf).lpNorm<Eigen::Infinity>() / denom;
    };
    if (rhs_inf > 0.0) {
      double berr = 1.0;
      if (direct_ok_) {
        xf = ldlt_->solve(rf);
        berr = backward_error();
        for (int pass = 0; pass < 6 && berr > sys_->tol; ++pass) {
          xf += ldlt_->solve(rf - Aff_ * xf);
          berr = backward_error();
        }
      }
      if (!direct_ok_ || berr > sys_->tol) {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                 Eigen::Lower | Eigen::Upper>
            cg;
        cg.setTolerance(sys_->tol * 1e-2);
        cg.setMaxIterations(20L * n_free_);
        cg.compute(Aff_);
        xf = cg.solveWithGuess(rf, xf);
        berr = backward_error();
      }
      last_residual_ = berr;
      if (berr > sys_->tol) {
        char msg[96];
        std::snprintf(msg, sizeof msg,
                      "ClampedSolver: backward error %.3e exceeds tolerance %.3e", berr,
                      sys_->tol);
        throw std::runtime_error(msg);
      }
    } else {
      last_residual_ = 0.0;
    }

    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
      x[i] = free_index_[i] >= 0 ? xf[free_index_[i]] : sys_->bc_value[i];
    return x;
  }

 private:
  int n_constrained_index(int dof) {
    auto it = constrained_pos_.find(dof);
    if (it != constrained_pos_.end()) return it->second;
    const int idx = static_cast<int>(constrained_list_.size());
    constrained_pos_.emplace(dof, idx);
    constrained_list_.push_back(dof);
    return idx;
  }

  const LinearSystem* sys_;
  std::vector<int> free_index_;
  std::vector<int> constrained_list_;
  std::unordered_map<int, int> constrained_pos_;
  int n_free_ = 0;
  Eigen::SparseMatrix<double> Aff_, Afc_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  bool direct_ok_ = false;
  double anorm_ = 0.0;
  mutable double last_residual_ = 0.0;
};

inline Eigen::VectorXd solve(const LinearSystem& sys) {
  return ClampedSolver(sys).solve(sys.b);
}

}  // namespace platems
