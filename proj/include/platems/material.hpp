#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace platems {

// Fourth-order plate bending stiffness with minor and major symmetries,
// stored as the six independent components
//   D1111, D1122, D1112, D2212, D1212, D2222  (1-based index names).
// Component access uses 0-based indices i,j,k,l in {0,1}.
struct BendingTensor {
  std::array<double, 6> c{};

  double& d1111() { return c[0]; }
  double& d1122() { return c[1]; }
  double& d1112() { return c[2]; }
  double& d2212() { return c[3]; }
  double& d1212() { return c[4]; }
  double& d2222() { return c[5]; }
  double d1111() const { return c[0]; }
  double d1122() const { return c[1]; }
  double d1112() const { return c[2]; }
  double d2212() const { return c[3]; }
  double d1212() const { return c[4]; }
  double d2222() const { return c[5]; }

  // Pair code p = i + j in {0: 11, 1: 12/21, 2: 22}; minor symmetry is
  // implied by the coding, major symmetry by sorting the pair codes.
  double operator()(int i, int j, int k, int l) const {
    const int a = i + j;
    const int b = k + l;
    const int lo = a < b ? a : b;
    const int hi = a < b ? b : a;
    // (lo,hi): (0,0)->D1111 (0,1)->D1112 (0,2)->D1122
    //          (1,1)->D1212 (1,2)->D2212 (2,2)->D2222
    switch (lo * 3 + hi) {
      case 0: return c[0];
      case 1: return c[2];
      case 2: return c[1];
      case 4: return c[4];
      case 5: return c[3];
      default: return c[5];
    }
  }

  BendingTensor scaled(double s) const {
    BendingTensor r = *this;
    for (double& v : r.c) v *= s;
    return r;
  }
};

// Isotropic bending stiffness D0 = E t^3 / (12 (1 - nu^2)).
// Rejects non-positive modulus or thickness and nu outside (-1, 0.5).
inline BendingTensor isotropic_bending(double E, double nu, double t = 1.0) {
  if (!(E > 0.0)) throw std::invalid_argument("isotropic_bending: E must be positive");
  if (!(t > 0.0)) throw std::invalid_argument("isotropic_bending: thickness must be positive");
  if (!(nu < 0.5) || !(nu > -1.0))
    throw std::invalid_argument("isotropic_bending: nu must lie in (-1, 0.5)");
  const double d0 = E * t * t * t / (12.0 * (1.0 - nu * nu));
  BendingTensor D;
  D.c = {d0, nu * d0, 0.0, 0.0, 0.5 * (1.0 - nu) * d0, d0};
  return D;
}

// Full contraction D_ijkl A_kl B_ij over all 16 index combinations.
inline double contract(const BendingTensor& D, const Eigen::Matrix2d& A,
                       const Eigen::Matrix2d& B) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) s += D(i, j, k, l) * A(k, l) * B(i, j);
  return s;
}

// Quadratic-form matrix of D on symmetric 2x2 matrices in the coordinates
// (m11, m22, m12): v^T Q v = D_ijkl M_kl M_ij.
inline Eigen::Matrix3d voigt_form(const BendingTensor& D) {
  Eigen::Matrix3d Q;
  Q << D.d1111(), D.d1122(), 2.0 * D.d1112(),
       D.d1122(), D.d2222(), 2.0 * D.d2212(),
       2.0 * D.d1112(), 2.0 * D.d2212(), 4.0 * D.d1212();
  return Q;
}

inline Eigen::Vector3d form_eigenvalues(const BendingTensor& D) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(voigt_form(D));
  return es.eigenvalues();
}

// Ellipticity guard: the quadratic form must be positive definite.
inline void require_elliptic(const BendingTensor& D, const char* what = "bending tensor") {
  const Eigen::Vector3d ev = form_eigenvalues(D);
  if (!(ev.minCoeff() > 0.0))
    throw std::invalid_argument(std::string(what) + ": quadratic form is not positive definite");
}

// Piecewise-constant coefficient: one tensor per material id, ids live on
// the mesh elements.
struct CoefficientField {
  std::vector<BendingTensor> materials;

  const BendingTensor& material(int id) const {
    if (id < 0 || id >= static_cast<int>(materials.size()))
      throw std::invalid_argument("CoefficientField: material id out of range");
    return materials[id];
  }
};

inline CoefficientField constant_coefficient(const BendingTensor& D) {
  return CoefficientField{{D}};
}

}  // namespace platems
