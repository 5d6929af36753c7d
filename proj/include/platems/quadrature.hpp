#pragma once

#include <array>

#include <Eigen/Dense>

namespace platems {

// Fixed 6-point triangle rule, exact for polynomials up to degree 4.
// Barycentric points with weights summing to 1; scale by triangle area.
struct TriQuadrature {
  static constexpr int n_points = 6;
  std::array<std::array<double, 3>, n_points> bary;
  std::array<double, n_points> weight;
};

inline const TriQuadrature& tri_quadrature_deg4() {
  static const TriQuadrature rule = [] {
    TriQuadrature q{};
    const double a1 = 0.445948490915965;
    const double w1 = 0.223381589678011;
    const double a2 = 0.091576213509771;
    const double w2 = 0.109951743655322;
    auto orbit = [&q](int base, double a, double w) {
      const double b = 1.0 - 2.0 * a;
      q.bary[base + 0] = {b, a, a};
      q.bary[base + 1] = {a, b, a};
      q.bary[base + 2] = {a, a, b};
      q.weight[base + 0] = q.weight[base + 1] = q.weight[base + 2] = w;
    };
    orbit(0, a1, w1);
    orbit(3, a2, w2);
    return q;
  }();
  return rule;
}

// Physical quadrature point for triangle (p0, p1, p2).
inline Eigen::Vector2d quad_point(const TriQuadrature& q, int i,
                                  const Eigen::Vector2d& p0,
                                  const Eigen::Vector2d& p1,
                                  const Eigen::Vector2d& p2) {
  return q.bary[i][0] * p0 + q.bary[i][1] * p1 + q.bary[i][2] * p2;
}

}  // namespace platems
