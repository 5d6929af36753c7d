#include "platems/mesh.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "platems/quadrature.hpp"
#include "test_util.hpp"

using namespace platems;

TEST(StructuredMesh, CountsSingleSquare) {
  TriMesh m = build_structured_mesh(1, 1);
  EXPECT_EQ(m.n_vertices(), 4);
  EXPECT_EQ(m.n_triangles(), 2);
  EXPECT_EQ(m.n_edges(), 5);
}

TEST(StructuredMesh, CountsAndEuler) {
  for (auto [nx, ny] : {std::pair{4, 4}, {3, 5}, {128, 128}}) {
    TriMesh m = build_structured_mesh(nx, ny);
    EXPECT_EQ(m.n_vertices(), (nx + 1) * (ny + 1));
    EXPECT_EQ(m.n_triangles(), 2 * nx * ny);
    EXPECT_EQ(m.n_edges(), 3 * nx * ny + nx + ny);
    EXPECT_EQ(m.n_vertices() - m.n_edges() + m.n_triangles(), 1);
  }
}

TEST(StructuredMesh, AreasPositiveAndSumToDomain) {
  TriMesh m = build_structured_mesh(7, 3, -1.0, 2.0, 3.0, 4.5);
  double total = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    EXPECT_GT(m.area(t), 0.0);
    total += m.area(t);
  }
  EXPECT_NEAR(total, 4.0 * 2.5, 1e-12 * 10.0);
}

TEST(StructuredMesh, RejectsBadArguments) {
  EXPECT_THROW(build_structured_mesh(0, 4), std::invalid_argument);
  EXPECT_THROW(build_structured_mesh(4, 4, 0, 0, 0, 1), std::invalid_argument);
}

TEST(StructuredMesh, BoundaryFlags) {
  TriMesh m = build_structured_mesh(4, 4);
  int nbv = 0, nbe = 0;
  for (bool b : m.boundary_vertex) nbv += b;
  for (bool b : m.boundary_edge) nbe += b;
  EXPECT_EQ(nbv, 16);  // perimeter vertices of a 5x5 grid
  EXPECT_EQ(nbe, 16);  // 4 sides x 4 segments
}

TEST(Materials, UniformRasterAssignsEverything) {
  TriMesh m = build_structured_mesh(4, 4);
  assign_materials(m, uniform_raster(3));
  for (int id : m.element_material) EXPECT_EQ(id, 3);
}

TEST(Materials, CheckerboardQuadrantCounts) {
  TriMesh m = build_structured_mesh(4, 4);
  assign_materials(m, testutil::checkerboard());
  int count1 = 0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Eigen::Vector2d c = m.centroid(t);
    const int expect = (c.x() < 0.5) == (c.y() < 0.5) ? 0 : 1;
    EXPECT_EQ(m.element_material[t], expect);
    count1 += m.element_material[t];
  }
  EXPECT_EQ(count1, 16);  // each quadrant holds 8 triangles
}

TEST(Materials, TiledInclusionFraction) {
  const double eps = 1.0 / 8.0;
  TriMesh m = build_structured_mesh(64, 64);
  assign_materials(m, testutil::centered_inclusion(), eps);
  int labeled = 0, oracle = 0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    labeled += m.element_material[t];
    Eigen::Vector2d y = m.centroid(t) / eps;
    y.x() -= std::floor(y.x());
    y.y() -= std::floor(y.y());
    const bool inside = y.x() >= 0.25 && y.x() < 0.75 && y.y() >= 0.25 && y.y() < 0.75;
    oracle += inside;
  }
  EXPECT_EQ(labeled, oracle);
  EXPECT_EQ(labeled, m.n_triangles() / 4);
}

TEST(Materials, MisalignedMeshRejected) {
  TriMesh m = build_structured_mesh(4, 4);
  MaterialRaster r;
  r.k = 3;
  r.cells.assign(9, 0);
  r.cells[4] = 1;
  EXPECT_THROW(assign_materials(m, r), std::invalid_argument);
}

TEST(Materials, AssignmentIsIdempotent) {
  TriMesh m = build_structured_mesh(8, 8);
  assign_materials(m, testutil::checkerboard());
  const std::vector<int> first = m.element_material;
  assign_materials(m, testutil::checkerboard());
  EXPECT_EQ(first, m.element_material);
}

TEST(Locate, CentroidOfFirstTriangle) {
  TriMesh m = build_structured_mesh(4, 4);
  const PointLocation loc = locate_point(m, m.centroid(0));
  EXPECT_EQ(loc.triangle, 0);
  EXPECT_NEAR(loc.bary[0], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(loc.bary[1], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(loc.bary[2], 1.0 / 3.0, 1e-14);
}

TEST(Locate, SharedVertexResolvesToLowestTriangle) {
  TriMesh m = build_structured_mesh(2, 2);
  const PointLocation loc = locate_point(m, {0.5, 0.5});
  // All triangles containing the center vertex, by direct scan.
  int lowest = -1;
  for (int t = 0; t < m.n_triangles() && lowest < 0; ++t) {
    for (int v : m.triangles[t])
      if ((m.vertices[v] - Eigen::Vector2d(0.5, 0.5)).norm() < 1e-15) lowest = t;
  }
  EXPECT_EQ(loc.triangle, lowest);
  EXPECT_EQ(loc.triangle, 0);
}

TEST(Locate, RandomPointsMatchScanOracle) {
  TriMesh m = build_structured_mesh(16, 16);
  auto gen = testutil::rng();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const Eigen::Vector2d x(unif(gen), unif(gen));
    const PointLocation fast = locate_point(m, x);
    const PointLocation scan = locate_point_scan(m, x);
    ASSERT_EQ(fast.triangle, scan.triangle);
    double sum = 0.0;
    Eigen::Vector2d rec = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) {
      ASSERT_GE(fast.bary[i], -1e-12);
      ASSERT_LE(fast.bary[i], 1.0 + 1e-12);
      sum += fast.bary[i];
      rec += fast.bary[i] * m.vertices[m.triangles[fast.triangle][i]];
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    ASSERT_LT((rec - x).norm(), 1e-12);
  }
}

TEST(Locate, OutsidePointThrows) {
  TriMesh m = build_structured_mesh(4, 4);
  EXPECT_THROW(locate_point(m, {1.5, 0.5}), std::domain_error);
  EXPECT_THROW(locate_point(m, {0.5, -1e-6}), std::domain_error);
  // Points within the boundary tolerance are accepted.
  EXPECT_NO_THROW(locate_point(m, {1.0, 1.0}));
  EXPECT_NO_THROW(locate_point(m, {-0.5e-12, 0.5}));
}

TEST(Rebuild, PermutedTriangleOrderKeepsTopology) {
  TriMesh m = build_structured_mesh(4, 4);
  assign_materials(m, testutil::checkerboard());
  std::vector<std::array<int, 3>> tris = m.triangles;
  std::vector<int> mat = m.element_material;
  std::mt19937 gen = testutil::rng(7u);
  std::vector<int> perm(tris.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<std::array<int, 3>> ptris(tris.size());
  std::vector<int> pmat(tris.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    ptris[i] = tris[perm[i]];
    pmat[i] = mat[perm[i]];
  }
  TriMesh p = rebuild_topology(m.vertices, ptris, pmat);
  EXPECT_EQ(p.n_edges(), m.n_edges());
  EXPECT_EQ(p.n_vertices(), m.n_vertices());
  EXPECT_FALSE(p.structured);
  const Eigen::Vector2d x(0.37, 0.81);
  const PointLocation loc = locate_point(p, x);
  Eigen::Vector2d rec = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i) rec += loc.bary[i] * p.vertices[p.triangles[loc.triangle][i]];
  EXPECT_LT((rec - x).norm(), 1e-12);
}

TEST(Quadrature, ExactForDegreeFour) {
  // Reference triangle (0,0),(1,0),(0,1): integral of x^p y^q is p! q! / (p+q+2)!.
  auto factorial = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  const TriQuadrature& q = tri_quadrature_deg4();
  const Eigen::Vector2d p0(0, 0), p1(1, 0), p2(0, 1);
  for (int p = 0; p <= 4; ++p) {
    for (int s = 0; p + s <= 4; ++s) {
      double acc = 0.0;
      for (int i = 0; i < TriQuadrature::n_points; ++i) {
        const Eigen::Vector2d x = quad_point(q, i, p0, p1, p2);
        acc += 0.5 * q.weight[i] * std::pow(x.x(), p) * std::pow(x.y(), s);
      }
      const double exact = factorial(p) * factorial(s) / factorial(p + s + 2);
      EXPECT_NEAR(acc, exact, 1e-14) << "monomial x^" << p << " y^" << s;
    }
  }
}
