#include <gtest/gtest.h>

#include <random>

#include "sigpick/geometry.hpp"
#include "support/oracles.hpp"

using namespace sigpick;

namespace {

SimplexPoint bin(double p) { return SimplexPoint({p, 1.0 - p}); }

std::shared_ptr<const Triangulation> segments(std::vector<double> xs) {
  std::vector<SimplexPoint> v;
  std::vector<std::vector<std::size_t>> s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    v.push_back(bin(xs[i]));
    if (i) s.push_back({i - 1, i});
  }
  return std::make_shared<const Triangulation>(v, s);
}

SimplexPoint p3(double a, double b) { return SimplexPoint({a, b, 1.0 - a - b}); }

// Corners plus the centroid, coned out.
std::shared_ptr<const Triangulation> star3() {
  std::vector<SimplexPoint> v{p3(1, 0), p3(0, 1), p3(0, 0), p3(1.0 / 3, 1.0 / 3)};
  return std::make_shared<const Triangulation>(v, std::vector<std::vector<std::size_t>>{{0, 1, 3}, {1, 2, 3}, {0, 2, 3}});
}

}  // namespace

TEST(SimplexPoint, RejectsInvalidCoordinates) {
  EXPECT_THROW(SimplexPoint({0.5, 0.6}), DomainError);
  EXPECT_THROW(SimplexPoint({-0.1, 1.1}), DomainError);
  EXPECT_THROW(SimplexPoint(Vec{}), DomainError);
  EXPECT_NO_THROW(SimplexPoint({0.1, 0.2, 0.7}));
  const SimplexPoint q({-1e-14, 1.0 + 1e-14});
  EXPECT_EQ(q[0], 0.0);
}

TEST(SimplexPoint, DedupeKeepsLexicographicallySmallest) {
  auto out = dedupe_points({bin(0.5), bin(0.5 + 1e-13), bin(0.2), bin(0.5 - 1e-13)}, 1e-12);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0][0], 0.2);
  EXPECT_DOUBLE_EQ(out[1][0], 0.5 - 1e-13);
}

TEST(ValidateTriangulation, IntervalPartition) {
  EXPECT_TRUE(validate_triangulation(*segments({0, 0.5, 1})).valid);
}

TEST(ValidateTriangulation, SingleCell) {
  EXPECT_TRUE(validate_triangulation(Triangulation::standard(3)).valid);
  EXPECT_TRUE(validate_triangulation(Triangulation::standard(2)).valid);
  EXPECT_TRUE(validate_triangulation(Triangulation::standard(1)).valid);
}

TEST(ValidateTriangulation, EmptyIsNoCover) {
  const Triangulation t({bin(0), bin(1)}, {});
  const auto rep = validate_triangulation(t);
  EXPECT_FALSE(rep.valid);
  EXPECT_EQ(rep.reason, "no cover");
}

TEST(ValidateTriangulation, MissingPieceIsNoCover) {
  const auto rep = validate_triangulation(Triangulation({bin(0), bin(0.5), bin(1)}, {{0, 1}}));
  EXPECT_FALSE(rep.valid);
  EXPECT_NE(rep.reason.find("no cover"), std::string::npos);
}

TEST(ValidateTriangulation, OverlappingSegments) {
  const auto rep = validate_triangulation(Triangulation({bin(0), bin(0.6), bin(0.4), bin(1)}, {{0, 1}, {2, 3}}));
  EXPECT_FALSE(rep.valid);
  ASSERT_TRUE(rep.pair.has_value());
  EXPECT_EQ(*rep.pair, std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(ValidateTriangulation, EdgeMeetingInteriorIsRejected) {
  // A triangle edge ends in the middle of a neighbouring edge: the cells cover
  // the simplex without overlap but do not meet face to face.
  const auto a = p3(1, 0), b = p3(0, 1), c = p3(0, 0);
  const auto m1 = p3(0.5, 0), m2 = p3(0, 0.5), m3 = p3(0.25, 0.25);
  const Triangulation t({a, b, c, m1, m2, m3}, {{0, 1, 3}, {1, 4, 3}, {3, 5, 2}, {5, 4, 2}});
  const auto rep = validate_triangulation(t);
  EXPECT_FALSE(rep.valid);
  EXPECT_TRUE(rep.pair.has_value());
  EXPECT_NE(rep.reason.find("common face"), std::string::npos);
}

TEST(ValidateTriangulation, DegenerateCell) {
  const Triangulation t({p3(1, 0), p3(0, 1), p3(0.5, 0.5), p3(0, 0)}, {{0, 1, 2}, {0, 1, 3}});
  EXPECT_FALSE(validate_triangulation(t).valid);
}

TEST(ValidateTriangulation, FacesMustBelongToCells) {
  const Triangulation ok({bin(0), bin(0.5), bin(1)}, {{0, 1}, {1, 2}, {1}});
  EXPECT_TRUE(validate_triangulation(ok).valid);
  const Triangulation bad({p3(1, 0), p3(0, 1), p3(0, 0), p3(0.2, 0.2)}, {{0, 1, 2}, {0, 3}});
  EXPECT_FALSE(validate_triangulation(bad).valid);
}

TEST(ValidateTriangulation, Star) { EXPECT_TRUE(validate_triangulation(*star3()).valid); }

TEST(Barycentric, VertexGivesSingleAtom) {
  const auto t = segments({0, 1.0 / 11, 1});
  const auto m = barycentric(*t, bin(1.0 / 11));
  ASSERT_EQ(m.atoms.size(), 1u);
  EXPECT_NEAR(m.atoms[0].weight, 1.0, 1e-15);
  EXPECT_NEAR(m.atoms[0].point[0], 1.0 / 11, 1e-15);
}

TEST(Barycentric, HandComputedWeights) {
  const auto t = segments({0, 1.0 / 11, 1});
  const auto m = barycentric(*t, bin(0.5)).canonical(1e-12);
  ASSERT_EQ(m.atoms.size(), 2u);
  EXPECT_NEAR(m.atoms[0].point[0], 1.0 / 11, 1e-12);
  EXPECT_NEAR(m.atoms[0].weight, 0.55, 1e-12);
  EXPECT_NEAR(m.atoms[1].point[0], 1.0, 1e-12);
  EXPECT_NEAR(m.atoms[1].weight, 0.45, 1e-12);
}

TEST(Barycentric, SharedFaceUsesOnlyFaceVertices) {
  const auto t = star3();
  // Midpoint of the edge between corner 0 and the centroid.
  const SimplexPoint x({(1.0 + 1.0 / 3) / 2, (1.0 / 3) / 2, (1.0 / 3) / 2});
  const auto m = barycentric(*t, x);
  ASSERT_EQ(m.atoms.size(), 2u);
  for (const auto& a : m.atoms) EXPECT_NEAR(a.weight, 0.5, 1e-12);
}

TEST(Barycentric, OutsideSimplexIsDomainError) {
  EXPECT_THROW(barycentric(*segments({0, 1}), SimplexPoint({1.2, -0.2})), DomainError);
  EXPECT_THROW(barycentric(*star3(), bin(0.5)), DomainError);
}

TEST(Barycentric, MeanReproducesPointProperty) {
  std::mt19937_64 rng(11);
  const auto t2 = segments({0, 0.1, 0.35, 0.8, 1});
  const auto t3 = star3();
  for (int i = 0; i < 1000; ++i) {
    for (const auto* t : {t2.get(), t3.get()}) {
      const auto x = oracle::random_point(t->n_states(), rng);
      const auto m = barycentric(*t, x);
      EXPECT_LE(max_abs_diff(m.mean(), x.coords()), 1e-12);
      EXPECT_NEAR(m.total_weight(), 1.0, 1e-12);
      EXPECT_LE(m.atoms.size(), t->n_states());
    }
  }
}

TEST(Interpolate, VertexAndConstantValues) {
  const auto t = star3();
  const VertexInterpolant f(t, {3, 1, 4, 1.5});
  EXPECT_DOUBLE_EQ(f(t->vertices()[3]), 1.5);
  const VertexInterpolant c(t, {2, 2, 2, 2});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(c(oracle::random_point(3, rng)), 2.0, 1e-12);
}

TEST(Interpolate, HandComputedMidpoint) {
  const VertexInterpolant f(segments({0, 1.0 / 11, 1}), {0, 1, 1});
  EXPECT_NEAR(f(bin(1.0 / 22)), 0.5, 1e-12);
  EXPECT_NEAR(interpolate(f, bin(0.5)), 1.0, 1e-12);
}

TEST(Interpolate, AffineWithinEachCellProperty) {
  const auto t = star3();
  const VertexInterpolant f(t, {3, -1, 4, 1.5});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0, 1);
  for (std::size_t s = 0; s < t->simplices().size(); ++s) {
    for (int i = 0; i < 300; ++i) {
      // Random points of cell s via random barycentric weights.
      auto pick = [&] {
        const auto w = oracle::random_point(3, rng);
        Vec x(3, 0.0);
        for (std::size_t k = 0; k < 3; ++k)
          for (std::size_t r = 0; r < 3; ++r) x[r] += w[k] * t->vertices()[t->simplices()[s][k]][r];
        return SimplexPoint::clamped(x);
      };
      const auto a = pick(), b = pick();
      const double lam = unif(rng);
      Vec mid(3);
      for (std::size_t r = 0; r < 3; ++r) mid[r] = lam * a[r] + (1 - lam) * b[r];
      EXPECT_NEAR(f(SimplexPoint::clamped(mid)), lam * f(a) + (1 - lam) * f(b), 1e-9);
    }
  }
}

TEST(Interpolate, MatchesBruteForceCellSearch) {
  const auto t = star3();
  const Vec vals{3, -1, 4, 1.5};
  const VertexInterpolant f(t, vals);
  std::vector<Vec> verts;
  for (const auto& v : t->vertices()) verts.push_back(v.coords());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto x = oracle::random_point(3, rng);
    EXPECT_NEAR(f(x), oracle::interpolate(verts, t->simplices(), vals, x.coords()), 1e-12);
  }
}

TEST(Pullback, IdentityReproducesInterpolant) {
  auto f = std::make_shared<const VertexInterpolant>(star3(), Vec{3, -1, 4, 1.5});
  const auto g = pullback_affine(f, AffineMap::identity(3));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto x = oracle::random_point(3, rng);
    EXPECT_NEAR(g(x), (*f)(x), 1e-12);
  }
  // Interior walls of the star: the three segments from the centroid.
  EXPECT_EQ(g.boundary_functionals().size(), 3u);
}

TEST(Pullback, LinearInterpolantIsAffine) {
  auto f = std::make_shared<const VertexInterpolant>(std::make_shared<const Triangulation>(Triangulation::standard(2)),
                                                     Vec{2.0, -1.0});
  Matrix m(2, 2);
  m(0, 0) = 0.8, m(1, 0) = 0.2, m(0, 1) = 0.0, m(1, 1) = 1.0;
  const auto g = pullback_affine(f, AffineMap{m, {0, 0}});
  const auto aff = g.as_affine();
  ASSERT_TRUE(aff.has_value());
  for (double p : {0.0, 0.3, 0.77, 1.0}) EXPECT_NEAR((*aff)(bin(p)), g(bin(p)), 1e-12);
  EXPECT_TRUE(g.boundary_functionals().empty());
}

TEST(Pullback, ConstantMapIsConstant) {
  auto f = std::make_shared<const VertexInterpolant>(star3(), Vec{3, -1, 4, 1.5});
  const auto target = p3(0.2, 0.5);
  const auto g = pullback_affine(f, AffineMap::constant(target, 2));
  for (double p : {0.0, 0.4, 1.0}) EXPECT_NEAR(g(bin(p)), (*f)(target), 1e-12);
  EXPECT_TRUE(g.boundary_functionals().empty());
}

TEST(Pullback, MapLeavingSimplexIsDomainError) {
  auto f = std::make_shared<const VertexInterpolant>(segments({0, 1}), Vec{0, 1});
  Matrix m(2, 2);
  m(0, 0) = 1.5, m(1, 0) = -0.5, m(0, 1) = 0.0, m(1, 1) = 1.0;
  EXPECT_THROW(pullback_affine(f, AffineMap{m, {0, 0}}), DomainError);
}

TEST(Pullback, PiecesAgreeWithEvaluation) {
  auto f = std::make_shared<const VertexInterpolant>(segments({0, 0.3, 0.6, 1}), Vec{0, 2, 1, 3});
  Matrix m(2, 2);
  m(0, 0) = 0.9, m(1, 0) = 0.1, m(0, 1) = 0.2, m(1, 1) = 0.8;
  const auto g = pullback_affine(f, AffineMap{m, {0, 0}});
  for (double p = 0; p <= 1.0; p += 0.01) {
    const auto x = bin(p);
    bool found = false;
    for (std::size_t s = 0; s < 3; ++s) {
      bool inside = true;
      for (const auto& c : g.piece_constraints(s)) inside = inside && c(x) >= -1e-12;
      if (inside) {
        EXPECT_NEAR(g.piece(s)(x), g(x), 1e-12);
        found = true;
      }
    }
    EXPECT_TRUE(found);
  }
}

TEST(CandidateVertices, SingleBreakpoint) {
  CellArrangement arr{2, {AffineFunctional{{1.0 - 1.0 / 11, -1.0 / 11}, 0.0}}, {}};
  const auto c = candidate_vertices(arr);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0][0], 0.0, 1e-15);
  EXPECT_NEAR(c[1][0], 1.0 / 11, 1e-15);
  EXPECT_NEAR(c[2][0], 1.0, 1e-15);
}

TEST(CandidateVertices, NoFunctionalsGivesCorners) {
  for (std::size_t n : {1u, 2u, 3u, 4u}) EXPECT_EQ(candidate_vertices(CellArrangement{n, {}, {}}).size(), n);
}

TEST(CandidateVertices, DuplicateZeroSetsMerge) {
  // p - 0.5 and 2p - 1 written on the simplex with p = x_0.
  CellArrangement arr{2, {{{0.5, -0.5}, 0.0}, {{2.0, 0.0}, -1.0}}, {}};
  const auto c = candidate_vertices(arr);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[1][0], 0.5, 1e-15);
}

TEST(CandidateVertices, TwoDimensionalLines) {
  // x0 = 0.5 and x1 = 0.25 cross inside; each also meets the boundary twice.
  CellArrangement arr{3, {{{1, 0, 0}, -0.5}, {{0, 1, 0}, -0.25}}, {}};
  const auto c = candidate_vertices(arr);
  EXPECT_EQ(c.size(), 3u + 1u + 2u + 2u);
  bool cross = false;
  for (const auto& p : c) cross = cross || (std::abs(p[0] - 0.5) < 1e-12 && std::abs(p[1] - 0.25) < 1e-12);
  EXPECT_TRUE(cross);
}

TEST(CandidateVertices, SingularSubsetsSkipped) {
  CellArrangement arr{3, {{{1, 0, 0}, -0.5}, {{2, 0, 0}, -1.0}, {{1, 0, 0}, -0.25}}, {}};
  EXPECT_NO_THROW(candidate_vertices(arr));
}

TEST(CommonRefinement, CellsPartitionTheSimplex) {
  auto f = std::make_shared<const VertexInterpolant>(star3(), Vec{3, -1, 4, 1.5});
  Matrix m(3, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) m(r, c) = r == c ? 0.7 : 0.15;
  const auto g1 = pullback_affine(f, AffineMap::identity(3));
  const auto g2 = pullback_affine(f, AffineMap{m, {0, 0, 0}});
  const auto cells = common_refinement(3, {&g1, &g2});
  double area = 0.0;
  for (const auto& c : cells) {
    // Fan-triangulate the convex cell around its centroid.
    Vec ctr(3, 0.0);
    for (const auto& v : c.vertices)
      for (std::size_t r = 0; r < 3; ++r) ctr[r] += v[r] / c.vertices.size();
    std::vector<std::pair<double, std::size_t>> ang;
    for (std::size_t i = 0; i < c.vertices.size(); ++i)
      ang.emplace_back(std::atan2(c.vertices[i][1] - ctr[1], c.vertices[i][0] - ctr[0]), i);
    std::sort(ang.begin(), ang.end());
    for (std::size_t i = 0; i < ang.size(); ++i) {
      const auto& a = c.vertices[ang[i].second];
      const auto& b = c.vertices[ang[(i + 1) % ang.size()].second];
      area += std::abs((a[0] - ctr[0]) * (b[1] - ctr[1]) - (a[1] - ctr[1]) * (b[0] - ctr[0]));
    }
  }
  EXPECT_NEAR(area, 1.0, 1e-9);
  // On each cell both pullbacks are affine.
  std::mt19937_64 rng(4);
  for (const auto& c : cells) {
    for (int i = 0; i < 20; ++i) {
      const auto w = oracle::random_point(c.vertices.size(), rng);
      Vec x(3, 0.0);
      for (std::size_t k = 0; k < c.vertices.size(); ++k)
        for (std::size_t r = 0; r < 3; ++r) x[r] += w[k] * c.vertices[k][r];
      const auto p = SimplexPoint::clamped(x);
      EXPECT_NEAR(g1.piece(c.pieces[0])(p), g1(p), 1e-9);
      EXPECT_NEAR(g2.piece(c.pieces[1])(p), g2(p), 1e-9);
    }
  }
}
