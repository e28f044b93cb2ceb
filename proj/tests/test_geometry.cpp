#include <gtest/gtest.h>

#include "subtext/geometry.hpp"
#include "support.hpp"

using namespace subtext;
using subtext::testing::Rng;

TEST(Geometry, AreaExamples) {
  EXPECT_DOUBLE_EQ(area(AxisBox(0, 0, 10, 10)), 100.0);
  EXPECT_DOUBLE_EQ(area(Quad({0, 0}, {4, 0}, {4, 3}, {0, 3})), 12.0);
  const Quad trapezoid({0, 0}, {2, 0}, {3, 2}, {0, 2});
  // Shoelace by hand: (0*0-2*0) + (2*2-3*0) + (3*2-0*2) + (0*0-0*2) = 10, half is 5.
  EXPECT_DOUBLE_EQ(area(trapezoid), 5.0);
  EXPECT_NEAR(rasterized_overlap_oracle(trapezoid, trapezoid, 0.005), 5.0, 0.05);
}

TEST(Geometry, DegenerateAreaIsZero) {
  EXPECT_EQ(area(AxisBox(1, 1, 1, 5)), 0.0);
  EXPECT_EQ(area(Quad({0, 0}, {1, 1}, {2, 2}, {3, 3})), 0.0);
}

TEST(Geometry, QuadWindingNormalized) {
  const Quad cw({0, 0}, {0, 3}, {4, 3}, {4, 0});
  EXPECT_EQ(cw[0], (Point{0, 0}));
  EXPECT_EQ(cw[1], (Point{4, 0}));
  EXPECT_DOUBLE_EQ(area(cw), 12.0);
  const Quad ccw({0, 0}, {4, 0}, {4, 3}, {0, 3});
  EXPECT_EQ(ccw, cw);
}

TEST(Geometry, RejectsInvalidShapes) {
  EXPECT_THROW(AxisBox(5, 0, 1, 1), GeometryError);
  EXPECT_THROW(AxisBox(0, 0, NAN, 1), GeometryError);
  // Self-intersecting bow tie.
  EXPECT_THROW(Quad({0, 0}, {4, 3}, {4, 0}, {0, 3}), GeometryError);
  // Reflex vertex.
  EXPECT_THROW(Quad({0, 0}, {4, 0}, {1, 1}, {0, 4}), GeometryError);
}

TEST(Geometry, IntersectionExamples) {
  const AxisBox a(0, 0, 10, 10), b(5, 0, 15, 10);
  EXPECT_DOUBLE_EQ(intersection_area(a, b), 50.0);
  EXPECT_NEAR(rasterized_overlap_oracle(a, b, 0.01), 50.0, 0.5);
  EXPECT_NEAR(intersection_area(Quad(a), Quad(b)), 50.0, 1e-9);
  EXPECT_EQ(intersection_area(a, AxisBox(20, 20, 30, 30)), 0.0);
  const Quad q({0, 0}, {2, 0}, {3, 2}, {0, 2});
  EXPECT_NEAR(intersection_area(q, q), 5.0, 1e-12);
}

TEST(Geometry, IouExamples) {
  const AxisBox a(0, 0, 10, 10), b(5, 0, 15, 10);
  EXPECT_NEAR(iou(a, b), 1.0 / 3.0, 1e-12);
  const double oracle = rasterized_overlap_oracle(a, b, 0.01);
  EXPECT_NEAR(iou(a, b), oracle / (200.0 - oracle), 1e-2);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, AxisBox(20, 20, 30, 30)), 0.0);
  EXPECT_EQ(iou(AxisBox(0, 0, 0, 0), AxisBox(0, 0, 0, 0)), 0.0);
}

TEST(Geometry, IofExamples) {
  const AxisBox p(0, 0, 4, 10), g(0, 0, 20, 10);
  EXPECT_DOUBLE_EQ(iof(p, g), 1.0);
  EXPECT_DOUBLE_EQ(iof(g, p), 0.2);
  EXPECT_EQ(iof(p, AxisBox(50, 50, 60, 60)), 0.0);
  EXPECT_DOUBLE_EQ(iof(p, p), 1.0);
  EXPECT_THROW(iof(AxisBox(1, 1, 1, 3), g), GeometryError);
}

TEST(Geometry, OracleExamples) {
  const AxisBox unit(0, 0, 1, 1);
  EXPECT_NEAR(rasterized_overlap_oracle(unit, unit, 0.01), 1.0, 0.02);
  EXPECT_NEAR(rasterized_overlap_oracle(AxisBox(0, 0, 10, 10), AxisBox(5, 0, 15, 10), 0.01), 50.0,
              0.5);
  EXPECT_EQ(rasterized_overlap_oracle(unit, AxisBox(3, 3, 4, 4), 0.01), 0.0);
  EXPECT_THROW(rasterized_overlap_oracle(unit, unit, 0.0), GeometryError);
}

TEST(Geometry, FastPathMatchesPolygonPath) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const AxisBox a = subtext::testing::random_box(rng), b = subtext::testing::random_box(rng);
    EXPECT_NEAR(intersection_area(a, b), intersection_area(Quad(a), Quad(b)), 1e-9);
  }
}

TEST(Geometry, RegionVariantDispatch) {
  const Region a = AxisBox(0, 0, 10, 10);
  const Region b = Quad(AxisBox(5, 0, 15, 10));
  EXPECT_NEAR(iou(a, b), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(area(b), 100.0);
}

class GeometryProperty : public ::testing::Test {
 protected:
  Rng rng{2024};
};

TEST_F(GeometryProperty, OracleAgreementOnRandomQuads) {
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const Quad a = subtext::testing::random_quad(rng, 40);
    const Quad b = subtext::testing::random_quad(rng, 40);
    const double res = 0.01 * std::min(subtext::testing::min_side(a), subtext::testing::min_side(b));
    if (res <= 0.0) continue;
    const double exact = intersection_area(a, b);
    const double oracle = rasterized_overlap_oracle(a, b, res);
    ASSERT_LE(std::abs(exact - oracle), 0.01 * std::max(area(a), area(b)))
        << "pair " << i << " exact " << exact << " oracle " << oracle;
    ++checked;
  }
  EXPECT_GE(checked, 1000);
}

TEST_F(GeometryProperty, IouSymmetricAndBounded) {
  for (int i = 0; i < 3000; ++i) {
    const Quad a = subtext::testing::random_quad(rng, 60);
    const Quad b = subtext::testing::random_quad(rng, 60);
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    if (area(a) > 0 && area(b) > 0) {
      const double fa = iof(a, b), fb = iof(b, a);
      EXPECT_LE(ab, std::min(fa, fb) + 1e-12);
      EXPECT_LE(std::max(fa, fb), 1.0);
      EXPECT_NEAR(fa * area(a), fb * area(b), 1e-9 * std::max(area(a), area(b)));
    }
  }
}

TEST_F(GeometryProperty, Containment) {
  for (int i = 0; i < 500; ++i) {
    const AxisBox outer = subtext::testing::random_box(rng);
    const double fx0 = subtext::testing::uniform(rng, 0, 0.4), fx1 = subtext::testing::uniform(rng, 0.6, 1);
    const double fy0 = subtext::testing::uniform(rng, 0, 0.4), fy1 = subtext::testing::uniform(rng, 0.6, 1);
    const AxisBox inner(outer.x_min + fx0 * outer.width(), outer.y_min + fy0 * outer.height(),
                        outer.x_min + fx1 * outer.width(), outer.y_min + fy1 * outer.height());
    EXPECT_NEAR(iof(Quad(inner), Quad(outer)), 1.0, 1e-12);
    EXPECT_NEAR(iou(Quad(inner), Quad(outer)), area(inner) / area(outer), 1e-9);
  }
}

TEST_F(GeometryProperty, TranslationAndScaleInvariance) {
  auto transform = [](const Quad& q, double s, double dx, double dy) {
    std::array<Point, 4> v;
    for (std::size_t k = 0; k < 4; ++k) v[k] = {q[k].x * s + dx, q[k].y * s + dy};
    return Quad(v);
  };
  for (int i = 0; i < 500; ++i) {
    const Quad a = subtext::testing::random_quad(rng), b = subtext::testing::random_quad(rng);
    const double s = subtext::testing::uniform(rng, 0.1, 10);
    const double dx = subtext::testing::uniform(rng, -500, 500), dy = subtext::testing::uniform(rng, -500, 500);
    const Quad ta = transform(a, s, dx, dy), tb = transform(b, s, dx, dy);
    EXPECT_NEAR(iou(a, b), iou(ta, tb), 1e-9);
    if (area(a) > 0) {
      EXPECT_NEAR(iof(a, b), iof(ta, tb), 1e-9);
    }
  }
}
