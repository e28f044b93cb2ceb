#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "subtext/anchors.hpp"
#include "support.hpp"

namespace subtext {
namespace {

using testing::Rng;
using testing::uniform;

TEST(Anchors, IdenticalShapesGiveTheirRatioAndSize) {
  const std::vector<BoxShape> shapes(8, BoxShape{2.0, 1.0});
  const AnchorFit fit = fit_anchors(shapes, 1, 0);
  ASSERT_EQ(fit.aspect_ratios.size(), 1u);
  EXPECT_NEAR(fit.aspect_ratios[0], 2.0, 1e-12);
  EXPECT_NEAR(fit.scale, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(fit.inertia, 0.0, 1e-24);
}

TEST(Anchors, StrideDividesScale) {
  const std::vector<BoxShape> shapes{{10, 10}, {40, 10}, {90, 10}};
  AnchorFitOptions opt;
  opt.stride = 4.0;
  EXPECT_NEAR(fit_anchors(shapes, 1, 0, opt).scale, 20.0 / 4.0, 1e-12);
  const std::vector<BoxShape> even{{4, 1}, {9, 1}, {16, 1}, {25, 1}};
  EXPECT_NEAR(fit_anchors(even, 1, 0).scale, 0.5 * (3.0 + 4.0), 1e-12);
}

TEST(Anchors, RecoversTwoClusters) {
  std::vector<BoxShape> shapes;
  for (int i = 0; i < 10; ++i) {
    const double h = 10.0 + i;
    shapes.push_back({0.5 * h, h});
    shapes.push_back({4.0 * h, h});
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AnchorFit fit = fit_anchors(shapes, 2, seed);
    ASSERT_EQ(fit.aspect_ratios.size(), 2u);
    EXPECT_NEAR(fit.aspect_ratios[0], 0.5, 1e-6);
    EXPECT_NEAR(fit.aspect_ratios[1], 4.0, 1e-6);
  }
}

std::vector<BoxShape> random_shapes(Rng& rng, std::size_t n) {
  std::vector<BoxShape> s;
  std::lognormal_distribution<double> aspect(1.0, 0.8);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = uniform(rng, 8, 60);
    s.push_back({h * aspect(rng), h});
  }
  return s;
}

TEST(Anchors, DeterministicPerSeed) {
  Rng rng(3);
  const auto shapes = random_shapes(rng, 200);
  const AnchorFit a = fit_anchors(shapes, 5, 11);
  const AnchorFit b = fit_anchors(shapes, 5, 11);
  EXPECT_EQ(a.aspect_ratios, b.aspect_ratios);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Anchors, InertiaNeverIncreasesAcrossIterations) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto shapes = random_shapes(rng, 150);
    const AnchorFit fit = fit_anchors(shapes, 5, seed);
    ASSERT_EQ(fit.inertia_trace.size(), fit.iterations);
    for (std::size_t i = 1; i < fit.inertia_trace.size(); ++i) {
      EXPECT_LE(fit.inertia_trace[i], fit.inertia_trace[i - 1] * (1 + 1e-12) + 1e-15);
    }
    EXPECT_TRUE(std::is_sorted(fit.aspect_ratios.begin(), fit.aspect_ratios.end()));
  }
}

TEST(Anchors, InputOrderDoesNotMatter) {
  Rng rng(5);
  auto shapes = random_shapes(rng, 120);
  const AnchorFit a = fit_anchors(shapes, 4, 2);
  std::shuffle(shapes.begin(), shapes.end(), rng);
  const AnchorFit b = fit_anchors(shapes, 4, 2);
  EXPECT_EQ(a.aspect_ratios, b.aspect_ratios);
  EXPECT_EQ(a.scale, b.scale);
}

TEST(Anchors, RejectsBadInput) {
  const std::vector<BoxShape> two{{1, 1}, {2, 1}};
  EXPECT_THROW(fit_anchors(two, 0, 0), std::invalid_argument);
  EXPECT_THROW(fit_anchors(two, 3, 0), std::invalid_argument);
  const std::vector<BoxShape> flat{{1, 0}, {2, 1}};
  EXPECT_THROW(fit_anchors(flat, 1, 0), std::invalid_argument);
  AnchorFitOptions opt;
  opt.stride = 0.0;
  EXPECT_THROW(fit_anchors(two, 1, 0, opt), std::invalid_argument);
}

}  // namespace
}  // namespace subtext
