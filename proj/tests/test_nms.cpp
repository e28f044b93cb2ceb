#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "subtext/nms.hpp"
#include "support.hpp"

namespace subtext {
namespace {

using testing::Rng;
using testing::uniform;

// Reference: repeatedly take the highest-scoring surviving box (earliest on
// ties), then strike out every survivor overlapping it.
std::vector<std::size_t> reference_nms(const std::vector<Detection>& dets, double t) {
  std::vector<bool> alive(dets.size(), true);
  std::vector<std::size_t> kept;
  for (;;) {
    std::size_t best = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && (best == dets.size() || dets[i].score > dets[best].score)) best = i;
    }
    if (best == dets.size()) return kept;
    kept.push_back(best);
    alive[best] = false;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && iou(dets[i].shape, dets[best].shape) >= t) alive[i] = false;
    }
  }
}

TEST(Nms, IdenticalBoxesKeepHigherScore) {
  const std::vector<Detection> d{{AxisBox(0, 0, 10, 10), 0.8}, {AxisBox(0, 0, 10, 10), 0.9}};
  EXPECT_EQ(nms(d), (std::vector<std::size_t>{1}));
}

TEST(Nms, DisjointBoxesBothKept) {
  const std::vector<Detection> d{{AxisBox(0, 0, 10, 10), 0.9}, {AxisBox(20, 0, 30, 10), 0.8}};
  EXPECT_EQ(nms(d), (std::vector<std::size_t>{0, 1}));
}

TEST(Nms, TiesKeepInputOrder) {
  const std::vector<Detection> d{{AxisBox(0, 0, 10, 10), 0.5}, {AxisBox(1, 0, 11, 10), 0.5}};
  EXPECT_EQ(nms(d), (std::vector<std::size_t>{0}));
}

TEST(Nms, ThresholdIsInclusive) {
  const std::vector<Detection> e{{AxisBox(0, 0, 20, 10), 0.9}, {AxisBox(0, 0, 10, 10), 0.8}};
  EXPECT_DOUBLE_EQ(iou(e[0].shape, e[1].shape), 0.5);
  EXPECT_EQ(nms(e, 0.5).size(), 1u);
  EXPECT_EQ(nms(e, 0.51).size(), 2u);
}

TEST(Nms, ChainOfFive) {
  // Neighbours overlap with IoU 0.6; next-but-one neighbours with IoU 0.25.
  std::vector<Detection> d;
  const double scores[] = {0.7, 0.9, 0.6, 0.8, 0.5};
  for (int i = 0; i < 5; ++i) d.push_back({AxisBox(i * 10.0, 0, i * 10.0 + 40, 10), scores[i]});
  EXPECT_NEAR(iou(d[0].shape, d[1].shape), 0.6, 1e-12);
  const auto kept = nms(d);
  EXPECT_EQ(kept, reference_nms(d, 0.5));
  EXPECT_EQ(kept, (std::vector<std::size_t>{1, 3}));
}

TEST(Nms, MatchesReferenceOnRandomSets) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<Detection> d;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so ties occur.
      d.push_back({testing::random_box(rng, 40), std::round(uniform(rng, 0, 1) * 4) / 4});
    }
    const double t = uniform(rng, 0.2, 0.8);
    ASSERT_EQ(nms(d, t), reference_nms(d, t)) << "trial " << trial;
  }
}

TEST(Nms, FilterKeepsDetections) {
  const std::vector<Detection> d{{AxisBox(0, 0, 10, 10), 0.8}, {AxisBox(0, 0, 10, 10), 0.9}};
  const auto kept = nms_filter(d);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);
}

}  // namespace
}  // namespace subtext
