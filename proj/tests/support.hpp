#pragma once

// Shared fixtures and random generators for the unit tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "subtext/geometry.hpp"

namespace subtext::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline AxisBox random_box(Rng& rng, double extent = 100.0) {
  const double x = uniform(rng, 0, extent), y = uniform(rng, 0, extent);
  return AxisBox(x, y, x + uniform(rng, 1, extent / 2), y + uniform(rng, 1, extent / 2));
}

// Convex quad: four sorted angles on an ellipse, rotated and translated.
inline Quad random_quad(Rng& rng, double extent = 100.0) {
  std::vector<double> angles(4);
  for (double& a : angles) a = uniform(rng, 0, 2 * std::numbers::pi);
  std::sort(angles.begin(), angles.end());
  const double rx = uniform(rng, 2, extent / 3), ry = uniform(rng, 2, extent / 3);
  const double cx = uniform(rng, 0, extent), cy = uniform(rng, 0, extent);
  const double rot = uniform(rng, 0, std::numbers::pi);
  std::array<Point, 4> v;
  for (int i = 0; i < 4; ++i) {
    const double px = rx * std::cos(angles[i]), py = ry * std::sin(angles[i]);
    v[i] = {cx + px * std::cos(rot) - py * std::sin(rot), cy + px * std::sin(rot) + py * std::cos(rot)};
  }
  return Quad(v);
}

inline double min_side(const Region& r) {
  const AxisBox b = bounding_box(r);
  return std::min(b.width(), b.height());
}

}  // namespace subtext::testing

namespace subtext::testing {

// Two text instances, each with one fragment and one whole detection.
struct TwoInstanceScene {
  std::vector<Region> gts{AxisBox(0, 0, 100, 20), AxisBox(200, 0, 300, 20)};
  std::vector<Region> proposals{AxisBox(0, 0, 30, 20), AxisBox(5, 0, 100, 20),
                                AxisBox(260, 0, 300, 20), AxisBox(200, 0, 298, 20)};
};

}  // namespace subtext::testing
