#pragma once

// Prior anchor fitting: 1-D k-means over log(width / height) of the training
// boxes, plus a single scale from the median box size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace subtext {

struct BoxShape {
  double width = 0.0;
  double height = 0.0;
};

struct AnchorFit {
  double scale = 0.0;
  std::vector<double> aspect_ratios;  // ascending, width / height
  double inertia = 0.0;               // in log-ratio space
  std::size_t iterations = 0;
  std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

struct AnchorFitOptions {
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;
  double stride = 1.0;  // scale = median sqrt(w*h) / stride
};

namespace detail {

inline std::size_t nearest(double x, const std::vector<double>& centroids) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = (x - centroids[c]) * (x - centroids[c]);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

inline double kmeans_inertia(const std::vector<double>& xs, const std::vector<double>& centroids) {
  double s = 0.0;
  for (double x : xs) {
    const double c = centroids[nearest(x, centroids)];
    s += (x - c) * (x - c);
  }
  return s;
}

}  // namespace detail

inline AnchorFit fit_anchors(std::span<const BoxShape> shapes, std::size_t k, std::uint64_t seed,
                             const AnchorFitOptions& options = {}) {
  if (k == 0) throw std::invalid_argument("fit_anchors: k must be positive");
  if (shapes.size() < k) throw std::invalid_argument("fit_anchors: fewer shapes than clusters");
  if (!(options.stride > 0.0)) throw std::invalid_argument("fit_anchors: stride must be positive");

  std::vector<double> xs;
  std::vector<double> sizes;
  xs.reserve(shapes.size());
  for (const BoxShape& s : shapes) {
    if (!(s.width > 0.0) || !(s.height > 0.0)) {
      throw std::invalid_argument("fit_anchors: box shape with non-positive side");
    }
    xs.push_back(std::log(s.width / s.height));
    sizes.push_back(std::sqrt(s.width * s.height));
  }
  // Canonical order so the seeded initialisation ignores input order.
  std::sort(xs.begin(), xs.end());
  std::sort(sizes.begin(), sizes.end());

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<double> centroids;
  centroids.push_back(xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)]);
  std::vector<double> d2(xs.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double c = centroids[detail::nearest(xs[i], centroids)];
      total += (d2[i] = (xs[i] - c) * (xs[i] - c));
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < xs.size(); ++pick) {
        if (u < d2[pick]) break;
        u -= d2[pick];
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng);
    }
    centroids.push_back(xs[pick]);
  }

  AnchorFit fit;
  std::vector<std::size_t> assign(xs.size());
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    for (std::size_t i = 0; i < xs.size(); ++i) assign[i] = detail::nearest(xs[i], centroids);
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sum[assign[i]] += xs[i];
      ++count[assign[i]];
    }
    std::vector<double> next(k);
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) next[c] = sum[c] / static_cast<double>(count[c]);
    }
    // Empty cluster: reseed at the point farthest from its assigned centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) continue;
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = std::abs(xs[i] - next[assign[i]]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      next[c] = xs[far];
      count[c] = 1;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::abs(next[c] - centroids[c]));
    centroids = std::move(next);
    fit.inertia_trace.push_back(detail::kmeans_inertia(xs, centroids));
    fit.iterations = it + 1;
    if (shift <= options.tolerance) break;
  }

  std::sort(centroids.begin(), centroids.end());
  for (double c : centroids) fit.aspect_ratios.push_back(std::exp(c));
  fit.inertia = detail::kmeans_inertia(xs, centroids);

  const std::size_t n = sizes.size();
  const double median = n % 2 == 1 ? sizes[n / 2] : 0.5 * (sizes[n / 2 - 1] + sizes[n / 2]);
  fit.scale = median / options.stride;
  return fit;
}

}  // namespace subtext
