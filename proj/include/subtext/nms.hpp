#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "subtext/evalsuite.hpp"
#include "subtext/geometry.hpp"

namespace subtext {

// Greedy box NMS: walk detections by descending score (ties in input order),
// keep one unless it overlaps an already kept detection at IoU >= threshold.
// Returns kept indices in visiting order.
inline std::vector<std::size_t> nms(std::span<const Detection> detections,
                                    double iou_threshold = 0.5) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(detections[i].shape, detections[k].shape) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

inline std::vector<Detection> nms_filter(std::span<const Detection> detections,
                                         double iou_threshold = 0.5) {
  std::vector<Detection> out;
  for (std::size_t i : nms(detections, iou_threshold)) out.push_back(detections[i]);
  return out;
}

}  // namespace subtext
