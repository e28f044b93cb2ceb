#pragma once

// ICDAR-style detection evaluation plus the sub-text diagnostics built on
// top of it: bad-case labelling and the ground-truth substitution bound.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "subtext/geometry.hpp"
#include "subtext/taxonomy.hpp"

namespace subtext {

struct Detection {
  Region shape;
  double score = 1.0;
};

struct GroundTruth {
  Region shape;
  bool ignore = false;  // "###" don't-care region
};

// A detection covering more than this fraction of its area with a don't-care
// region is excluded from scoring.
inline constexpr double kDontCareIof = 0.5;

struct MatchedPair {
  std::size_t detection = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> matches;
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::size_t> unmatched_gts;
  std::vector<std::size_t> ignored_detections;
  std::vector<std::size_t> ignored_gts;
};

struct Metrics {
  double precision = 1.0;
  double recall = 1.0;
  double hmean = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

inline double harmonic_mean(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.hmean = harmonic_mean(m.precision, m.recall);
  return m;
}

inline Metrics compute_metrics(const MatchResult& match) {
  return metrics_from_counts(match.matches.size(), match.unmatched_detections.size(),
                             match.unmatched_gts.size());
}

// Score-descending greedy one-to-one matching (ties keep input order). Each
// detection takes the highest-IoU free ground truth at or above the
// threshold, lowest index on ties.
inline MatchResult match_detections(std::span<const Detection> detections,
                                    std::span<const GroundTruth> ground_truths,
                                    double iou_threshold) {
  MatchResult out;
  std::vector<std::size_t> scored;
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    if (ground_truths[g].ignore) out.ignored_gts.push_back(g);
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    bool ignored = false;
    if (area(detections[d].shape) > 0.0) {
      for (std::size_t g : out.ignored_gts) {
        if (iof(detections[d].shape, ground_truths[g].shape) > kDontCareIof) {
          ignored = true;
          break;
        }
      }
    }
    if (ignored) {
      out.ignored_detections.push_back(d);
    } else {
      scored.push_back(d);
    }
  }
  std::stable_sort(scored.begin(), scored.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<bool> taken(ground_truths.size(), false);
  std::vector<bool> matched(detections.size(), false);
  for (std::size_t d : scored) {
    std::optional<std::size_t> best;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (taken[g] || ground_truths[g].ignore) continue;
      const double v = iou(detections[d].shape, ground_truths[g].shape);
      if (v >= iou_threshold && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best) {
      taken[*best] = true;
      matched[d] = true;
      out.matches.push_back({d, *best, best_iou});
    }
  }
  for (std::size_t d : scored) {
    if (!matched[d]) out.unmatched_detections.push_back(d);
  }
  std::sort(out.unmatched_detections.begin(), out.unmatched_detections.end());
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    if (!taken[g] && !ground_truths[g].ignore) out.unmatched_gts.push_back(g);
  }
  return out;
}

struct BadCase {
  std::size_t detection = 0;
  LabeledProposal labeled;
};

struct SubTextReport {
  std::size_t bad_case_count = 0;
  std::size_t subtext_count = 0;
  std::size_t fulltext_count = 0;
  std::size_t background_count = 0;
  std::vector<BadCase> cases;  // per-image only; not kept when merging

  // Absent when there are no bad cases.
  std::optional<double> frequency() const {
    if (bad_case_count == 0) return std::nullopt;
    return static_cast<double>(subtext_count) / static_cast<double>(bad_case_count);
  }

  void merge(const SubTextReport& other) {
    bad_case_count += other.bad_case_count;
    subtext_count += other.subtext_count;
    fulltext_count += other.fulltext_count;
    background_count += other.background_count;
  }
};

namespace detail {

inline std::vector<std::size_t> scored_gt_indices(std::span<const GroundTruth> gts) {
  std::vector<std::size_t> idx;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gts[g].ignore) idx.push_back(g);
  }
  return idx;
}

inline std::vector<Region> regions_of(std::span<const GroundTruth> gts,
                                      const std::vector<std::size_t>& idx) {
  std::vector<Region> out;
  out.reserve(idx.size());
  for (std::size_t g : idx) out.push_back(gts[g].shape);
  return out;
}

// Labels against the scored (non-ignored) ground truths; gt_index refers to
// the original ground-truth list. No scored ground truth, or a zero-area
// detection, means Background.
inline LabeledProposal label_detection(const Detection& det,
                                       const std::vector<std::size_t>& scored_idx,
                                       const std::vector<Region>& scored_regions,
                                       const TaxonomyConfig& config) {
  if (scored_regions.empty() || !(area(det.shape) > 0.0)) {
    LabeledProposal lp;
    lp.shape = det.shape;
    lp.score = det.score;
    return lp;
  }
  LabeledProposal lp = classify(det.shape, scored_regions, config, det.score);
  if (lp.gt_index) lp.gt_index = scored_idx[*lp.gt_index];
  return lp;
}

}  // namespace detail

// Bad cases are the unmatched, non-ignored detections.
inline SubTextReport collect_bad_cases(const MatchResult& match,
                                       std::span<const Detection> detections,
                                       std::span<const GroundTruth> ground_truths,
                                       const TaxonomyConfig& config) {
  config.validate();
  const auto idx = detail::scored_gt_indices(ground_truths);
  const auto regions = detail::regions_of(ground_truths, idx);
  SubTextReport report;
  for (std::size_t d : match.unmatched_detections) {
    LabeledProposal lp = detail::label_detection(detections[d], idx, regions, config);
    ++report.bad_case_count;
    switch (lp.label) {
      case Label::SubText: ++report.subtext_count; break;
      case Label::FullText: ++report.fulltext_count; break;
      case Label::Background: ++report.background_count; break;
    }
    report.cases.push_back({d, std::move(lp)});
  }
  return report;
}

struct UpperBound {
  Metrics before;
  Metrics after;
  std::size_t substituted = 0;   // detections labelled sub-text
  std::size_t deduplicated = 0;  // substitutes dropped as duplicates
};

// Replaces every sub-text detection by the shape of its argmax-IoU ground
// truth (score kept). Substitutes sharing a target collapse to the one with
// the highest score.
inline std::vector<Detection> substitute_subtexts(std::span<const Detection> detections,
                                                  std::span<const GroundTruth> ground_truths,
                                                  const TaxonomyConfig& config,
                                                  std::size_t* substituted = nullptr,
                                                  std::size_t* deduplicated = nullptr) {
  config.validate();
  const auto idx = detail::scored_gt_indices(ground_truths);
  const auto regions = detail::regions_of(ground_truths, idx);

  std::vector<std::optional<std::size_t>> target(detections.size());
  std::map<std::size_t, std::size_t> keeper;  // gt -> winning detection
  std::size_t n_sub = 0;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (regions.empty() || !(area(detections[d].shape) > 0.0)) continue;
    const LabeledProposal lp = detail::label_detection(detections[d], idx, regions, config);
    if (lp.label != Label::SubText) continue;
    ++n_sub;
    target[d] = *lp.gt_index;
    auto [it, inserted] = keeper.emplace(*lp.gt_index, d);
    if (!inserted && detections[d].score > detections[it->second].score) it->second = d;
  }

  std::vector<Detection> out;
  out.reserve(detections.size());
  std::size_t dropped = 0;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!target[d]) {
      out.push_back(detections[d]);
    } else if (keeper.at(*target[d]) == d) {
      out.push_back({ground_truths[*target[d]].shape, detections[d].score});
    } else {
      ++dropped;
    }
  }
  if (substituted) *substituted = n_sub;
  if (deduplicated) *deduplicated = dropped;
  return out;
}

inline UpperBound upper_bound_metrics(std::span<const Detection> detections,
                                      std::span<const GroundTruth> ground_truths,
                                      const TaxonomyConfig& config, double iou_threshold) {
  UpperBound ub;
  ub.before = compute_metrics(match_detections(detections, ground_truths, iou_threshold));
  const auto edited =
      substitute_subtexts(detections, ground_truths, config, &ub.substituted, &ub.deduplicated);
  ub.after = compute_metrics(match_detections(edited, ground_truths, iou_threshold));
  return ub;
}

// Under a stricter evaluation threshold t a detection with IoU in [iou_mid, t)
// is a miss, so the full-text bound follows the threshold.
inline TaxonomyConfig config_for_threshold(TaxonomyConfig config, double iou_threshold) {
  config.iou_mid = std::max(config.iou_mid, iou_threshold);
  return config;
}

struct ImageSample {
  std::string id;
  std::vector<Detection> detections;
  std::vector<GroundTruth> ground_truths;
};

struct ThresholdResult {
  double threshold = 0.0;
  Metrics metrics;
  SubTextReport subtext;
  UpperBound upper_bound;
};

inline void validate_thresholds(std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) {
      throw std::invalid_argument("threshold_sweep: thresholds must lie in (0, 1)");
    }
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw std::invalid_argument("threshold_sweep: thresholds must be strictly increasing");
    }
  }
}

// Corpus-level sweep. Counts are summed over images before forming ratios,
// so the result does not depend on image order.
inline std::vector<ThresholdResult> corpus_threshold_sweep(std::span<const ImageSample> images,
                                                           const TaxonomyConfig& config,
                                                           std::span<const double> thresholds) {
  config.validate();
  validate_thresholds(thresholds);
  std::vector<ThresholdResult> out;
  for (double t : thresholds) {
    const TaxonomyConfig cfg = config_for_threshold(config, t);
    std::size_t tp = 0, fp = 0, fn = 0;
    std::size_t atp = 0, afp = 0, afn = 0;
    ThresholdResult r;
    r.threshold = t;
    for (const ImageSample& img : images) {
      const MatchResult m = match_detections(img.detections, img.ground_truths, t);
      tp += m.matches.size();
      fp += m.unmatched_detections.size();
      fn += m.unmatched_gts.size();
      r.subtext.merge(collect_bad_cases(m, img.detections, img.ground_truths, cfg));
      const UpperBound ub = upper_bound_metrics(img.detections, img.ground_truths, cfg, t);
      atp += ub.after.tp;
      afp += ub.after.fp;
      afn += ub.after.fn;
      r.upper_bound.substituted += ub.substituted;
      r.upper_bound.deduplicated += ub.deduplicated;
    }
    r.metrics = metrics_from_counts(tp, fp, fn);
    r.upper_bound.before = r.metrics;
    r.upper_bound.after = metrics_from_counts(atp, afp, afn);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ThresholdResult> threshold_sweep(std::span<const Detection> detections,
                                                    std::span<const GroundTruth> ground_truths,
                                                    const TaxonomyConfig& config,
                                                    std::span<const double> thresholds) {
  const ImageSample one{"", {detections.begin(), detections.end()},
                        {ground_truths.begin(), ground_truths.end()}};
  return corpus_threshold_sweep(std::span<const ImageSample>(&one, 1), config, thresholds);
}

}  // namespace subtext
