#pragma once

// Labels a detection against the ground truths of its image as a fragment of
// one instance (sub-text), a whole instance (full-text), or neither.

#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "subtext/geometry.hpp"

namespace subtext {

enum class Label { SubText, FullText, Background };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::SubText: return "subtext";
    case Label::FullText: return "fulltext";
    case Label::Background: return "background";
  }
  return "background";
}

struct TaxonomyConfig {
  double beta = 0.7;     // IoF lower bound for sub-text (exclusive)
  double iou_low = 0.1;  // sub-text IoU lower bound (exclusive)
  double iou_mid = 0.5;  // full-text IoU lower bound (inclusive)

  void validate() const {
    if (!(0.0 <= iou_low && iou_low < iou_mid && iou_mid <= 1.0)) {
      throw std::invalid_argument("TaxonomyConfig: need 0 <= iou_low < iou_mid <= 1");
    }
    if (!(0.0 < beta && beta < 1.0)) {
      throw std::invalid_argument("TaxonomyConfig: need 0 < beta < 1");
    }
  }
};

struct LabeledProposal {
  Region shape;
  std::optional<double> score;
  Label label = Label::Background;
  std::optional<std::size_t> gt_index;
  double iou_max = 0.0;
  double iof_max = 0.0;
};

// FullText: iou >= iou_mid. SubText: iou_low < iou < iou_mid and iof > beta
// (iof == 1 included). Everything else is Background.
inline Label label_for(double iou_max, double iof_max, const TaxonomyConfig& config) {
  if (iou_max >= config.iou_mid) return Label::FullText;
  if (iou_max > config.iou_low && iof_max > config.beta) return Label::SubText;
  return Label::Background;
}

// IoF is measured against the argmax-IoU ground truth (lowest index on ties).
inline LabeledProposal classify(const Region& proposal, std::span<const Region> ground_truths,
                                const TaxonomyConfig& config,
                                std::optional<double> score = std::nullopt) {
  if (ground_truths.empty()) {
    throw std::invalid_argument("classify: ground-truth list is empty");
  }
  config.validate();
  LabeledProposal out;
  out.shape = proposal;
  out.score = score;
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    const double v = iou(proposal, ground_truths[g]);
    if (v > best_iou) {
      best_iou = v;
      best = g;
    }
  }
  out.iou_max = best_iou;
  out.iof_max = iof(proposal, ground_truths[best]);
  out.label = label_for(out.iou_max, out.iof_max, config);
  if (out.iou_max > 0.0 || out.label != Label::Background) out.gt_index = best;
  return out;
}

inline std::vector<LabeledProposal> classify_all(std::span<const Region> proposals,
                                                 std::span<const Region> ground_truths,
                                                 const TaxonomyConfig& config) {
  std::vector<LabeledProposal> out;
  out.reserve(proposals.size());
  for (const Region& p : proposals) out.push_back(classify(p, ground_truths, config));
  return out;
}

}  // namespace subtext
