#pragma once

// Synthetic detector output that breaks long text instances into fragments.
// Each ground truth is missed, detected whole (possibly truncated along its
// long axis, then jittered), or split into fragments that sit in disjoint
// cells of the long axis. Fragmentation becomes likelier as the aspect ratio
// grows. Background false positives are scattered at random.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "subtext/geometry.hpp"
#include "subtext/io.hpp"

namespace subtext {

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t images = 200;
  double image_width = 1280.0;
  double image_height = 720.0;
  std::size_t instances_min = 3;
  std::size_t instances_max = 10;
  double text_height_min = 12.0;
  double text_height_max = 64.0;
  double aspect_log_mean = 1.2;   // log(width / height) ~ N(mean, sigma)
  double aspect_log_sigma = 0.7;
  double aspect_max = 20.0;
  // p(aspect) = min + (max - min) * sigmoid((log aspect - log mid) / scale)
  double frag_prob_min = 0.02;
  double frag_prob_max = 0.4;
  double frag_aspect_mid = 5.0;
  double frag_aspect_scale = 0.5;
  std::size_t fragments_min = 2;
  std::size_t fragments_max = 4;
  double fragment_coverage_min = 0.6;  // fraction of its cell a fragment spans
  double fragment_coverage_max = 0.95;
  double truncation_min = 0.8;  // long-axis coverage of whole detections
  double jitter = 0.1;          // max per-edge displacement, fraction of side
  double miss_prob = 0.05;
  double ignore_prob = 0.05;
  double background_fp_mean = 1.0;  // Poisson rate per image
  double score_whole_min = 0.6, score_whole_max = 1.0;
  double score_fragment_min = 0.4, score_fragment_max = 0.9;
  double score_background_min = 0.3, score_background_max = 0.8;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("SynthConfig: ") + name + " must lie in [0, 1]");
    };
    auto range = [](double lo, double hi, const char* name) {
      if (!(lo <= hi)) throw std::invalid_argument(std::string("SynthConfig: empty range ") + name);
    };
    prob(frag_prob_min, "frag_prob_min");
    prob(frag_prob_max, "frag_prob_max");
    prob(miss_prob, "miss_prob");
    prob(ignore_prob, "ignore_prob");
    prob(jitter, "jitter");
    prob(truncation_min, "truncation_min");
    prob(fragment_coverage_min, "fragment_coverage_min");
    prob(fragment_coverage_max, "fragment_coverage_max");
    for (double s : {score_whole_min, score_whole_max, score_fragment_min, score_fragment_max,
                     score_background_min, score_background_max}) {
      prob(s, "score bound");
    }
    range(double(instances_min), double(instances_max), "instances");
    range(text_height_min, text_height_max, "text_height");
    range(double(fragments_min), double(fragments_max), "fragments");
    range(fragment_coverage_min, fragment_coverage_max, "fragment_coverage");
    range(score_whole_min, score_whole_max, "score_whole");
    range(score_fragment_min, score_fragment_max, "score_fragment");
    range(score_background_min, score_background_max, "score_background");
    if (fragments_min < 1) throw std::invalid_argument("SynthConfig: fragments_min must be >= 1");
    if (!(text_height_min > 0.0) || !(image_width > 0.0) || !(image_height > 0.0) ||
        !(aspect_max >= 1.0) || !(frag_aspect_mid > 0.0) || !(frag_aspect_scale > 0.0) ||
        !(aspect_log_sigma >= 0.0) || !(background_fp_mean >= 0.0) || fragment_coverage_min <= 0.0) {
      throw std::invalid_argument("SynthConfig: invalid size or rate parameter");
    }
  }

  double fragmentation_probability(double aspect) const {
    const double long_ratio = std::max(aspect, 1.0 / aspect);
    const double t = (std::log(long_ratio) - std::log(frag_aspect_mid)) / frag_aspect_scale;
    return frag_prob_min + (frag_prob_max - frag_prob_min) / (1.0 + std::exp(-t));
  }
};

struct SynthCorpus {
  std::vector<std::string> image_ids;
  std::vector<AnnotationRecord> annotations;
  std::vector<DetectionRecord> detections;
};

namespace detail {

inline double round3(double v) { return std::round(v * 1000.0) / 1000.0 + 0.0; }

inline AxisBox rounded_box(double x0, double y0, double x1, double y1) {
  return AxisBox(round3(x0), round3(y0), round3(x1), round3(y1));
}

class SynthSampler {
 public:
  explicit SynthSampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
  double normal(double mean, double sigma) {
    if (sigma == 0.0) return mean;
    return std::normal_distribution<double>(mean, sigma)(rng_);
  }
  std::size_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::size_t>(mean)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

// Moves each edge by up to `jitter` of the box side; keeps positive extent.
inline AxisBox jitter_box(const AxisBox& b, double jitter, SynthSampler& s) {
  const double w = b.width(), h = b.height();
  double x0 = b.x_min + s.uniform(-jitter, jitter) * w;
  double x1 = b.x_max + s.uniform(-jitter, jitter) * w;
  double y0 = b.y_min + s.uniform(-jitter, jitter) * h;
  double y1 = b.y_max + s.uniform(-jitter, jitter) * h;
  if (x1 - x0 < 0.1 * w) x1 = x0 + 0.1 * w;
  if (y1 - y0 < 0.1 * h) y1 = y0 + 0.1 * h;
  return rounded_box(x0, y0, x1, y1);
}

inline bool overlaps_with_margin(const AxisBox& a, const AxisBox& b, double margin) {
  return a.x_min - margin < b.x_max && b.x_min - margin < a.x_max &&
         a.y_min - margin < b.y_max && b.y_min - margin < a.y_max;
}

}  // namespace detail

inline SynthCorpus synth_corpus(const SynthConfig& config) {
  config.validate();
  detail::SynthSampler s(config.seed);
  SynthCorpus corpus;
  for (std::size_t img = 0; img < config.images; ++img) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "img_%04zu", img + 1);
    const std::string id = id_buf;
    corpus.image_ids.push_back(id);

    // Ground truths: non-overlapping boxes with a small margin.
    std::vector<AxisBox> gts;
    const std::size_t want = s.integer(config.instances_min, config.instances_max);
    for (std::size_t attempt = 0; gts.size() < want && attempt < want * 50; ++attempt) {
      const double h0 = s.uniform(config.text_height_min, config.text_height_max);
      double aspect = std::exp(s.normal(config.aspect_log_mean, config.aspect_log_sigma));
      aspect = std::clamp(aspect, 1.0 / config.aspect_max, config.aspect_max);
      double w = h0 * aspect, h = h0;
      if (aspect < 1.0) {  // vertical text: h0 is the short side
        w = h0;
        h = h0 / aspect;
      }
      if (w >= config.image_width || h >= config.image_height) continue;
      const double x = s.uniform(0.0, config.image_width - w);
      const double y = s.uniform(0.0, config.image_height - h);
      const AxisBox box = detail::rounded_box(x, y, x + w, y + h);
      const double margin = 0.25 * std::min(box.width(), box.height());
      const bool clash = std::any_of(gts.begin(), gts.end(), [&](const AxisBox& o) {
        return detail::overlaps_with_margin(box, o, margin);
      });
      if (!clash) gts.push_back(box);
    }

    for (const AxisBox& g : gts) {
      const bool ignore = s.bernoulli(config.ignore_prob);
      corpus.annotations.push_back(
          {id, Quad(g), std::string("Latin"), ignore ? std::string(kDontCareTranscription) : "text", ignore});

      if (s.bernoulli(config.miss_prob)) continue;
      const bool horizontal = g.width() >= g.height();
      const double aspect = g.width() / g.height();
      const double long_len = horizontal ? g.width() : g.height();
      const double long_start = horizontal ? g.x_min : g.y_min;

      auto along = [&](double a, double b) {  // long-axis interval -> box
        return horizontal ? AxisBox(a, g.y_min, b, g.y_max) : AxisBox(g.x_min, a, g.x_max, b);
      };

      if (s.bernoulli(config.fragmentation_probability(aspect))) {
        const std::size_t n = s.integer(config.fragments_min, config.fragments_max);
        const double cell = long_len / double(n);
        for (std::size_t k = 0; k < n; ++k) {
          const double cov = s.uniform(config.fragment_coverage_min, config.fragment_coverage_max);
          const double len = cov * cell;
          const double cell_start = long_start + double(k) * cell;
          const double start = cell_start + s.uniform(0.0, cell - len);
          // Long-axis jitter stays inside the cell; short-axis jitter is free.
          double a = start + s.uniform(-config.jitter, config.jitter) * len;
          double b = start + len + s.uniform(-config.jitter, config.jitter) * len;
          a = std::clamp(a, cell_start, cell_start + cell);
          b = std::clamp(b, cell_start, cell_start + cell);
          if (b - a < 0.25 * len) b = std::min(cell_start + cell, a + 0.25 * len);
          const double short_len = horizontal ? g.height() : g.width();
          const double c0 = (horizontal ? g.y_min : g.x_min) + s.uniform(-config.jitter, config.jitter) * short_len;
          const double c1 = (horizontal ? g.y_max : g.x_max) + s.uniform(-config.jitter, config.jitter) * short_len;
          const AxisBox frag = horizontal ? detail::rounded_box(a, c0, b, c1)
                                          : detail::rounded_box(c0, a, c1, b);
          const double score = detail::round3(
              s.uniform(config.score_fragment_min, config.score_fragment_max));
          corpus.detections.push_back({id, Quad(frag), score});
        }
      } else {
        const double cov = s.uniform(config.truncation_min, 1.0);
        const double start = long_start + s.uniform(0.0, (1.0 - cov) * long_len);
        const AxisBox whole = detail::jitter_box(along(start, start + cov * long_len), config.jitter, s);
        const double score =
            detail::round3(s.uniform(config.score_whole_min, config.score_whole_max));
        corpus.detections.push_back({id, Quad(whole), score});
      }
    }

    const std::size_t fps = s.poisson(config.background_fp_mean);
    for (std::size_t k = 0; k < fps; ++k) {
      const double h = s.uniform(config.text_height_min, config.text_height_max);
      const double w = h * std::exp(s.normal(config.aspect_log_mean, config.aspect_log_sigma));
      const double ww = std::min(w, config.image_width - 1.0);
      const double x = s.uniform(0.0, config.image_width - ww);
      const double y = s.uniform(0.0, config.image_height - h);
      const double score =
          detail::round3(s.uniform(config.score_background_min, config.score_background_max));
      corpus.detections.push_back({id, Quad(detail::rounded_box(x, y, x + ww, y + h)), score});
    }
  }
  return corpus;
}

// Writes <dir>/gt/<id>.txt and <dir>/det/<id>.txt (empty files included).
inline void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "gt", ec);
  std::filesystem::create_directories(dir / "det", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::map<std::string, std::vector<std::string>> gt_lines, det_lines;
  for (const auto& id : corpus.image_ids) {
    gt_lines[id];
    det_lines[id];
  }
  for (const auto& a : corpus.annotations) gt_lines[a.image_id].push_back(format_gt_line(a));
  for (const auto& d : corpus.detections) det_lines[d.image_id].push_back(format_detection_line(d));
  for (const auto& [id, lines] : gt_lines) write_lines(dir / "gt" / (id + ".txt"), lines);
  for (const auto& [id, lines] : det_lines) write_lines(dir / "det" / (id + ".txt"), lines);
}

inline std::vector<ImageSample> to_samples(const SynthCorpus& corpus) {
  Ingested<AnnotationRecord> gt;
  Ingested<DetectionRecord> det;
  for (const auto& id : corpus.image_ids) {
    gt.images[id];
    det.images[id];
  }
  for (const auto& a : corpus.annotations) gt.images[a.image_id].push_back(a);
  for (const auto& d : corpus.detections) det.images[d.image_id].push_back(d);
  return to_samples(gt, det);
}

}  // namespace subtext
