#pragma once

// Run configuration. Every tunable constant has a named JSON key whose
// default is the reference value; missing keys take their default and
// unknown keys are rejected.

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subtext/anchors.hpp"
#include "subtext/contrastive.hpp"
#include "subtext/relation.hpp"
#include "subtext/synth.hpp"
#include "subtext/taxonomy.hpp"

namespace subtext {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  TaxonomyConfig taxonomy{};
  std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8};
  double nms_iou = 0.5;
  double tau = 0.2;
  double lambda = 0.01;
  RelationConfig relation{};
  std::size_t stacked_blocks = 2;
  ProjectionHeadConfig projection{};
  std::size_t anchor_k = 5;
  AnchorFitOptions anchors{};
  SynthConfig synth{};
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!k.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::read;
  RunConfig c;
  detail::reject_unknown(j, {"taxonomy", "thresholds", "nms_iou", "tau", "lambda", "relation",
                             "stacked_blocks", "projection", "anchors", "synth"},
                         "config");
  if (j.contains("taxonomy")) {
    const auto& t = j.at("taxonomy");
    detail::reject_unknown(t, {"beta", "iou_low", "iou_mid"}, "taxonomy");
    read(t, "beta", c.taxonomy.beta);
    read(t, "iou_low", c.taxonomy.iou_low);
    read(t, "iou_mid", c.taxonomy.iou_mid);
  }
  read(j, "thresholds", c.thresholds);
  read(j, "nms_iou", c.nms_iou);
  read(j, "tau", c.tau);
  read(j, "lambda", c.lambda);
  read(j, "stacked_blocks", c.stacked_blocks);
  if (j.contains("relation")) {
    const auto& r = j.at("relation");
    detail::reject_unknown(r, {"feature_dim", "heads", "value_dim", "key_dim", "geometry_dim",
                               "wave_base", "position_scale"},
                           "relation");
    read(r, "feature_dim", c.relation.feature_dim);
    read(r, "heads", c.relation.heads);
    read(r, "value_dim", c.relation.value_dim);
    read(r, "key_dim", c.relation.key_dim);
    read(r, "geometry_dim", c.relation.geometry.dim);
    read(r, "wave_base", c.relation.geometry.wave_base);
    read(r, "position_scale", c.relation.geometry.position_scale);
  }
  if (j.contains("projection")) {
    const auto& p = j.at("projection");
    detail::reject_unknown(p, {"input_dim", "hidden_dim", "output_dim"}, "projection");
    read(p, "input_dim", c.projection.input_dim);
    read(p, "hidden_dim", c.projection.hidden_dim);
    read(p, "output_dim", c.projection.output_dim);
  }
  if (j.contains("anchors")) {
    const auto& a = j.at("anchors");
    detail::reject_unknown(a, {"k", "max_iterations", "tolerance", "stride"}, "anchors");
    read(a, "k", c.anchor_k);
    read(a, "max_iterations", c.anchors.max_iterations);
    read(a, "tolerance", c.anchors.tolerance);
    read(a, "stride", c.anchors.stride);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    auto& y = c.synth;
    detail::reject_unknown(
        s,
        {"seed", "images", "image_width", "image_height", "instances_min", "instances_max",
         "text_height_min", "text_height_max", "aspect_log_mean", "aspect_log_sigma",
         "aspect_max", "frag_prob_min", "frag_prob_max", "frag_aspect_mid", "frag_aspect_scale",
         "fragments_min", "fragments_max", "fragment_coverage_min", "fragment_coverage_max",
         "truncation_min", "jitter", "miss_prob", "ignore_prob", "background_fp_mean",
         "score_whole_min", "score_whole_max", "score_fragment_min", "score_fragment_max",
         "score_background_min", "score_background_max"},
        "synth");
    read(s, "seed", y.seed);
    read(s, "images", y.images);
    read(s, "image_width", y.image_width);
    read(s, "image_height", y.image_height);
    read(s, "instances_min", y.instances_min);
    read(s, "instances_max", y.instances_max);
    read(s, "text_height_min", y.text_height_min);
    read(s, "text_height_max", y.text_height_max);
    read(s, "aspect_log_mean", y.aspect_log_mean);
    read(s, "aspect_log_sigma", y.aspect_log_sigma);
    read(s, "aspect_max", y.aspect_max);
    read(s, "frag_prob_min", y.frag_prob_min);
    read(s, "frag_prob_max", y.frag_prob_max);
    read(s, "frag_aspect_mid", y.frag_aspect_mid);
    read(s, "frag_aspect_scale", y.frag_aspect_scale);
    read(s, "fragments_min", y.fragments_min);
    read(s, "fragments_max", y.fragments_max);
    read(s, "fragment_coverage_min", y.fragment_coverage_min);
    read(s, "fragment_coverage_max", y.fragment_coverage_max);
    read(s, "truncation_min", y.truncation_min);
    read(s, "jitter", y.jitter);
    read(s, "miss_prob", y.miss_prob);
    read(s, "ignore_prob", y.ignore_prob);
    read(s, "background_fp_mean", y.background_fp_mean);
    read(s, "score_whole_min", y.score_whole_min);
    read(s, "score_whole_max", y.score_whole_max);
    read(s, "score_fragment_min", y.score_fragment_min);
    read(s, "score_fragment_max", y.score_fragment_max);
    read(s, "score_background_min", y.score_background_min);
    read(s, "score_background_max", y.score_background_max);
  }

  try {
    c.taxonomy.validate();
    validate_thresholds(c.thresholds);
    c.relation.validate();
    c.synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(c.nms_iou > 0.0 && c.nms_iou <= 1.0)) throw ConfigError("nms_iou must lie in (0, 1]");
  if (!(c.tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(c.lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (c.anchor_k == 0) throw ConfigError("anchors.k must be positive");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

inline nlohmann::ordered_json to_json(const SynthConfig& y) {
  return {{"seed", y.seed},
          {"images", y.images},
          {"image_width", y.image_width},
          {"image_height", y.image_height},
          {"instances_min", y.instances_min},
          {"instances_max", y.instances_max},
          {"text_height_min", y.text_height_min},
          {"text_height_max", y.text_height_max},
          {"aspect_log_mean", y.aspect_log_mean},
          {"aspect_log_sigma", y.aspect_log_sigma},
          {"aspect_max", y.aspect_max},
          {"frag_prob_min", y.frag_prob_min},
          {"frag_prob_max", y.frag_prob_max},
          {"frag_aspect_mid", y.frag_aspect_mid},
          {"frag_aspect_scale", y.frag_aspect_scale},
          {"fragments_min", y.fragments_min},
          {"fragments_max", y.fragments_max},
          {"fragment_coverage_min", y.fragment_coverage_min},
          {"fragment_coverage_max", y.fragment_coverage_max},
          {"truncation_min", y.truncation_min},
          {"jitter", y.jitter},
          {"miss_prob", y.miss_prob},
          {"ignore_prob", y.ignore_prob},
          {"background_fp_mean", y.background_fp_mean},
          {"score_whole_min", y.score_whole_min},
          {"score_whole_max", y.score_whole_max},
          {"score_fragment_min", y.score_fragment_min},
          {"score_fragment_max", y.score_fragment_max},
          {"score_background_min", y.score_background_min},
          {"score_background_max", y.score_background_max}};
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  return {{"taxonomy",
           {{"beta", c.taxonomy.beta}, {"iou_low", c.taxonomy.iou_low}, {"iou_mid", c.taxonomy.iou_mid}}},
          {"thresholds", c.thresholds},
          {"nms_iou", c.nms_iou},
          {"tau", c.tau},
          {"lambda", c.lambda},
          {"relation",
           {{"feature_dim", c.relation.feature_dim},
            {"heads", c.relation.heads},
            {"value_dim", c.relation.value_dim},
            {"key_dim", c.relation.key_dim},
            {"geometry_dim", c.relation.geometry.dim},
            {"wave_base", c.relation.geometry.wave_base},
            {"position_scale", c.relation.geometry.position_scale}}},
          {"stacked_blocks", c.stacked_blocks},
          {"projection",
           {{"input_dim", c.projection.input_dim},
            {"hidden_dim", c.projection.hidden_dim},
            {"output_dim", c.projection.output_dim}}},
          {"anchors",
           {{"k", c.anchor_k},
            {"max_iterations", c.anchors.max_iterations},
            {"tolerance", c.anchors.tolerance},
            {"stride", c.anchors.stride}}},
          {"synth", to_json(c.synth)}};
}

}  // namespace subtext
