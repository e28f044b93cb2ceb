#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "subtext/config.hpp"

namespace subtext {
namespace {

using nlohmann::json;

TEST(Config, EmptyObjectGivesReferenceDefaults) {
  const RunConfig c = run_config_from_json(json::object());
  EXPECT_EQ(c.taxonomy.beta, 0.7);
  EXPECT_EQ(c.taxonomy.iou_low, 0.1);
  EXPECT_EQ(c.taxonomy.iou_mid, 0.5);
  EXPECT_EQ(c.thresholds, (std::vector<double>{0.5, 0.6, 0.7, 0.8}));
  EXPECT_EQ(c.nms_iou, 0.5);
  EXPECT_EQ(c.tau, 0.2);
  EXPECT_EQ(c.lambda, 0.01);
  EXPECT_EQ(c.relation.heads, 16u);
  EXPECT_EQ(c.relation.value_dim, 64u);
  EXPECT_EQ(c.relation.feature_dim, 1024u);
  EXPECT_EQ(c.stacked_blocks, 2u);
  EXPECT_EQ(c.projection.input_dim, 1024u);
  EXPECT_EQ(c.projection.output_dim, 128u);
  EXPECT_EQ(c.anchor_k, 5u);
}

TEST(Config, OverridesNestedKeys) {
  const RunConfig c = run_config_from_json(json::parse(R"({
    "taxonomy": {"beta": 0.8},
    "thresholds": [0.5, 0.9],
    "tau": 0.1,
    "synth": {"seed": 42, "images": 3},
    "anchors": {"k": 3, "stride": 8}
  })"));
  EXPECT_EQ(c.taxonomy.beta, 0.8);
  EXPECT_EQ(c.taxonomy.iou_mid, 0.5);
  EXPECT_EQ(c.thresholds.size(), 2u);
  EXPECT_EQ(c.tau, 0.1);
  EXPECT_EQ(c.synth.seed, 42u);
  EXPECT_EQ(c.synth.images, 3u);
  EXPECT_EQ(c.synth.jitter, SynthConfig{}.jitter);
  EXPECT_EQ(c.anchor_k, 3u);
  EXPECT_EQ(c.anchors.stride, 8.0);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(run_config_from_json(json::parse(R"({"betta": 0.7})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"taxonomy": {"alpha": 1}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"synth": {"fragments": 2}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse("[1, 2]")), ConfigError);
}

TEST(Config, RejectsBadValues) {
  for (const char* text : {
           R"({"taxonomy": {"beta": 1.0}})",
           R"({"taxonomy": {"iou_low": 0.6}})",
           R"({"thresholds": [0.7, 0.5]})",
           R"({"thresholds": [1.0]})",
           R"({"tau": 0})",
           R"({"lambda": -1})",
           R"({"nms_iou": 0})",
           R"({"relation": {"heads": 3}})",
           R"({"anchors": {"k": 0}})",
           R"({"synth": {"miss_prob": 2}})",
           R"({"tau": "fast"})",
       }) {
    EXPECT_THROW(run_config_from_json(json::parse(text)), ConfigError) << text;
  }
}

TEST(Config, SerializedFormReadsBack) {
  RunConfig c;
  c.taxonomy.beta = 0.75;
  c.synth.seed = 9;
  c.thresholds = {0.55, 0.65};
  const json j = json::parse(to_json(c).dump());
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, MissingFileIsAnError) {
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
}

}  // namespace
}  // namespace subtext
