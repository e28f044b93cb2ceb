#pragma once

// JSON reports. Layout (schema in docs/report.schema.json):
//   {schema_version, command, config, per_threshold: [...], mining_report?,
//    anchor_fit?, gradcheck?}

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subtext/anchors.hpp"
#include "subtext/config.hpp"
#include "subtext/contrastive.hpp"
#include "subtext/evalsuite.hpp"

namespace subtext {

inline constexpr int kReportSchemaVersion = 1;

using Json = nlohmann::ordered_json;

inline Json to_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"hmean", m.hmean},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
}

inline Json to_json(const SubTextReport& r) {
  Json j{{"bad_case_count", r.bad_case_count},
         {"subtext_count", r.subtext_count},
         {"fulltext_count", r.fulltext_count},
         {"background_count", r.background_count}};
  const auto f = r.frequency();
  j["frequency"] = f ? Json(*f) : Json(nullptr);
  return j;
}

inline Json to_json(const UpperBound& u) {
  return {{"before", to_json(u.before)},
          {"after", to_json(u.after)},
          {"hmean_gain", u.after.hmean - u.before.hmean},
          {"substituted", u.substituted},
          {"deduplicated", u.deduplicated}};
}

inline Json to_json(const ThresholdResult& t) {
  return {{"threshold", t.threshold},
          {"metrics", to_json(t.metrics)},
          {"subtext_report", to_json(t.subtext)},
          {"upper_bound", to_json(t.upper_bound)}};
}

inline Json to_json(const AnchorFit& a) {
  return {{"scale", a.scale},
          {"aspect_ratios", a.aspect_ratios},
          {"inertia", a.inertia},
          {"iterations", a.iterations}};
}

inline Json to_json(const MiningReport& m) {
  return {{"queries", m.queries},
          {"positives", m.positives},
          {"negatives", m.negatives},
          {"dropped_queries", m.dropped_queries},
          {"queries_without_negatives", m.queries_without_negatives}};
}

struct ReportContent {
  std::string command;
  std::vector<ThresholdResult> per_threshold;
  std::optional<MiningReport> mining;
  std::optional<AnchorFit> anchor_fit;
  std::optional<Json> gradcheck;
};

inline Json make_report(const RunConfig& config, const ReportContent& content) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = content.command;
  j["config"] = to_json(config);
  Json rows = Json::array();
  for (const auto& t : content.per_threshold) rows.push_back(to_json(t));
  j["per_threshold"] = std::move(rows);
  if (content.mining) j["mining_report"] = to_json(*content.mining);
  if (content.anchor_fit) j["anchor_fit"] = to_json(*content.anchor_fit);
  if (content.gradcheck) j["gradcheck"] = *content.gradcheck;
  return j;
}

// Tabular sweep: one row per threshold.
inline std::string sweep_csv(const std::vector<ThresholdResult>& rows) {
  std::string out =
      "threshold,precision,recall,hmean,tp,fp,fn,bad_cases,subtexts,frequency,"
      "ub_precision,ub_recall,ub_hmean\n";
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    const auto f = r.subtext.frequency();
    out += num(r.threshold) + ',' + num(r.metrics.precision) + ',' + num(r.metrics.recall) + ',' +
           num(r.metrics.hmean) + ',' + std::to_string(r.metrics.tp) + ',' +
           std::to_string(r.metrics.fp) + ',' + std::to_string(r.metrics.fn) + ',' +
           std::to_string(r.subtext.bad_case_count) + ',' + std::to_string(r.subtext.subtext_count) +
           ',' + (f ? num(*f) : std::string()) + ',' + num(r.upper_bound.after.precision) + ',' +
           num(r.upper_bound.after.recall) + ',' + num(r.upper_bound.after.hmean) + '\n';
  }
  return out;
}

}  // namespace subtext
