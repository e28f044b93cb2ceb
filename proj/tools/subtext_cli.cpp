// subtext: sub-text analysis and reference-mechanism checks.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 gradcheck failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subtext/anchors.hpp"
#include "subtext/config.hpp"
#include "subtext/contrastive.hpp"
#include "subtext/evalsuite.hpp"
#include "subtext/gradcheck.hpp"
#include "subtext/io.hpp"
#include "subtext/nms.hpp"
#include "subtext/report.hpp"
#include "subtext/synth.hpp"

namespace fs = std::filesystem;
using namespace subtext;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitGradcheck = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string gt, det;
  std::optional<double> beta;
  std::vector<double> thresholds;
  std::string out, csv, out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t k = 5;
  std::optional<double> stride;
  std::optional<double> iou;
  std::size_t seeds = 10;
};

RunConfig load_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.beta) {
    if (!(*o.beta > 0.0 && *o.beta < 1.0)) throw UsageError("--beta must lie in (0, 1)");
    c.taxonomy.beta = *o.beta;
  }
  if (!o.thresholds.empty()) {
    try {
      validate_thresholds(o.thresholds);
    } catch (const std::invalid_argument&) {
      throw UsageError("--thresholds must be strictly increasing values in (0, 1)");
    }
    c.thresholds = o.thresholds;
  }
  return c;
}

void warn_line_errors(const std::vector<LineError>& errors) {
  for (const auto& e : errors) std::cerr << "warning: " << e.file << ':' << e.line << ": " << e.message << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

void emit_report(const Json& report, const std::string& out) {
  const std::string text = report.dump(2) + '\n';
  if (out.empty()) std::cout << text;
  else write_text(out, text);
}

// Counts the contrastive pairs the corpus would yield, with ground truths
// injected as queries. Don't-care regions are left out.
std::optional<MiningReport> corpus_mining(const std::vector<ImageSample>& images,
                                          const TaxonomyConfig& taxonomy) {
  std::vector<MiningEntry> entries;
  for (const ImageSample& img : images) {
    std::vector<Region> gts;
    for (const GroundTruth& g : img.ground_truths)
      if (!g.ignore) gts.push_back(g.shape);
    if (gts.empty()) continue;
    for (std::size_t g = 0; g < gts.size(); ++g)
      entries.push_back({img.id, ProposalKind::GroundTruth, Label::FullText, g});
    for (const Detection& d : img.detections) {
      const LabeledProposal p = classify(d.shape, gts, taxonomy, d.score);
      entries.push_back({img.id, ProposalKind::Detected, p.label, p.gt_index});
    }
  }
  if (entries.empty()) return std::nullopt;
  const std::size_t n = entries.size();
  return mine_pairs(entries, Tensor(n, 1), 0.2).report;
}

std::vector<ImageSample> load_samples(const Options& o) {
  const auto gt = ingest_gt(o.gt);
  auto det = ingest_detections(o.det);
  warn_line_errors(gt.errors);
  warn_line_errors(det.errors);
  // Two single files describe the same image whatever their names.
  if (fs::is_regular_file(o.gt) && fs::is_regular_file(o.det) && det.images.size() == 1 &&
      gt.images.size() == 1) {
    auto node = det.images.extract(det.images.begin());
    node.key() = gt.images.begin()->first;
    for (auto& r : node.mapped()) r.image_id = node.key();
    det.images.insert(std::move(node));
  }
  return to_samples(gt, det);
}

void print_sweep(const std::vector<ThresholdResult>& rows, bool upper) {
  if (upper) {
    std::printf("%-9s %10s %10s %10s %11s\n", "threshold", "hmean", "ub_hmean", "gain", "substituted");
    for (const auto& r : rows) {
      std::printf("%-9.2f %10.4f %10.4f %10.4f %11zu\n", r.threshold, r.upper_bound.before.hmean,
                  r.upper_bound.after.hmean, r.upper_bound.after.hmean - r.upper_bound.before.hmean,
                  r.upper_bound.substituted);
    }
    return;
  }
  std::printf("%-9s %9s %9s %9s %9s %9s %9s\n", "threshold", "precision", "recall", "hmean",
              "bad", "subtext", "frequency");
  for (const auto& r : rows) {
    const auto f = r.subtext.frequency();
    std::printf("%-9.2f %9.4f %9.4f %9.4f %9zu %9zu %9s\n", r.threshold, r.metrics.precision,
                r.metrics.recall, r.metrics.hmean, r.subtext.bad_case_count, r.subtext.subtext_count,
                f ? std::to_string(*f).substr(0, 6).c_str() : "-");
  }
}

int run_sweep(const Options& o, bool upper) {
  const RunConfig config = load_config(o);
  const std::vector<ImageSample> images = load_samples(o);
  ReportContent content;
  content.command = upper ? "upper-bound" : "analyze";
  content.per_threshold = corpus_threshold_sweep(images, config.taxonomy, config.thresholds);
  if (!upper) content.mining = corpus_mining(images, config.taxonomy);
  if (!o.csv.empty()) write_text(o.csv, sweep_csv(content.per_threshold));
  emit_report(make_report(config, content), o.out);
  if (!o.out.empty()) print_sweep(content.per_threshold, upper);
  return kExitOk;
}

int run_synth(const Options& o) {
  RunConfig config = load_config(o);
  if (o.seed) config.synth.seed = *o.seed;
  const SynthCorpus corpus = synth_corpus(config.synth);
  write_corpus(corpus, o.out_dir);
  std::printf("wrote %zu images, %zu annotations, %zu detections to %s\n", corpus.image_ids.size(),
              corpus.annotations.size(), corpus.detections.size(), o.out_dir.c_str());
  return kExitOk;
}

int run_anchors(const Options& o) {
  RunConfig config = load_config(o);
  if (o.stride) config.anchors.stride = *o.stride;
  const auto gt = ingest_gt(o.gt);
  warn_line_errors(gt.errors);
  std::vector<BoxShape> shapes;
  for (const auto& [id, recs] : gt.images) {
    for (const auto& r : recs) {
      if (r.ignore) continue;
      const AxisBox b = r.quad.bounding_box();
      shapes.push_back({b.width(), b.height()});
    }
  }
  ReportContent content;
  content.command = "anchors";
  content.anchor_fit = fit_anchors(shapes, o.k, o.seed.value_or(0), config.anchors);
  config.anchor_k = o.k;
  emit_report(make_report(config, content), o.out);
  if (!o.out.empty()) {
    std::printf("scale %.4f, aspect ratios:", content.anchor_fit->scale);
    for (double a : content.anchor_fit->aspect_ratios) std::printf(" %.4f", a);
    std::printf("\n");
  }
  return kExitOk;
}

int run_nms(const Options& o) {
  RunConfig config = load_config(o);
  if (o.iou) config.nms_iou = *o.iou;
  if (!(config.nms_iou > 0.0 && config.nms_iou <= 1.0)) throw UsageError("--iou must lie in (0, 1]");
  const auto det = ingest_detections(o.det);
  warn_line_errors(det.errors);
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw IoError("cannot create " + o.out_dir + ": " + ec.message());
  std::size_t before = 0, after = 0;
  for (const auto& [id, recs] : det.images) {
    std::vector<Detection> dets;
    for (const auto& r : recs) dets.push_back({r.shape, r.score});
    std::vector<std::string> lines;
    for (std::size_t i : nms(dets, config.nms_iou)) lines.push_back(format_detection_line(recs[i]));
    before += recs.size();
    after += lines.size();
    write_lines(fs::path(o.out_dir) / (id + ".txt"), lines);
  }
  std::printf("kept %zu of %zu detections over %zu images\n", after, before, det.images.size());
  return kExitOk;
}

int run_gradcheck_cmd(const Options& o) {
  if (o.seeds == 0) throw UsageError("--seeds must be positive");
  const std::uint64_t seed = o.seed.value_or(0);
  const GradcheckReport r = run_gradcheck(seed, o.seeds);
  Json g;
  g["seed"] = seed;
  g["seeds"] = r.seeds;
  g["epsilon"] = kGradcheckEpsilon;
  Json suites = Json::array();
  for (const auto& s : r.suites) {
    suites.push_back({{"name", s.name},
                      {"max_rel_error", s.max_rel_error},
                      {"tolerance", s.tolerance},
                      {"passed", s.passed()}});
    std::printf("%-24s %.3e  (< %.0e)  %s\n", s.name.c_str(), s.max_rel_error, s.tolerance,
                s.passed() ? "ok" : "FAIL");
  }
  g["suites"] = std::move(suites);
  g["passed"] = r.passed();
  ReportContent content;
  content.command = "gradcheck";
  content.mining = r.mining;
  content.gradcheck = std::move(g);
  if (!o.out.empty()) emit_report(make_report(RunConfig{}, content), o.out);
  return r.passed() ? kExitOk : kExitGradcheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-text analysis for scene-text detection output"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  };
  auto add_sweep = [&](CLI::App* c) {
    c->add_option("--gt", o.gt, "ground-truth file or directory")->required()->check(CLI::ExistingPath);
    c->add_option("--det", o.det, "detection file or directory")->required()->check(CLI::ExistingPath);
    c->add_option("--beta", o.beta, "IoF bound for sub-text");
    c->add_option("--thresholds", o.thresholds, "IoU thresholds, comma separated")->delimiter(',');
    c->add_option("--out", o.out, "JSON report path (default stdout)");
    c->add_option("--csv", o.csv, "CSV sweep path");
    add_config(c);
  };

  CLI::App* analyze = app.add_subcommand("analyze", "Threshold sweep with sub-text frequency");
  add_sweep(analyze);
  CLI::App* upper = app.add_subcommand("upper-bound", "Metrics before/after replacing sub-texts");
  add_sweep(upper);

  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic fragmented corpus");
  add_config(synth);
  synth->add_option("--out-dir", o.out_dir, "output directory")->required();
  synth->add_option("--seed", o.seed, "overrides synth.seed");

  CLI::App* anchors = app.add_subcommand("anchors", "Fit prior anchor aspect ratios");
  add_config(anchors);
  anchors->add_option("--gt", o.gt, "ground-truth file or directory")->required()->check(CLI::ExistingPath);
  anchors->add_option("--k", o.k, "number of aspect ratios")->check(CLI::PositiveNumber);
  anchors->add_option("--seed", o.seed, "k-means seed");
  anchors->add_option("--stride", o.stride, "scale divisor")->check(CLI::PositiveNumber);
  anchors->add_option("--out", o.out, "JSON report path (default stdout)");

  CLI::App* nms_cmd = app.add_subcommand("nms", "Greedy box NMS per image");
  add_config(nms_cmd);
  nms_cmd->add_option("--det", o.det, "detection file or directory")->required()->check(CLI::ExistingPath);
  nms_cmd->add_option("--iou", o.iou, "suppression IoU");
  nms_cmd->add_option("--out-dir", o.out_dir, "output directory")->required();

  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  grad->add_option("--seed", o.seed, "first seed");
  grad->add_option("--seeds", o.seeds, "instances per suite");
  grad->add_option("--out", o.out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*analyze) return run_sweep(o, false);
    if (*upper) return run_sweep(o, true);
    if (*synth) return run_synth(o);
    if (*anchors) return run_anchors(o);
    if (*nms_cmd) return run_nms(o);
    if (*grad) return run_gradcheck_cmd(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
