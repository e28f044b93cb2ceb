#pragma once

// Finite-difference verification of every hand-written backward pass.
// Tensor-valued maps are reduced to scalars with a fixed random projection.

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "subtext/contrastive.hpp"
#include "subtext/numerics.hpp"
#include "subtext/relation.hpp"

namespace subtext {

inline constexpr double kPrimitiveTolerance = 1e-5;
inline constexpr double kCompositeTolerance = 1e-4;
inline constexpr double kGradcheckEpsilon = 1e-5;

struct GradSuiteResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

struct GradcheckReport {
  std::vector<GradSuiteResult> suites;
  MiningReport mining;  // from the last composite scene
  std::size_t seeds = 0;

  bool passed() const {
    for (const auto& s : suites)
      if (!s.passed()) return false;
    return !suites.empty();
  }
};

namespace gradcheck {

using Rng = std::mt19937_64;

// Moves entries off the relu kink, where central differences are meaningless.
inline Tensor away_from_zero(Tensor t, double margin = 1e-2) {
  for (double& v : t.values())
    if (std::abs(v) < margin) v = v < 0 ? -0.5 : 0.5;
  return t;
}

// Central differences are only valid away from the relu kinks and the
// uniform-fallback switch, so random instances closer than this are redrawn.
inline constexpr double kKinkMargin = 1e-3;
inline constexpr int kMaxRedraws = 1000;

// Appearance features for relation-block instances are drawn from
// U(-kFeatureRange, kFeatureRange). With weights in [-0.1, 0.1] and unit-range
// features the query/key gradients are ~1e-3 and often have components near
// the ~1e-11 rounding floor of the difference quotient.
inline constexpr double kFeatureRange = 4.0;

inline bool projection_smooth(const Tensor& x, const ProjectionHeadParams& params) {
  ProjectionCache c;
  project(x, params, &c);
  for (double v : c.hidden_pre.values())
    if (std::abs(v) < kKinkMargin) return false;
  return true;
}

inline bool relation_smooth(const ProposalBatch& batch, const RelationBlockParams& params) {
  RelationCache c;
  relation_block_forward(batch, params, &c);
  for (const auto& h : c.heads) {
    for (bool f : h.fallback)
      if (f) return false;
    for (double g : h.gate.values())
      if (std::abs(g) < kKinkMargin) return false;
  }
  return true;
}

template <class Draw, class Smooth>
auto draw_smooth(Draw draw, Smooth smooth) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    auto instance = draw();
    if (std::apply(smooth, instance)) return instance;
  }
  throw std::runtime_error("gradcheck: no instance away from non-differentiable points");
}

inline double matmul_error(Rng& rng) {
  const Tensor a = Tensor::uniform(3, 4, -1, 1, rng);
  const Tensor b = Tensor::uniform(4, 2, -1, 1, rng);
  const Tensor p = random_projection(3, 2, rng);
  const auto [ga, gb] = matmul_vjp(a, b, p);
  return std::max(
      finite_diff_check([&](const Tensor& x) { return inner(p, matmul(x, b)); }, a, ga, kGradcheckEpsilon),
      finite_diff_check([&](const Tensor& x) { return inner(p, matmul(a, x)); }, b, gb, kGradcheckEpsilon));
}

inline double softmax_error(Rng& rng) {
  const Tensor x = Tensor::uniform(3, 5, -2, 2, rng);
  const Tensor p = random_projection(3, 5, rng);
  const Tensor g = softmax_rows_vjp(softmax_rows(x), p);
  return finite_diff_check([&](const Tensor& v) { return inner(p, softmax_rows(v)); }, x, g,
                           kGradcheckEpsilon);
}

inline double relu_error(Rng& rng) {
  const Tensor x = away_from_zero(Tensor::uniform(3, 4, -1, 1, rng));
  const Tensor p = random_projection(3, 4, rng);
  return finite_diff_check([&](const Tensor& v) { return inner(p, relu(v)); }, x, relu_vjp(x, p),
                           kGradcheckEpsilon);
}

inline double l2_normalize_error(Rng& rng) {
  const Tensor x = Tensor::uniform(4, 5, -1, 1, rng);
  const Tensor p = random_projection(4, 5, rng);
  return finite_diff_check([&](const Tensor& v) { return inner(p, l2_normalize_rows(v)); }, x,
                           l2_normalize_rows_vjp(x, p), kGradcheckEpsilon);
}

inline double concat_error(Rng& rng) {
  std::vector<Tensor> blocks{Tensor::uniform(3, 2, -1, 1, rng), Tensor::uniform(3, 3, -1, 1, rng),
                             Tensor::uniform(3, 1, -1, 1, rng)};
  const std::vector<std::size_t> widths{2, 3, 1};
  const Tensor p = random_projection(3, 6, rng);
  const auto grads = concat_cols_vjp(widths, p);
  double worst = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto fn = [&](const Tensor& v) {
      auto copy = blocks;
      copy[b] = v;
      return inner(p, concat_cols(copy));
    };
    worst = std::max(worst, finite_diff_check(fn, blocks[b], grads[b], kGradcheckEpsilon));
  }
  return worst;
}

inline double add_scale_error(Rng& rng) {
  const Tensor x = Tensor::uniform(3, 3, -1, 1, rng);
  const Tensor y = Tensor::uniform(3, 3, -1, 1, rng);
  const double c = std::uniform_real_distribution<double>(-2, 2)(rng);
  const Tensor p = random_projection(3, 3, rng);
  const auto [gx, gy] = add_vjp(p);
  double worst = finite_diff_check([&](const Tensor& v) { return inner(p, add(v, y)); }, x, gx,
                                   kGradcheckEpsilon);
  worst = std::max(worst, finite_diff_check([&](const Tensor& v) { return inner(p, add(x, v)); },
                                            y, gy, kGradcheckEpsilon));
  worst = std::max(worst, finite_diff_check([&](const Tensor& v) { return inner(p, scale(v, c)); },
                                            x, scale_vjp(p, c), kGradcheckEpsilon));
  return worst;
}

inline double infonce_error(Rng& rng) {
  const std::size_t dim = 6, k = 4;
  const Tensor q = l2_normalize_rows(Tensor::uniform(1, dim, -1, 1, rng));
  const Tensor kp = l2_normalize_rows(Tensor::uniform(1, dim, -1, 1, rng));
  const Tensor negs = l2_normalize_rows(Tensor::uniform(k, dim, -1, 1, rng));
  const double tau = 0.2;
  const InfoNceResult r = infonce(q.row(0), kp.row(0), negs, tau);
  const Tensor gq(1, dim, r.d_query);
  const Tensor gk(1, dim, r.d_positive);
  double worst = finite_diff_check(
      [&](const Tensor& v) { return infonce(v.row(0), kp.row(0), negs, tau).loss; }, q, gq,
      kGradcheckEpsilon);
  worst = std::max(worst, finite_diff_check(
                              [&](const Tensor& v) { return infonce(q.row(0), v.row(0), negs, tau).loss; },
                              kp, gk, kGradcheckEpsilon));
  worst = std::max(worst, finite_diff_check(
                              [&](const Tensor& v) { return infonce(q.row(0), kp.row(0), v, tau).loss; },
                              negs, r.d_negatives, kGradcheckEpsilon));
  return worst;
}

inline ProjectionHeadConfig small_projection() { return {8, 16, 6}; }

inline double projection_error(Rng& rng) {
  auto [params, x] = draw_smooth(
      [&] {
        auto p = ProjectionHeadParams::random(small_projection(), rng, -0.5, 0.5);
        return std::tuple{p, Tensor::uniform(5, 8, -1, 1, rng)};
      },
      [](const ProjectionHeadParams& p, const Tensor& v) { return projection_smooth(v, p); });
  const Tensor p = random_projection(5, 6, rng);
  ProjectionCache cache;
  project(x, params, &cache);
  params.zero_grad();
  const Tensor gx = project_backward(params, cache, p);

  double worst = finite_diff_check([&](const Tensor& v) { return inner(p, project(v, params)); },
                                   x, gx, kGradcheckEpsilon);
  auto check = [&](Parameter ProjectionHeadParams::*member) {
    ProjectionHeadParams probe = params;
    auto fn = [&](const Tensor& v) {
      (probe.*member).value = v;
      return inner(p, project(x, probe));
    };
    worst = std::max(worst, finite_diff_check(fn, (params.*member).value, (params.*member).grad,
                                              kGradcheckEpsilon));
  };
  check(&ProjectionHeadParams::w1);
  check(&ProjectionHeadParams::b1);
  check(&ProjectionHeadParams::w2);
  check(&ProjectionHeadParams::b2);
  return worst;
}

inline RelationConfig small_relation() {
  RelationConfig c;
  c.feature_dim = 8;
  c.heads = 2;
  c.value_dim = 4;
  c.key_dim = 4;
  c.geometry.dim = 8;
  return c;
}

inline std::vector<AxisBox> random_boxes(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> pos(0.0, 200.0), size(8.0, 80.0);
  std::vector<AxisBox> boxes;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng);
    boxes.emplace_back(x, y, x + size(rng), y + size(rng) * 0.5);
  }
  return boxes;
}

// Max relative error of every parameter matrix of `params` against the
// gradients already accumulated in it, for scalar loss `loss(params)`.
inline double relation_param_error(const RelationBlockParams& params,
                                   const std::function<double(const RelationBlockParams&)>& loss) {
  double worst = 0.0;
  for (std::size_t m = 0; m < params.heads.size(); ++m) {
    for (Parameter RelationHead::*member :
         {&RelationHead::query, &RelationHead::key, &RelationHead::value, &RelationHead::geometry}) {
      RelationBlockParams probe = params;
      auto fn = [&](const Tensor& v) {
        (probe.heads[m].*member).value = v;
        return loss(probe);
      };
      worst = std::max(worst, finite_diff_check(fn, (params.heads[m].*member).value,
                                                (params.heads[m].*member).grad, kGradcheckEpsilon));
    }
  }
  return worst;
}

inline double relation_block_error(Rng& rng) {
  auto [params, batch] = draw_smooth(
      [&] {
        auto p = RelationBlockParams::random(small_relation(), rng);
        ProposalBatch b{Tensor::uniform(4, 8, -kFeatureRange, kFeatureRange, rng), random_boxes(4, rng)};
        return std::tuple{p, b};
      },
      [](const RelationBlockParams& p, const ProposalBatch& b) { return relation_smooth(b, p); });
  const Tensor p = random_projection(4, 8, rng);
  RelationCache cache;
  relation_block_forward(batch, params, &cache);
  params.zero_grad();
  const Tensor gx = relation_block_backward(params, cache, p);

  double worst = finite_diff_check(
      [&](const Tensor& v) { return inner(p, relation_block_forward({v, batch.boxes}, params)); },
      batch.appearance, gx, kGradcheckEpsilon);
  worst = std::max(worst, relation_param_error(params, [&](const RelationBlockParams& q) {
                     return inner(p, relation_block_forward(batch, q));
                   }));
  return worst;
}

// One image, three instances: each has a ground-truth proposal plus detected
// sub-/full-text proposals; one background proposal is mixed in.
inline std::vector<MiningEntry> composite_scene() {
  using L = Label;
  using K = ProposalKind;
  return {{"img", K::GroundTruth, L::FullText, 0}, {"img", K::Detected, L::SubText, 0},
          {"img", K::Detected, L::FullText, 0},    {"img", K::GroundTruth, L::FullText, 1},
          {"img", K::Detected, L::SubText, 1},     {"img", K::Detected, L::SubText, 1},
          {"img", K::GroundTruth, L::FullText, 2}, {"img", K::Detected, L::FullText, 2},
          {"img", K::Detected, L::Background, std::nullopt}};
}

inline double project_inscl_error(Rng& rng, MiningReport* report) {
  const auto entries = composite_scene();
  auto [head, x] = draw_smooth(
      [&] {
        auto p = ProjectionHeadParams::random(small_projection(), rng, -0.5, 0.5);
        return std::tuple{p, Tensor::uniform(entries.size(), 8, -1, 1, rng)};
      },
      [](const ProjectionHeadParams& p, const Tensor& v) { return projection_smooth(v, p); });
  const double tau = 0.2;

  auto loss_of = [&](const Tensor& feats, const ProjectionHeadParams& h) {
    return inscl_loss(mine_pairs(entries, project(feats, h), tau).batch).loss;
  };
  ProjectionCache cache;
  const MiningResult mined = mine_pairs(entries, project(x, head, &cache), tau);
  if (report) *report = mined.report;
  const InsclResult r = inscl_loss(mined.batch);
  head.zero_grad();
  const Tensor gx = project_backward(head, cache, r.grad);

  double worst = finite_diff_check([&](const Tensor& v) { return loss_of(v, head); }, x, gx,
                                   kGradcheckEpsilon);
  for (Parameter ProjectionHeadParams::*member :
       {&ProjectionHeadParams::w1, &ProjectionHeadParams::b1, &ProjectionHeadParams::w2,
        &ProjectionHeadParams::b2}) {
    ProjectionHeadParams probe = head;
    auto fn = [&](const Tensor& v) {
      (probe.*member).value = v;
      return loss_of(x, probe);
    };
    worst = std::max(worst, finite_diff_check(fn, (head.*member).value, (head.*member).grad,
                                              kGradcheckEpsilon));
  }
  return worst;
}

// relation block -> projection head -> mining -> contrastive loss.
inline double relation_inscl_error(Rng& rng) {
  const auto entries = composite_scene();
  auto [rel, head, batch] = draw_smooth(
      [&] {
        auto r = RelationBlockParams::random(small_relation(), rng);
        auto h = ProjectionHeadParams::random(small_projection(), rng, -0.5, 0.5);
        ProposalBatch b{Tensor::uniform(entries.size(), 8, -kFeatureRange, kFeatureRange, rng),
                        random_boxes(entries.size(), rng)};
        return std::tuple{r, h, b};
      },
      [](const RelationBlockParams& r, const ProjectionHeadParams& h, const ProposalBatch& b) {
        return relation_smooth(b, r) && projection_smooth(relation_block_forward(b, r), h);
      });
  const double tau = 0.2;
  auto loss_of = [&](const ProposalBatch& b, const RelationBlockParams& r) {
    const Tensor feats = relation_block_forward(b, r);
    return inscl_loss(mine_pairs(entries, project(feats, head), tau).batch).loss;
  };

  RelationCache rcache;
  ProjectionCache pcache;
  const Tensor feats = relation_block_forward(batch, rel, &rcache);
  const InsclResult r = inscl_loss(mine_pairs(entries, project(feats, head, &pcache), tau).batch);
  rel.zero_grad();
  head.zero_grad();
  const Tensor gfeats = project_backward(head, pcache, r.grad);
  const Tensor gx = relation_block_backward(rel, rcache, gfeats);

  double worst = finite_diff_check(
      [&](const Tensor& v) { return loss_of({v, batch.boxes}, rel); }, batch.appearance, gx,
      kGradcheckEpsilon);
  worst = std::max(worst, relation_param_error(
                              rel, [&](const RelationBlockParams& q) { return loss_of(batch, q); }));
  return worst;
}

}  // namespace gradcheck

// Runs every suite for seeds seed .. seed + repeats - 1 and keeps the worst
// error per suite.
inline GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t repeats = 10) {
  struct Suite {
    const char* name;
    double tolerance;
    std::function<double(gradcheck::Rng&)> run;
  };
  MiningReport mining;
  const std::vector<Suite> suites{
      {"matmul", kPrimitiveTolerance, gradcheck::matmul_error},
      {"softmax_rows", kPrimitiveTolerance, gradcheck::softmax_error},
      {"relu", kPrimitiveTolerance, gradcheck::relu_error},
      {"l2_normalize_rows", kPrimitiveTolerance, gradcheck::l2_normalize_error},
      {"concat_cols", kPrimitiveTolerance, gradcheck::concat_error},
      {"add_scale", kPrimitiveTolerance, gradcheck::add_scale_error},
      {"infonce", kPrimitiveTolerance, gradcheck::infonce_error},
      {"projection_head", kPrimitiveTolerance, gradcheck::projection_error},
      {"relation_block", kCompositeTolerance, gradcheck::relation_block_error},
      {"project_inscl", kCompositeTolerance,
       [&](gradcheck::Rng& rng) { return gradcheck::project_inscl_error(rng, &mining); }},
      {"relation_project_inscl", kCompositeTolerance, gradcheck::relation_inscl_error},
  };
  GradcheckReport report;
  report.seeds = repeats;
  for (const Suite& s : suites) {
    GradSuiteResult r{s.name, 0.0, s.tolerance};
    for (std::size_t k = 0; k < repeats; ++k) {
      gradcheck::Rng rng(seed + k);
      r.max_rel_error = std::max(r.max_rel_error, s.run(rng));
    }
    report.suites.push_back(r);
  }
  report.mining = mining;
  return report;
}

}  // namespace subtext
