#pragma once

// Instance-wise contrastive objective over relation features: projection
// head, positive/negative mining from labelled proposals, InfoNCE, and the
// weighted sum with the detector losses.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subtext/numerics.hpp"
#include "subtext/taxonomy.hpp"

namespace subtext {

// ---- projection head ----------------------------------------------------------

struct ProjectionHeadConfig {
  std::size_t input_dim = 1024;
  std::size_t hidden_dim = 1024;
  std::size_t output_dim = 128;
};

struct ProjectionHeadParams {
  ProjectionHeadConfig config;
  Parameter w1;  // hidden x input
  Parameter b1;  // 1 x hidden
  Parameter w2;  // output x hidden
  Parameter b2;  // 1 x output

  template <class Rng>
  static ProjectionHeadParams random(const ProjectionHeadConfig& config, Rng& rng,
                                     double lo = -0.1, double hi = 0.1) {
    ProjectionHeadParams p;
    p.config = config;
    p.w1 = Parameter(Tensor::uniform(config.hidden_dim, config.input_dim, lo, hi, rng));
    p.b1 = Parameter(Tensor::uniform(1, config.hidden_dim, lo, hi, rng));
    p.w2 = Parameter(Tensor::uniform(config.output_dim, config.hidden_dim, lo, hi, rng));
    p.b2 = Parameter(Tensor::uniform(1, config.output_dim, lo, hi, rng));
    return p;
  }

  static ProjectionHeadParams zeros(const ProjectionHeadConfig& config) {
    ProjectionHeadParams p;
    p.config = config;
    p.w1 = Parameter(Tensor(config.hidden_dim, config.input_dim));
    p.b1 = Parameter(Tensor(1, config.hidden_dim));
    p.w2 = Parameter(Tensor(config.output_dim, config.hidden_dim));
    p.b2 = Parameter(Tensor(1, config.output_dim));
    return p;
  }

  void zero_grad() {
    w1.zero_grad();
    b1.zero_grad();
    w2.zero_grad();
    b2.zero_grad();
  }
};

struct ProjectionCache {
  Tensor input;
  Tensor hidden_pre;  // before relu
  Tensor hidden;
  Tensor output_pre;  // before l2 normalisation
};

namespace detail {

inline Tensor add_row_bias(Tensor x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) throw ShapeError("bias shape");
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) += bias(0, c);
  return x;
}

inline Tensor column_sums(const Tensor& x) {
  Tensor s(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) s(0, c) += x(r, c);
  return s;
}

}  // namespace detail

// l2_normalize(relu(x W1^T + b1) W2^T + b2), row-wise.
inline Tensor project(const Tensor& features, const ProjectionHeadParams& params,
                      ProjectionCache* cache = nullptr) {
  if (features.cols() != params.w1.value.cols()) {
    throw ShapeError("project: feature width " + std::to_string(features.cols()) +
                     " does not match head input " + std::to_string(params.w1.value.cols()));
  }
  ProjectionCache c;
  c.input = features;
  c.hidden_pre = detail::add_row_bias(matmul_nt(features, params.w1.value), params.b1.value);
  c.hidden = relu(c.hidden_pre);
  c.output_pre = detail::add_row_bias(matmul_nt(c.hidden, params.w2.value), params.b2.value);
  Tensor out = l2_normalize_rows(c.output_pre);
  if (cache) *cache = std::move(c);
  return out;
}

inline Tensor project_backward(ProjectionHeadParams& params, const ProjectionCache& cache,
                               const Tensor& upstream) {
  if (upstream.rows() != cache.output_pre.rows() || upstream.cols() != cache.output_pre.cols()) {
    throw ShapeError("project_backward: upstream shape");
  }
  const Tensor d_out_pre = l2_normalize_rows_vjp(cache.output_pre, upstream);
  params.b2.accumulate(detail::column_sums(d_out_pre));
  params.w2.accumulate(matmul_tn(d_out_pre, cache.hidden));
  const Tensor d_hidden = matmul(d_out_pre, params.w2.value);
  const Tensor d_hidden_pre = relu_vjp(cache.hidden_pre, d_hidden);
  params.b1.accumulate(detail::column_sums(d_hidden_pre));
  params.w1.accumulate(matmul_tn(d_hidden_pre, cache.input));
  return matmul(d_hidden_pre, params.w1.value);
}

// ---- InfoNCE ------------------------------------------------------------------

// -log softmax(logits)[0]; the positive logit sits at index 0.
inline double infonce_from_logits(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("infonce_from_logits: no logits");
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return mx + std::log(z) - logits[0];
}

struct InfoNceResult {
  double loss = 0.0;
  std::vector<double> d_query;
  std::vector<double> d_positive;
  Tensor d_negatives;  // K x D
};

inline InfoNceResult infonce(std::span<const double> query, std::span<const double> positive,
                             const Tensor& negatives, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("infonce: temperature must be positive");
  const std::size_t dim = query.size();
  if (positive.size() != dim || (negatives.rows() > 0 && negatives.cols() != dim)) {
    throw ShapeError("infonce: embedding dimension mismatch");
  }
  const std::size_t k = negatives.rows();
  std::vector<double> logits(k + 1);
  logits[0] = dot(query, positive) / tau;
  for (std::size_t j = 0; j < k; ++j) logits[j + 1] = dot(query, negatives.row(j)) / tau;

  InfoNceResult r;
  r.loss = infonce_from_logits(logits);
  // d loss / d logit = softmax - onehot(0)
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  std::vector<double> p(k + 1);
  double z = 0.0;
  for (std::size_t j = 0; j <= k; ++j) z += (p[j] = std::exp(logits[j] - mx));
  for (double& v : p) v /= z;
  p[0] -= 1.0;

  r.d_query.assign(dim, 0.0);
  r.d_positive.assign(dim, 0.0);
  r.d_negatives = Tensor(k, dim);
  for (std::size_t c = 0; c < dim; ++c) {
    r.d_query[c] += p[0] * positive[c] / tau;
    r.d_positive[c] = p[0] * query[c] / tau;
  }
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < dim; ++c) {
      r.d_query[c] += p[j + 1] * negatives(j, c) / tau;
      r.d_negatives(j, c) = p[j + 1] * query[c] / tau;
    }
  }
  return r;
}

// ---- mining -------------------------------------------------------------------

enum class ProposalKind { GroundTruth, Detected };

// One embedded proposal. Ground-truth proposals carry their own instance in
// gt_index; detected proposals carry the argmax-IoU instance from the taxonomy.
struct MiningEntry {
  std::string image;
  ProposalKind kind = ProposalKind::Detected;
  Label label = Label::Background;
  std::optional<std::size_t> gt_index;
};

struct ContrastiveQuery {
  std::size_t query = 0;  // embedding row
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct ContrastiveBatch {
  Tensor embeddings;  // one row per MiningEntry
  std::vector<ContrastiveQuery> queries;
  double tau = 0.2;

  void validate(double norm_tolerance = 1e-9) const {
    if (!(tau > 0.0)) throw std::invalid_argument("ContrastiveBatch: temperature must be positive");
    auto check_row = [&](std::size_t r) {
      if (r >= embeddings.rows()) throw std::out_of_range("ContrastiveBatch: row index");
      const double n = std::sqrt(dot(embeddings.row(r), embeddings.row(r)));
      if (std::abs(n - 1.0) > norm_tolerance) {
        throw std::invalid_argument("ContrastiveBatch: embedding row " + std::to_string(r) +
                                    " is not unit-norm");
      }
    };
    for (const ContrastiveQuery& q : queries) {
      if (q.positives.empty()) throw std::invalid_argument("ContrastiveBatch: query without positives");
      check_row(q.query);
      for (std::size_t r : q.positives) check_row(r);
      for (std::size_t r : q.negatives) check_row(r);
    }
  }
};

struct MiningReport {
  std::size_t queries = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t dropped_queries = 0;       // no positives
  std::size_t queries_without_negatives = 0;  // single-instance images
};

struct MiningResult {
  ContrastiveBatch batch;
  MiningReport report;
};

inline bool is_text_proposal(const MiningEntry& e) {
  return e.kind == ProposalKind::Detected &&
         (e.label == Label::SubText || e.label == Label::FullText);
}

// Queries are ground-truth proposals. Positives: detected sub-/full-text of the
// same instance. Negatives: detected sub-/full-text and ground-truth proposals
// of other instances in the same image. Background proposals never appear.
inline MiningResult mine_pairs(std::span<const MiningEntry> entries, Tensor embeddings,
                               double tau = 0.2) {
  if (embeddings.rows() != entries.size()) {
    throw ShapeError("mine_pairs: one embedding row per entry required");
  }
  struct Instance {
    std::vector<std::size_t> gts;
    std::vector<std::size_t> texts;
  };
  std::map<std::string, std::map<std::size_t, Instance>> images;
  bool any_gt = false;
  for (std::size_t r = 0; r < entries.size(); ++r) {
    const MiningEntry& e = entries[r];
    if (e.kind == ProposalKind::GroundTruth) {
      if (!e.gt_index) throw std::invalid_argument("mine_pairs: ground-truth entry without instance");
      images[e.image][*e.gt_index].gts.push_back(r);
      any_gt = true;
    } else if (is_text_proposal(e)) {
      if (!e.gt_index) throw std::invalid_argument("mine_pairs: text proposal without instance");
      images[e.image][*e.gt_index].texts.push_back(r);
    }
  }
  if (!any_gt) throw std::invalid_argument("mine_pairs: no ground-truth proposals");

  MiningResult out;
  out.batch.embeddings = std::move(embeddings);
  out.batch.tau = tau;
  std::vector<ContrastiveQuery> ordered;
  for (const auto& [image, instances] : images) {
    for (const auto& [inst, members] : instances) {
      for (std::size_t q : members.gts) {
        ContrastiveQuery cq{q, members.texts, {}};
        for (const auto& [other, om] : instances) {
          if (other == inst) continue;
          cq.negatives.insert(cq.negatives.end(), om.texts.begin(), om.texts.end());
          cq.negatives.insert(cq.negatives.end(), om.gts.begin(), om.gts.end());
        }
        std::sort(cq.negatives.begin(), cq.negatives.end());
        if (cq.positives.empty()) {
          ++out.report.dropped_queries;
          continue;
        }
        ordered.push_back(std::move(cq));
      }
    }
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const ContrastiveQuery& a, const ContrastiveQuery& b) { return a.query < b.query; });
  for (const ContrastiveQuery& q : ordered) {
    ++out.report.queries;
    out.report.positives += q.positives.size();
    out.report.negatives += q.negatives.size();
    if (q.negatives.empty()) ++out.report.queries_without_negatives;
  }
  out.batch.queries = std::move(ordered);
  return out;
}

// ---- objective ----------------------------------------------------------------

class EmptyBatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct InsclResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d embeddings
  std::size_t pairs = 0;
};

// Mean of per-pair InfoNCE over every (query, positive) pair; each query's
// negatives are shared by all of its positives.
inline InsclResult inscl_loss(const ContrastiveBatch& batch) {
  if (batch.queries.empty()) throw EmptyBatchError("inscl_loss: batch has no queries");
  batch.validate();
  const Tensor& z = batch.embeddings;
  InsclResult out;
  out.grad = Tensor(z.rows(), z.cols());
  for (const ContrastiveQuery& q : batch.queries) out.pairs += q.positives.size();
  const double inv_pairs = 1.0 / static_cast<double>(out.pairs);

  for (const ContrastiveQuery& q : batch.queries) {
    Tensor negs(q.negatives.size(), z.cols());
    for (std::size_t j = 0; j < q.negatives.size(); ++j) {
      std::copy(z.row(q.negatives[j]).begin(), z.row(q.negatives[j]).end(), negs.row(j).begin());
    }
    for (std::size_t pos : q.positives) {
      const InfoNceResult r = infonce(z.row(q.query), z.row(pos), negs, batch.tau);
      out.loss += r.loss * inv_pairs;
      for (std::size_t c = 0; c < z.cols(); ++c) {
        out.grad(q.query, c) += r.d_query[c] * inv_pairs;
        out.grad(pos, c) += r.d_positive[c] * inv_pairs;
      }
      for (std::size_t j = 0; j < q.negatives.size(); ++j) {
        for (std::size_t c = 0; c < z.cols(); ++c) {
          out.grad(q.negatives[j], c) += r.d_negatives(j, c) * inv_pairs;
        }
      }
    }
  }
  return out;
}

struct LossWeights {
  double lambda = 0.01;
  double rpn = 0.0;
  double cls = 0.0;
  double reg = 0.0;
  double mask = 0.0;
};

inline double overall_loss(const LossWeights& w, double inscl) {
  if (!(w.lambda >= 0.0)) throw std::invalid_argument("overall_loss: lambda must be non-negative");
  return w.rpn + w.cls + w.reg + w.mask + w.lambda * inscl;
}

}  // namespace subtext
