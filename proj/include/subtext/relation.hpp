#pragma once

// Relation block over region proposals: N_r attention heads whose weights
// combine scaled dot-product appearance similarity with a relu-gated
// geometry term. Head outputs are concatenated and added back to the input.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "subtext/geometry.hpp"
#include "subtext/numerics.hpp"

namespace subtext {

struct GeometryEncodingConfig {
  std::size_t dim = 64;         // d_g
  double wave_base = 1000.0;
  double position_scale = 100.0;
  double offset_epsilon = 1e-3;

  void validate() const {
    if (dim == 0 || dim % 8 != 0) {
      throw std::invalid_argument("GeometryEncodingConfig: dim must be a positive multiple of 8");
    }
    if (!(wave_base > 0.0) || !(position_scale > 0.0) || !(offset_epsilon > 0.0)) {
      throw std::invalid_argument("GeometryEncodingConfig: parameters must be positive");
    }
  }
};

// Row i*N + j holds (log(|dx|/w_i + eps), log(|dy|/h_i + eps), log(w_j/w_i),
// log(h_j/h_i)) for the ordered pair (i, j).
inline Tensor pair_geometry_features(std::span<const AxisBox> boxes, double eps = 1e-3) {
  for (const AxisBox& b : boxes) {
    if (!(b.width() > 0.0) || !(b.height() > 0.0)) {
      throw GeometryError("pair_geometry_features: box with non-positive width or height");
    }
  }
  const std::size_t n = boxes.size();
  Tensor out(n * n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const AxisBox& a = boxes[i];
    for (std::size_t j = 0; j < n; ++j) {
      const AxisBox& b = boxes[j];
      auto r = out.row(i * n + j);
      r[0] = std::log(std::abs(b.center_x() - a.center_x()) / a.width() + eps);
      r[1] = std::log(std::abs(b.center_y() - a.center_y()) / a.height() + eps);
      r[2] = std::log(b.width() / a.width());
      r[3] = std::log(b.height() / a.height());
    }
  }
  return out;
}

// Sinusoidal embedding of the pair features: for each of the four terms,
// dim/8 sines followed by dim/8 cosines at geometric wavelengths.
inline Tensor encode_pair_geometry(std::span<const AxisBox> boxes,
                                   const GeometryEncodingConfig& config = {}) {
  config.validate();
  const Tensor raw = pair_geometry_features(boxes, config.offset_epsilon);
  const std::size_t freqs = config.dim / 8;
  Tensor out(raw.rows(), config.dim);
  for (std::size_t p = 0; p < raw.rows(); ++p) {
    auto o = out.row(p);
    for (std::size_t f = 0; f < 4; ++f) {
      for (std::size_t k = 0; k < freqs; ++k) {
        const double wavelength =
            std::pow(config.wave_base, static_cast<double>(k) / static_cast<double>(freqs));
        const double angle = config.position_scale * raw(p, f) / wavelength;
        o[f * 2 * freqs + k] = std::sin(angle);
        o[f * 2 * freqs + freqs + k] = std::cos(angle);
      }
    }
  }
  return out;
}

struct RelationConfig {
  std::size_t feature_dim = 1024;  // d
  std::size_t heads = 16;          // N_r
  std::size_t value_dim = 64;      // d_r
  std::size_t key_dim = 64;        // d_k
  GeometryEncodingConfig geometry{};

  void validate() const {
    if (feature_dim == 0 || heads == 0 || value_dim == 0 || key_dim == 0) {
      throw std::invalid_argument("RelationConfig: dimensions must be positive");
    }
    if (heads * value_dim != feature_dim) {
      throw std::invalid_argument("RelationConfig: heads * value_dim must equal feature_dim");
    }
    geometry.validate();
  }
};

struct RelationHead {
  Parameter query;     // d_k x d
  Parameter key;       // d_k x d
  Parameter value;     // d_r x d  (W^V)
  Parameter geometry;  // 1 x d_g
};

struct RelationBlockParams {
  RelationConfig config;
  std::vector<RelationHead> heads;

  template <class Rng>
  static RelationBlockParams random(const RelationConfig& config, Rng& rng, double lo = -0.1,
                                    double hi = 0.1) {
    config.validate();
    RelationBlockParams p{config, {}};
    for (std::size_t m = 0; m < config.heads; ++m) {
      RelationHead h;
      h.query = Parameter(Tensor::uniform(config.key_dim, config.feature_dim, lo, hi, rng));
      h.key = Parameter(Tensor::uniform(config.key_dim, config.feature_dim, lo, hi, rng));
      h.value = Parameter(Tensor::uniform(config.value_dim, config.feature_dim, lo, hi, rng));
      h.geometry = Parameter(Tensor::uniform(1, config.geometry.dim, lo, hi, rng));
      p.heads.push_back(std::move(h));
    }
    return p;
  }

  void zero_grad() {
    for (RelationHead& h : heads) {
      h.query.zero_grad();
      h.key.zero_grad();
      h.value.zero_grad();
      h.geometry.zero_grad();
    }
  }

  void validate() const {
    config.validate();
    if (heads.size() != config.heads) throw ShapeError("RelationBlockParams: head count");
    const auto& c = config;
    for (const RelationHead& h : heads) {
      if (h.query.value.rows() != c.key_dim || h.query.value.cols() != c.feature_dim ||
          h.key.value.rows() != c.key_dim || h.key.value.cols() != c.feature_dim ||
          h.value.value.rows() != c.value_dim || h.value.value.cols() != c.feature_dim ||
          h.geometry.value.rows() != 1 || h.geometry.value.cols() != c.geometry.dim) {
        throw ShapeError("RelationBlockParams: head matrix shape");
      }
    }
  }
};

struct ProposalBatch {
  Tensor appearance;           // N x d
  std::vector<AxisBox> boxes;  // N

  void validate(std::size_t feature_dim) const {
    if (appearance.rows() == 0) throw ShapeError("ProposalBatch: empty");
    if (appearance.rows() != boxes.size()) throw ShapeError("ProposalBatch: boxes vs rows");
    if (appearance.cols() != feature_dim) throw ShapeError("ProposalBatch: feature width");
    for (double v : appearance.values()) {
      if (!std::isfinite(v)) throw std::invalid_argument("ProposalBatch: non-finite feature");
    }
  }
};

struct RelationHeadCache {
  Tensor query;   // N x d_k
  Tensor key;     // N x d_k
  Tensor value;   // N x d_r
  Tensor gate;    // N x N pre-relu geometry term
  Tensor expo;    // N x N exp(s_ij - max_k s_ik)
  Tensor weight;  // N x N
  std::vector<bool> fallback;  // rows with no positive gate
};

struct RelationCache {
  Tensor input;
  Tensor encoding;  // N*N x d_g
  std::vector<RelationHeadCache> heads;
};

namespace detail {

inline RelationHeadCache relation_head_forward(const Tensor& input, const Tensor& encoding,
                                               const RelationHead& head, std::size_t key_dim) {
  const std::size_t n = input.rows();
  RelationHeadCache c;
  c.query = matmul_nt(input, head.query.value);
  c.key = matmul_nt(input, head.key.value);
  c.value = matmul_nt(input, head.value.value);
  const Tensor scores = scale(matmul_nt(c.query, c.key), 1.0 / std::sqrt(double(key_dim)));
  c.gate = Tensor(n, n, matmul_nt(encoding, head.geometry.value).values());
  c.expo = Tensor(n, n);
  c.weight = Tensor(n, n);
  c.fallback.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = scores(i, 0);
    for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, scores(i, k));
    double z = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      c.expo(i, k) = std::exp(scores(i, k) - mx);
      const double g = c.gate(i, k) > 0.0 ? c.gate(i, k) : 0.0;
      z += g * c.expo(i, k);
    }
    if (z > 0.0) {
      for (std::size_t k = 0; k < n; ++k) {
        const double g = c.gate(i, k) > 0.0 ? c.gate(i, k) : 0.0;
        c.weight(i, k) = g * c.expo(i, k) / z;
      }
    } else {
      c.fallback[i] = true;
      for (std::size_t k = 0; k < n; ++k) c.weight(i, k) = 1.0 / double(n);
    }
  }
  return c;
}

}  // namespace detail

// Row-stochastic relation weights of head m.
inline Tensor relation_weights(const ProposalBatch& batch, const RelationBlockParams& params,
                               std::size_t head) {
  params.validate();
  batch.validate(params.config.feature_dim);
  if (head >= params.heads.size()) throw std::out_of_range("relation_weights: head index");
  const Tensor enc = encode_pair_geometry(batch.boxes, params.config.geometry);
  return detail::relation_head_forward(batch.appearance, enc, params.heads[head],
                                       params.config.key_dim)
      .weight;
}

// output_i = f_i + Concat_m[ sum_j w^m_ij W^V_m f_j ]
inline Tensor relation_block_forward(const ProposalBatch& batch, const RelationBlockParams& params,
                                     RelationCache* cache = nullptr) {
  params.validate();
  batch.validate(params.config.feature_dim);
  Tensor enc = encode_pair_geometry(batch.boxes, params.config.geometry);
  std::vector<Tensor> features;
  std::vector<RelationHeadCache> caches;
  for (const RelationHead& h : params.heads) {
    RelationHeadCache hc =
        detail::relation_head_forward(batch.appearance, enc, h, params.config.key_dim);
    features.push_back(matmul(hc.weight, hc.value));
    caches.push_back(std::move(hc));
  }
  Tensor out = add(batch.appearance, concat_cols(features));
  if (cache) *cache = RelationCache{batch.appearance, std::move(enc), std::move(caches)};
  return out;
}

// Accumulates parameter gradients into `params` and returns d(loss)/d(input).
inline Tensor relation_block_backward(RelationBlockParams& params, const RelationCache& cache,
                                      const Tensor& upstream) {
  params.validate();
  const std::size_t n = cache.input.rows();
  if (!upstream.same_shape(cache.input) || cache.heads.size() != params.heads.size()) {
    throw ShapeError("relation_block_backward: cache/upstream mismatch");
  }
  const auto& cfg = params.config;
  const double inv_sqrt_dk = 1.0 / std::sqrt(double(cfg.key_dim));
  std::vector<std::size_t> widths(cfg.heads, cfg.value_dim);
  const std::vector<Tensor> head_up = concat_cols_vjp(widths, upstream);

  Tensor d_input = upstream;  // residual path
  for (std::size_t m = 0; m < params.heads.size(); ++m) {
    RelationHead& head = params.heads[m];
    const RelationHeadCache& c = cache.heads[m];

    auto [d_weight, d_value] = matmul_vjp(c.weight, c.value, head_up[m]);

    Tensor d_scores(n, n);
    Tensor d_gate(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (c.fallback[i]) continue;
      double z = 0.0;
      for (std::size_t k = 0; k < n; ++k) z += std::max(c.gate(i, k), 0.0) * c.expo(i, k);
      const double s = dot(c.weight.row(i), d_weight.row(i));
      for (std::size_t k = 0; k < n; ++k) {
        const double d_e = (d_weight(i, k) - s) / z;
        const double g = std::max(c.gate(i, k), 0.0);
        d_scores(i, k) = d_e * g * c.expo(i, k);
        d_gate(i, k) = c.gate(i, k) > 0.0 ? d_e * c.expo(i, k) : 0.0;
      }
    }

    const Tensor d_gate_flat(n * n, 1, d_gate.values());
    head.geometry.accumulate(matmul_tn(d_gate_flat, cache.encoding));

    const Tensor d_raw = scale(d_scores, inv_sqrt_dk);
    auto [d_query, d_key] = matmul_vjp(c.query, transpose(c.key), d_raw);
    d_key = transpose(d_key);

    head.query.accumulate(matmul_tn(d_query, cache.input));
    head.key.accumulate(matmul_tn(d_key, cache.input));
    head.value.accumulate(matmul_tn(d_value, cache.input));
    d_input += matmul(d_query, head.query.value);
    d_input += matmul(d_key, head.key.value);
    d_input += matmul(d_value, head.value.value);
  }
  return d_input;
}

// Sequential application; every block sees the same boxes.
inline Tensor stack_relation_blocks(const ProposalBatch& batch,
                                    std::span<const RelationBlockParams> blocks) {
  ProposalBatch cur = batch;
  for (const RelationBlockParams& p : blocks) cur.appearance = relation_block_forward(cur, p);
  return cur.appearance;
}

}  // namespace subtext
