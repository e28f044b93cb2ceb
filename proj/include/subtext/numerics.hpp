#pragma once

// Dense row-major matrices with forward ops and their vector-Jacobian
// products. No broadcasting: every shape mismatch throws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subtext {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), v_(std::move(values)) {
    if (v_.size() != rows_ * cols_) throw ShapeError("Tensor: value count does not match shape");
  }
  Tensor(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("Tensor: ragged initializer");
      v_.insert(v_.end(), r.begin(), r.end());
    }
  }

  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  template <class Rng>
  static Tensor uniform(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(rows, cols);
    for (double& x : t.v_) x = dist(rng);
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  std::span<double> row(std::size_t r) { return {v_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {v_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }

  void require_same_shape(const Tensor& o, const char* what) const {
    if (!same_shape(o)) {
      throw ShapeError(std::string(what) + ": shape mismatch " + shape_str() + " vs " +
                       o.shape_str());
    }
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

// Value plus an additive gradient accumulator.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void accumulate(const Tensor& g) { grad += g; }
  void zero_grad() { grad = Tensor(value.rows(), value.cols()); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Tensor transpose(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

// ---- matmul ---------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_str() + " * " + b.shape_str());
  }
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

// a * b^T without materialising the transpose.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape_str() + " * (" + b.shape_str() + ")^T");
  }
  Tensor out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

// a^T * b.
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: (" + a.shape_str() + ")^T * " + b.shape_str());
  }
  Tensor out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

// Returns (upstream * b^T, a^T * upstream).
inline std::pair<Tensor, Tensor> matmul_vjp(const Tensor& a, const Tensor& b,
                                            const Tensor& upstream) {
  if (upstream.rows() != a.rows() || upstream.cols() != b.cols()) {
    throw ShapeError("matmul_vjp: upstream " + upstream.shape_str());
  }
  return {matmul_nt(upstream, b), matmul_tn(a, upstream)};
}

// ---- elementwise ------------------------------------------------------------

inline Tensor add(const Tensor& x, const Tensor& y) {
  Tensor out = x;
  out += y;
  return out;
}

inline std::pair<Tensor, Tensor> add_vjp(const Tensor& upstream) { return {upstream, upstream}; }

inline Tensor scale(const Tensor& x, double c) {
  Tensor out = x;
  for (double& v : out.values()) v *= c;
  return out;
}

inline Tensor scale_vjp(const Tensor& upstream, double c) { return scale(upstream, c); }

inline Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

// Subgradient 0 at x == 0.
inline Tensor relu_vjp(const Tensor& x, const Tensor& upstream) {
  x.require_same_shape(upstream, "relu_vjp");
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  return out;
}

// ---- softmax ----------------------------------------------------------------

inline Tensor softmax_rows(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto o = out.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) z += (o[c] = std::exp(in[c] - mx));
    for (double& v : o) v /= z;
  }
  return out;
}

// Takes the softmax output y: dx = y * (u - <u, y>).
inline Tensor softmax_rows_vjp(const Tensor& y, const Tensor& upstream) {
  y.require_same_shape(upstream, "softmax_rows_vjp");
  Tensor out(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const double s = dot(y.row(r), upstream.row(r));
    for (std::size_t c = 0; c < y.cols(); ++c) out(r, c) = y(r, c) * (upstream(r, c) - s);
  }
  return out;
}

// ---- L2 normalisation -------------------------------------------------------

// Zero rows stay zero.
inline Tensor l2_normalize_rows(const Tensor& x) {
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double n = std::sqrt(dot(x.row(r), x.row(r)));
    if (n == 0.0) continue;
    for (double& v : out.row(r)) v /= n;
  }
  return out;
}

// dx = (u - y <u, y>) / ||x||; zero rows get zero gradient.
inline Tensor l2_normalize_rows_vjp(const Tensor& x, const Tensor& upstream) {
  x.require_same_shape(upstream, "l2_normalize_rows_vjp");
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double n = std::sqrt(dot(x.row(r), x.row(r)));
    if (n == 0.0) continue;
    double uy = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) uy += upstream(r, c) * x(r, c) / n;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = (upstream(r, c) - (x(r, c) / n) * uy) / n;
    }
  }
  return out;
}

// ---- concat -----------------------------------------------------------------

inline Tensor concat_cols(std::span<const Tensor> blocks) {
  if (blocks.empty()) throw ShapeError("concat_cols: no blocks");
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const Tensor& b : blocks) {
    if (b.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += b.cols();
  }
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t off = 0;
    for (const Tensor& b : blocks) {
      std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + off);
      off += b.cols();
    }
  }
  return out;
}

inline std::vector<Tensor> concat_cols_vjp(std::span<const std::size_t> widths,
                                           const Tensor& upstream) {
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  if (total != upstream.cols()) throw ShapeError("concat_cols_vjp: widths do not sum to upstream");
  std::vector<Tensor> out;
  std::size_t off = 0;
  for (std::size_t w : widths) {
    Tensor g(upstream.rows(), w);
    for (std::size_t r = 0; r < upstream.rows(); ++r)
      for (std::size_t c = 0; c < w; ++c) g(r, c) = upstream(r, off + c);
    out.push_back(std::move(g));
    off += w;
  }
  return out;
}

// ---- finite differences -----------------------------------------------------

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// Central differences of a scalar function at `point`, compared coordinate by
// coordinate with `analytic`. Returns the max relative error.
inline double finite_diff_check(const std::function<double(const Tensor&)>& fn,
                                const Tensor& point, const Tensor& analytic,
                                double epsilon = 1e-5) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_check: epsilon must be positive");
  point.require_same_shape(analytic, "finite_diff_check");
  Tensor x = point;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + epsilon;
    const double fp = fn(x);
    x[i] = saved - epsilon;
    const double fm = fn(x);
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

// Fixed random direction used to reduce a tensor-valued map to a scalar:
// f(x) = <projection, g(x)>, whose gradient flows back from `projection`.
template <class Rng>
Tensor random_projection(std::size_t rows, std::size_t cols, Rng& rng) {
  return Tensor::uniform(rows, cols, -1.0, 1.0, rng);
}

inline double inner(const Tensor& a, const Tensor& b) {
  a.require_same_shape(b, "inner");
  return dot(a.values(), b.values());
}

}  // namespace subtext
