#include <gtest/gtest.h>

#include <cmath>

#include "subtext/gradcheck.hpp"
#include "subtext/numerics.hpp"
#include "support.hpp"

using namespace subtext;
using subtext::testing::Rng;

TEST(Tensor, ShapeChecks) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW((Tensor{{1, 2}, {3}}), ShapeError);
  Tensor a(2, 3);
  EXPECT_THROW(a += Tensor(3, 2), ShapeError);
  EXPECT_THROW(matmul(Tensor(2, 3), Tensor(2, 3)), ShapeError);
  EXPECT_THROW(add(Tensor(2, 3), Tensor(3, 2)), ShapeError);
}

TEST(Matmul, Examples) {
  Rng rng(1);
  const Tensor x = Tensor::uniform(3, 4, -1, 1, rng);
  EXPECT_EQ(matmul(Tensor::identity(3), x), x);
  EXPECT_EQ(matmul(Tensor{{1, 2}, {3, 4}}, Tensor{{1}, {1}}), (Tensor{{3}, {7}}));
  const Tensor a = Tensor::uniform(3, 4, -1, 1, rng), b = Tensor::uniform(2, 4, -1, 1, rng);
  const Tensor direct = matmul(a, transpose(b));
  const Tensor nt = matmul_nt(a, b);
  for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(direct[i], nt[i], 1e-15);
  const Tensor c = Tensor::uniform(3, 2, -1, 1, rng);
  const Tensor tn = matmul_tn(a, c), ref = matmul(transpose(a), c);
  for (std::size_t i = 0; i < tn.size(); ++i) EXPECT_NEAR(tn[i], ref[i], 1e-15);
}

TEST(Softmax, Examples) {
  const Tensor y = softmax_rows(Tensor{{2, 2, 2, 2, 2}});
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(y[i], 0.2, 1e-15);
  const Tensor z = softmax_rows(Tensor{{0, std::log(3.0)}});
  EXPECT_NEAR(z[0], 0.25, 1e-15);
  EXPECT_NEAR(z[1], 0.75, 1e-15);
  const Tensor big = softmax_rows(Tensor{{1000, 1000}});
  EXPECT_NEAR(big[0], 0.5, 1e-15);
}

TEST(Elementwise, Examples) {
  EXPECT_EQ(relu(Tensor{{-1, 2}}), (Tensor{{0, 2}}));
  const Tensor n = l2_normalize_rows(Tensor{{3, 4}});
  EXPECT_NEAR(n[0], 0.6, 1e-15);
  EXPECT_NEAR(n[1], 0.8, 1e-15);
  EXPECT_EQ(l2_normalize_rows(Tensor{{0, 0}}), (Tensor{{0, 0}}));
  EXPECT_EQ(l2_normalize_rows_vjp(Tensor{{0, 0}}, Tensor{{1, 1}}), (Tensor{{0, 0}}));
  EXPECT_EQ(relu_vjp(Tensor{{0.0, 1.0}}, Tensor{{5, 5}}), (Tensor{{0, 5}}));
  EXPECT_EQ(add(Tensor{{1, 2}}, Tensor{{3, 4}}), (Tensor{{4, 6}}));
  EXPECT_EQ(scale(Tensor{{1, 2}}, -2), (Tensor{{-2, -4}}));
}

TEST(Concat, SixteenHeadsMakeWidth1024) {
  std::vector<Tensor> blocks(16, Tensor(3, 64, 1.0));
  const Tensor c = concat_cols(blocks);
  EXPECT_EQ(c.rows(), 3u);
  EXPECT_EQ(c.cols(), 1024u);
  std::vector<Tensor> ragged{Tensor(3, 2), Tensor(2, 2)};
  EXPECT_THROW(concat_cols(ragged), ShapeError);
  const std::vector<std::size_t> widths{1, 2};
  EXPECT_THROW(concat_cols_vjp(widths, Tensor(2, 4)), ShapeError);
}

TEST(FiniteDiff, LinearMapIsExact) {
  Rng rng(3);
  const Tensor w = Tensor::uniform(4, 3, -1, 1, rng);
  const Tensor x = Tensor::uniform(4, 3, -1, 1, rng);
  EXPECT_LT(finite_diff_check([&](const Tensor& v) { return inner(w, v); }, x, w, 1e-5), 1e-10);
}

TEST(FiniteDiff, SoftmaxCrossEntropyToy) {
  Rng rng(4);
  const Tensor x = Tensor::uniform(1, 5, -2, 2, rng);
  const std::size_t target = 2;
  auto loss = [&](const Tensor& v) { return -std::log(softmax_rows(v)[target]); };
  Tensor grad = softmax_rows(x);
  grad[target] -= 1.0;
  EXPECT_LT(finite_diff_check(loss, x, grad, 1e-5), 1e-6);
}

TEST(FiniteDiff, DetectsWrongGradient) {
  const Tensor x{{1.0, 2.0}};
  const Tensor wrong{{2.0, 2.0}};
  EXPECT_GT(finite_diff_check([](const Tensor& v) { return v[0] * v[0] + v[1]; }, x, wrong), 0.1);
  EXPECT_THROW(finite_diff_check([](const Tensor&) { return 0.0; }, x, x, 0.0),
               std::invalid_argument);
}

TEST(Invariants, SoftmaxRowsSumToOneAndNormalizedRowsUnit) {
  Rng rng(5);
  for (int s = 0; s < 20; ++s) {
    const Tensor x = Tensor::uniform(6, 9, -30, 30, rng);
    const Tensor y = softmax_rows(x);
    const Tensor n = l2_normalize_rows(x);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double sum = 0, sq = 0;
      for (double v : y.row(r)) sum += v;
      for (double v : n.row(r)) sq += v * v;
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
    }
  }
}

TEST(Invariants, GradientAccumulates) {
  Rng rng(6);
  Parameter p(Tensor::uniform(2, 3, -1, 1, rng));
  const Tensor g1 = Tensor::uniform(2, 3, -1, 1, rng), g2 = Tensor::uniform(2, 3, -1, 1, rng);
  p.accumulate(g1);
  p.accumulate(g2);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(p.grad[i], g1[i] + g2[i]);
  p.zero_grad();
  EXPECT_EQ(p.grad, Tensor(2, 3));
}

// Every primitive vjp against central differences, over 20 seeds.
class PrimitiveVjp : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveVjp, MatchesFiniteDifferences) {
  Rng rng(static_cast<std::uint64_t>(GetParam()));
  EXPECT_LT(gradcheck::matmul_error(rng), 1e-6);
  EXPECT_LT(gradcheck::softmax_error(rng), kPrimitiveTolerance);
  EXPECT_LT(gradcheck::relu_error(rng), kPrimitiveTolerance);
  EXPECT_LT(gradcheck::l2_normalize_error(rng), kPrimitiveTolerance);
  EXPECT_LT(gradcheck::concat_error(rng), kPrimitiveTolerance);
  EXPECT_LT(gradcheck::add_scale_error(rng), kPrimitiveTolerance);
}

INSTANTIATE_TEST_SUITE_P(Seeds, PrimitiveVjp, ::testing::Range(0, 20));
