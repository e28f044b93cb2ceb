#include <gtest/gtest.h>

#include "subtext/gradcheck.hpp"

namespace subtext {
namespace {

TEST(Gradcheck, DefaultSeedPassesEverySuite) {
  const GradcheckReport r = run_gradcheck(0);
  EXPECT_EQ(r.seeds, 10u);
  ASSERT_EQ(r.suites.size(), 11u);
  for (const auto& s : r.suites) {
    EXPECT_TRUE(s.passed()) << s.name << ": " << s.max_rel_error << " >= " << s.tolerance;
    EXPECT_GE(s.max_rel_error, 0.0);
  }
  EXPECT_TRUE(r.passed());
  EXPECT_GT(r.mining.queries, 0u);
}

TEST(Gradcheck, ToleranceTiers) {
  const GradcheckReport r = run_gradcheck(0, 1);
  for (const auto& s : r.suites) {
    const bool composite = s.name == "relation_block" || s.name == "project_inscl" ||
                           s.name == "relation_project_inscl";
    EXPECT_EQ(s.tolerance, composite ? kCompositeTolerance : kPrimitiveTolerance) << s.name;
  }
}

TEST(Gradcheck, Deterministic) {
  const GradcheckReport a = run_gradcheck(3, 2);
  const GradcheckReport b = run_gradcheck(3, 2);
  ASSERT_EQ(a.suites.size(), b.suites.size());
  for (std::size_t i = 0; i < a.suites.size(); ++i)
    EXPECT_EQ(a.suites[i].max_rel_error, b.suites[i].max_rel_error);
}

TEST(Gradcheck, SmoothDrawRejectsKinks) {
  gradcheck::Rng rng(0);
  int calls = 0;
  const auto [x] = gradcheck::draw_smooth(
      [&] { return std::tuple{++calls}; }, [](int v) { return v >= 3; });
  EXPECT_EQ(x, 3);
  EXPECT_THROW(gradcheck::draw_smooth([] { return std::tuple{0}; }, [](int) { return false; }),
               std::runtime_error);
}

TEST(Gradcheck, BrokenGradientIsDetected) {
  const Tensor x{{0.3, -0.7}};
  const Tensor wrong{{2 * 0.3, 2 * -0.7 * 1.01}};
  const double err = finite_diff_check(
      [](const Tensor& v) { return v[0] * v[0] + v[1] * v[1]; }, x, wrong, kGradcheckEpsilon);
  EXPECT_GT(err, 1e-3);
}

}  // namespace
}  // namespace subtext
