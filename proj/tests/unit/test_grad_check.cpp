#include <gtest/gtest.h>

#include <vector>

#include "mfcm/grad_check.hpp"
#include "mfcm/ops.hpp"
#include "oracles.hpp"

namespace {

using namespace mfcm;

TEST(RelativeError, FloorsTheDenominator) {
  EXPECT_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_NEAR(relative_error(2.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(relative_error(1e-12, 0.0), 1e-4, 1e-18);
}

TEST(GradCheck, LinearFunctionIsExactToRounding) {
  const Tensor x = testkit::random_tensor({3, 4}, 1, -1, 1, true);
  const Tensor w = testkit::random_tensor({3, 4}, 2);
  const auto r = grad_check([&](Tape& t) { return sum(t, mul(t, x, w)); }, {x});
  EXPECT_EQ(r.entries_checked, 12u);
  EXPECT_LT(r.max_rel_error, 1e-8);
}

// y = 3x with a backward rule that reports 4x, as a deliberately broken op.
Tensor broken_scale(Tape& tape, const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y.data()[i] = 3.0 * x.data()[i];
  tape.record(y, {x}, [x, y]() {
    auto gy = y.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 4.0 * gy[i];
  });
  return y;
}

TEST(GradCheck, DetectsCorruptedBackward) {
  const Tensor x = testkit::random_tensor({5}, 3, -1, 1, true);
  const Tensor w = testkit::random_tensor({5}, 4);
  const auto r = grad_check([&](Tape& t) { return sum(t, mul(t, broken_scale(t, x), w)); }, {x});
  EXPECT_GT(r.max_rel_error, 1e-2);
}

TEST(GradCheck, LeavesParametersUnchanged) {
  const Tensor x = testkit::random_tensor({4}, 5, -1, 1, true);
  const Tensor before = x.clone();
  grad_check([&](Tape& t) { return sum(t, mul(t, x, x)); }, {x});
  EXPECT_EQ(testkit::max_abs_diff(x, before), 0.0);
}

}  // namespace
