// Copyright 2026 The auroraclr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "auroraclr/ops.hpp"
#include "gradcheck_cases.hpp"
#include "support.hpp"

namespace auroraclr {
namespace {

using V = std::vector<double>;
V to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }
V grad_of(const Tensor& t) { return {t.grad().begin(), t.grad().end()}; }

TEST(Matmul, IdentityLeft) {
  const Tensor i2 = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(to_vec(matmul(i2, m)), (V{1, 2, 3, 4}));
}

TEST(Matmul, SelectorRow) {
  EXPECT_EQ(to_vec(matmul(Tensor::matrix(1, 2, {1, 0}), Tensor::matrix(2, 1, {2, 5}))), V{2});
}

TEST(Matmul, RightIdentityIsExact) {
  Rng rng(3);
  const Tensor a = oracle::random_tensor({4, 3}, rng);
  const Tensor i3 = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(to_vec(matmul(a, i3)), to_vec(a));
}

TEST(Matmul, SumGradientIsOnesTimesBTransposed) {
  Rng rng(17);
  TapeScope scope;
  Tensor a = oracle::random_tensor({3, 4}, rng);
  a.set_requires_grad(true);
  const Tensor b = oracle::random_tensor({4, 2}, rng);
  backward(sum(matmul(a, b)));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(a.grad()[i * 4 + k], b[k * 2] + b[k * 2 + 1], 1e-15);
    }
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    (void)matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
  }
}

TEST(Conv2d, IdentityKernel) {
  const Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(to_vec(conv2d(x, Tensor({1, 1, 1, 1}, {1}), 1, 0)), to_vec(x));
}

TEST(Conv2d, SummationKernel) {
  const Tensor y = conv2d(Tensor::full({1, 1, 3, 3}, 1.0), Tensor::full({1, 1, 3, 3}, 1.0), 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.item(), 9.0);
}

TEST(Conv2d, MatchesDirectLoops) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 1 + rng.uniform_int(2), cin = 1 + rng.uniform_int(3),
                      cout = 1 + rng.uniform_int(3), h = 3 + rng.uniform_int(6),
                      w = 3 + rng.uniform_int(6), k = 1 + rng.uniform_int(3),
                      stride = 1 + rng.uniform_int(3), pad = rng.uniform_int(2);
    const Tensor x = oracle::random_tensor({b, cin, h, w}, rng);
    const Tensor kern = oracle::random_tensor({cout, cin, k, k}, rng);
    const V expect = oracle::conv2d(to_vec(x), b, cin, h, w, to_vec(kern), cout, k, k, stride, pad);
    const V got = to_vec(conv2d(x, kern, stride, pad));
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-12);
  }
}

TEST(Conv2d, OutputGeometry) {
  const Tensor y = conv2d(Tensor::zeros({2, 3, 8, 8}), Tensor::zeros({4, 3, 3, 3}), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{2, 4, 4, 4}));
}

TEST(Conv2d, KernelLargerThanPaddedInput) {
  EXPECT_THROW(conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 5, 5}), 1, 1),
               DimensionError);
  EXPECT_NO_THROW(conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 4, 4}), 1, 1));
}

TEST(Conv2d, RandomGradientsMatchFiniteDifferences) {
  Rng rng(29);
  Tensor x = oracle::random_tensor({2, 3, 8, 8}, rng);
  Tensor k = oracle::random_tensor({4, 3, 3, 3}, rng);
  const Tensor w = oracle::random_tensor({2 * 4 * 6 * 6}, rng);
  auto loss = [&] { return testing::weighted_sum(conv2d(x, k, 1, 0), w); };
  EXPECT_TRUE(gradient_check_parameter(loss, x).passed);
  EXPECT_TRUE(gradient_check_parameter(loss, k).passed);
}

TEST(Relu, SignCases) {
  EXPECT_EQ(to_vec(relu(Tensor::vector({-1, 0, 2}))), (V{0, 0, 2}));
  EXPECT_EQ(to_vec(relu(Tensor::vector({-3, -0.5}))), (V{0, 0}));
}

TEST(Relu, GradientIsIndicator) {
  TapeScope scope;
  Tensor x = Tensor::vector({-1, 3}, true);
  backward(sum(relu(x)));
  EXPECT_EQ(grad_of(x), (V{0, 1}));
}

TEST(Relu, SubgradientAtZeroIsZero) {
  TapeScope scope;
  Tensor x = Tensor::vector({0.0}, true);
  backward(sum(relu(x)));
  EXPECT_EQ(grad_of(x), V{0});
}

TEST(Elementwise, ExpLogRoundTrip) {
  const V got = to_vec(exp(log(Tensor::vector({2, 3}))));
  EXPECT_NEAR(got[0], 2.0, 1e-15);
  EXPECT_NEAR(got[1], 3.0, 1e-15);
}

TEST(Elementwise, ScalarBroadcast) {
  EXPECT_EQ(to_vec(Tensor::vector({1, 2}) + 1.0), (V{2, 3}));
  EXPECT_EQ(to_vec(2.0 * Tensor::vector({1, 2})), (V{2, 4}));
}

TEST(Elementwise, LogDerivative) {
  TapeScope scope;
  Tensor x = Tensor::vector({2}, true);
  backward(sum(log(x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.5);
}

TEST(Elementwise, DomainErrors) {
  EXPECT_THROW(log(Tensor::vector({1, 0})), DomainError);
  EXPECT_THROW(log(Tensor::vector({-1})), DomainError);
  EXPECT_THROW(Tensor::vector({1, 2}) / Tensor::vector({1, 0}), DomainError);
  EXPECT_THROW(Tensor::vector({1}) / 0.0, DomainError);
}

TEST(Elementwise, ShapeMismatch) {
  EXPECT_THROW(Tensor::vector({1, 2}) + Tensor::vector({1, 2, 3}), DimensionError);
}

TEST(Reductions, Examples) {
  EXPECT_EQ(mean(Tensor::vector({1, 2, 3})).item(), 2.0);
  const Tensor pooled = max_pool2d(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), 2, 2, 0);
  EXPECT_EQ(pooled.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(pooled.item(), 4.0);
}

TEST(Reductions, MeanGradientIsUniform) {
  TapeScope scope;
  Tensor x = Tensor::vector({5, -1, 2, 7}, true);
  backward(mean(x));
  EXPECT_EQ(grad_of(x), (V{0.25, 0.25, 0.25, 0.25}));
}

TEST(Reductions, AxisSums) {
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(to_vec(sum(x, 0)), (V{5, 7, 9}));
  EXPECT_EQ(to_vec(sum(x, 1)), (V{6, 15}));
  EXPECT_EQ(to_vec(mean(x, 1)), (V{2, 5}));
  EXPECT_THROW(sum(x, 2), DimensionError);
}

TEST(Reductions, GlobalAveragePool) {
  const Tensor y = global_avg_pool(Tensor({1, 2, 2, 2}, {1, 2, 3, 4, 10, 10, 10, 10}));
  EXPECT_EQ(to_vec(y), (V{2.5, 10}));
}

TEST(Reductions, MaxPoolGradientRoutesToArgmax) {
  TapeScope scope;
  Tensor x({1, 1, 2, 2}, {1, 5, 3, 4}, true);
  backward(sum(max_pool2d(x, 2, 2, 0)));
  EXPECT_EQ(grad_of(x), (V{0, 1, 0, 0}));
}

TEST(L2Normalize, Examples) {
  const V got = to_vec(l2_normalize_rows(Tensor::matrix(1, 2, {3, 4})));
  EXPECT_NEAR(got[0], 0.6, 1e-15);
  EXPECT_NEAR(got[1], 0.8, 1e-15);
  const V unit{0.6, 0.8};
  const V again = to_vec(l2_normalize_rows(Tensor::matrix(1, 2, unit)));
  EXPECT_NEAR(again[0], 0.6, 1e-15);
  EXPECT_NEAR(again[1], 0.8, 1e-15);
}

TEST(L2Normalize, RowNormsAndIdempotence) {
  Rng rng(31);
  const Tensor x = oracle::random_tensor({5, 8}, rng);
  const Tensor once = l2_normalize_rows(x);
  const Tensor twice = l2_normalize_rows(once);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 8; ++j) s += once[i * 8 + j] * once[i * 8 + j];
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
  }
  for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(once[i], twice[i], 1e-12);
}

TEST(L2Normalize, ZeroRowIsDegenerate) {
  EXPECT_THROW(l2_normalize_rows(Tensor::matrix(2, 2, {1, 1, 0, 0})), DegenerateEmbeddingError);
}

TEST(BatchNorm, TrainNormalisesPerChannel) {
  Rng rng(37);
  const Tensor x = oracle::random_tensor({4, 2, 3, 3}, rng, -2, 5);
  BatchStatistics stats;
  const Tensor y = batch_norm_train(x, Tensor::full({2}, 1.0), Tensor::zeros({2}), 0.0, &stats);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t p = 0; p < 9; ++p) m += y[(n * 2 + c) * 9 + p];
    m /= 36;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t p = 0; p < 9; ++p) v += std::pow(y[(n * 2 + c) * 9 + p] - m, 2);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 36, 1.0, 1e-12);
  }
  EXPECT_EQ(stats.count, 36u);
}

TEST(BatchNorm, EvalUsesGivenStatistics) {
  const Tensor x({1, 1, 1, 2}, {3, 5});
  const V rm{1}, rv{4};
  const Tensor y = batch_norm_eval(x, Tensor::vector({2}), Tensor::vector({1}), rm, rv, 0.0);
  EXPECT_EQ(to_vec(y), (V{3, 5}));
}

TEST(LogSumExp, MaskedRowsMatchDirectFormula) {
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 700, 0, 701});
  const std::vector<std::uint8_t> keep{1, 0, 1, 1, 1, 1};
  const V got = to_vec(masked_logsumexp_rows(x, keep));
  EXPECT_NEAR(got[0], std::log(std::exp(1.0) + std::exp(3.0)), 1e-14);
  EXPECT_NEAR(got[1], 701.0 + std::log(1.0 + std::exp(-1.0) + std::exp(-701.0)), 1e-12);
}

TEST(GatherColumns, PicksOnePerRow) {
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> cols{2, 0};
  EXPECT_EQ(to_vec(gather_columns(x, cols)), (V{3, 4}));
}

TEST(GradientCheck, StencilAcrossKinkIsRefined) {
  // relu at 3e-6: the 1e-5 stencil reaches the kink, the 1e-6 one does not.
  Tensor x({1}, {3e-6});
  const CheckReport r = gradient_check_parameter([&] { return sum(relu(x)); }, x);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_EQ(r.refined, 1u);
  GradientCheckOptions fixed;
  fixed.refinements = 0;
  EXPECT_FALSE(gradient_check_parameter([&] { return sum(relu(x)); }, x, fixed).passed);
}

TEST(GradientCheck, WrongGradientStillFails) {
  // The recorded graph differentiates 3x while every later evaluation is 2x.
  Tensor x({2}, {0.4, -1.3});
  int calls = 0;
  const CheckReport r =
      gradient_check_parameter([&] { return sum(x * (calls++ == 0 ? 3.0 : 2.0)); }, x);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_relative_error, 1.0 / 3.0, 1e-6);
  EXPECT_EQ(r.refined, 0u);
}

// Every op in the catalogue on 20 random instances.
class OpGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradients, TwentyRandomInstances) {
  const auto cases = testing::gradient_cases();
  const auto& c = cases[GetParam()];
  Rng rng(derive_seed(1234, GetParam()));
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto& r : c.run(rng)) {
      EXPECT_LE(r.max_relative_error, c.tolerance) << c.name << " trial " << trial;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Catalogue, OpGradients,
                         ::testing::Range<std::size_t>(0, testing::gradient_cases().size()),
                         [](const ::testing::TestParamInfo<std::size_t>& info) {
                           return testing::gradient_cases()[info.param].name;
                         });

}  // namespace
}  // namespace auroraclr
