// Copyright 2026 The shrinknas Authors. All Rights Reserved.
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
#include <limits>
#include <numbers>
#include <vector>

#include "shrinknas/error.hpp"
#include "shrinknas/ops.hpp"
#include "shrinknas/optim.hpp"
#include "shrinknas/tape.hpp"
#include "test_util.hpp"

namespace shrinknas {
namespace {

using testing::check_gradients;
using testing::random_tensor;

constexpr double kRelTol = 1e-5;

TEST(Conv2d, SumOfOnesAtCenter) {
  const Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor y = ops::conv2d(x, w, {.stride = 1, .padding = 1});
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_DOUBLE_EQ(y.data()[4], 9.0);
  EXPECT_DOUBLE_EQ(y.data()[0], 4.0);
}

TEST(Conv2d, IdentityKernel) {
  Rng rng(1);
  const Tensor x = random_tensor({1, 1, 5, 5}, rng, false);
  Tensor w = Tensor::zeros({1, 1, 3, 3});
  w.data()[4] = 1.0;
  const Tensor y = ops::conv2d(x, w, {.padding = 1});
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, OutputSizeFormula) {
  EXPECT_EQ(ops::conv_output_size(16, 5, {.stride = 2, .padding = 4, .dilation = 2}), 8u);
  EXPECT_EQ(ops::conv_output_size(7, 3, {.stride = 2, .padding = 1}), 4u);
  EXPECT_EQ(ops::conv_output_size(8, 1, {.stride = 1}), 8u);
}

TEST(Conv2d, ShapeErrorsNameTheDimension) {
  const Tensor x = Tensor::zeros({1, 3, 4, 4});
  const Tensor w = Tensor::zeros({2, 2, 3, 3});
  try {
    ops::conv2d(x, w);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("dim"), std::string::npos);
  }
  EXPECT_THROW(ops::conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 5, 5})), ShapeError);
  EXPECT_THROW(ops::conv2d(x, Tensor::zeros({4, 1, 1, 1}), {.groups = 2}), ShapeError);
}

TEST(Conv2d, WeightGradientMatchesFiniteDifferences) {
  Rng rng(2);
  const Tensor x = random_tensor({1, 2, 5, 5}, rng, false);
  const Tensor w = random_tensor({3, 2, 3, 3}, rng);
  const auto r = check_gradients([&] { return ops::sum(ops::conv2d(x, w, {.padding = 1})); }, {w});
  EXPECT_LT(r.max_rel, 1e-6) << r.worst;
}

TEST(Conv2d, AllArgumentCombinationsPassGradientCheck) {
  Rng rng(3);
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t dilation : {1u, 2u}) {
      for (std::size_t groups : {1u, 2u}) {
        const Tensor x = random_tensor({2, 4, 7, 7}, rng);
        const Tensor w = random_tensor({4, 4 / groups, 3, 3}, rng);
        const ops::Conv2dArgs args{.stride = stride, .padding = dilation, .dilation = dilation, .groups = groups};
        const std::size_t ho = ops::conv_output_size(7, 3, args);
        const Tensor proj = random_tensor({2, 4, ho, ho}, rng, false);
        const auto r = check_gradients([&] { return ops::sum(ops::mul(ops::conv2d(x, w, args), proj)); }, {x, w});
        EXPECT_LT(r.max_rel, kRelTol) << stride << dilation << groups << " " << r.worst;
      }
    }
  }
}

TEST(Softmax, UniformAtEqualLogits) {
  const Tensor s = ops::softmax(Tensor({3}, {0, 0, 0}), 0);
  for (double v : s.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RowsSumToOneAndLogMatches) {
  Rng rng(4);
  const Tensor x = random_tensor({5, 7}, rng, false, 30.0);
  const Tensor s = ops::softmax(x, 1);
  const Tensor ls = ops::log_softmax(x, 1);
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      total += s.data()[r * 7 + c];
      EXPECT_NEAR(ls.data()[r * 7 + c], std::log(s.data()[r * 7 + c]), 1e-10);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, NonFiniteLogitsAreRejected) {
  const Tensor bad({2}, {0.0, std::numeric_limits<double>::infinity()});
  EXPECT_THROW(ops::softmax(bad, 0), NumericalError);
  EXPECT_THROW(ops::log_softmax(Tensor({1}, {std::nan("")}), 0), NumericalError);
  const std::vector<int> labels{0};
  EXPECT_THROW(ops::cross_entropy(Tensor({1, 2}, {std::nan(""), 0.0}), labels), NumericalError);
}

TEST(CrossEntropy, UniformPredictionIsLogClasses) {
  const std::vector<int> labels{0, 3};
  EXPECT_NEAR(ops::cross_entropy(Tensor::zeros({2, 4}), labels).item(), std::log(4.0), 1e-15);
  EXPECT_THROW(ops::cross_entropy(Tensor::zeros({2, 4}), std::vector<int>{0, 4}), ShapeError);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOnehotOverBatch) {
  Rng rng(5);
  Tensor logits = random_tensor({3, 4}, rng, true, 2.0);
  const std::vector<int> labels{1, 0, 3};
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(ops::cross_entropy(logits, labels));
  }
  const Tensor p = ops::softmax(logits.detach(), 1);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double expected = (p.data()[b * 4 + c] - (static_cast<int>(c) == labels[b] ? 1.0 : 0.0)) / 3.0;
      EXPECT_NEAR(logits.grad()[b * 4 + c], expected, 1e-15);
    }
  }
  logits.clear_grad();
  const auto r = check_gradients([&] { return ops::cross_entropy(logits, labels); }, {logits});
  EXPECT_LT(r.max_rel, 1e-6) << r.worst;
}

TEST(Elementwise, TrivialExamples) {
  const Tensor c = ops::concat({Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 4, 4})});
  EXPECT_EQ(c.shape(), (Shape{1, 5, 4, 4}));
  const Tensor r = ops::relu(Tensor({2}, {-1.0, 2.0}));
  EXPECT_EQ(r.data()[0], 0.0);
  EXPECT_EQ(r.data()[1], 2.0);
  const Tensor pooled = ops::global_avg_pool(Tensor::full({1, 2, 3, 3}, 1.5));
  EXPECT_EQ(pooled.shape(), (Shape{1, 2}));
  EXPECT_DOUBLE_EQ(pooled.data()[0], 1.5);
  EXPECT_DOUBLE_EQ(pooled.data()[1], 1.5);
  EXPECT_THROW(ops::add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
  EXPECT_THROW(ops::concat({Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 2, 3, 4})}), ShapeError);
}

TEST(Elementwise, EveryOpPassesGradientCheck) {
  Rng rng(6);
  const Tensor a = random_tensor({2, 3, 4, 4}, rng);
  const Tensor b = random_tensor({2, 3, 4, 4}, rng);
  const Tensor c = random_tensor({2, 2, 4, 4}, rng);
  const Tensor gain = random_tensor({3}, rng);
  const Tensor bias = random_tensor({3}, rng);
  const Tensor w = random_tensor({5, 3}, rng);
  const Tensor wb = random_tensor({5}, rng);
  const Tensor mix = random_tensor({3}, rng);
  const Tensor flat = random_tensor({12}, rng);
  const Tensor proj4 = random_tensor({2, 3, 4, 4}, rng, false);
  const Tensor proj5 = random_tensor({2, 5, 4, 4}, rng, false);
  const Tensor proj_lin = random_tensor({2, 5}, rng, false);
  const std::vector<std::size_t> idx{0, 3, 3, 11};
  const Tensor proj_idx = random_tensor({4}, rng, false);
  const Tensor proj_sm = random_tensor({3, 4}, rng, false);
  const Tensor logits = random_tensor({3, 4}, rng);

  auto expect_ok = [](const testing::GradCheck& r, const char* what) {
    EXPECT_LT(r.max_rel, kRelTol) << what << ": " << r.worst;
  };
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::add(a, b), proj4)); }, {a, b}), "add");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(a, b)); }, {a, b}), "mul");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::scale(a, -1.7), proj4)); }, {a}), "scale");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::relu(a), proj4)); }, {a}), "relu");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::concat({a, c}), proj5)); }, {a, c}), "concat");
  expect_ok(check_gradients(
                [&] { return ops::sum(ops::mul(ops::affine_channel_norm(a, gain, bias), proj4)); }, {a, gain, bias}),
            "affine_channel_norm");
  expect_ok(check_gradients([&] {
              return ops::sum(ops::mul(ops::linear(ops::global_avg_pool(a), w, wb), proj_lin));
            }, {a, w, wb}),
            "global_avg_pool + linear");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::gather(flat, idx), proj_idx)); }, {flat}), "gather");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::weighted_sum({a, b, proj4}, mix), proj4)); },
                            {a, b, mix}),
            "weighted_sum");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::softmax(logits, 1), proj_sm)); }, {logits}),
            "softmax");
  expect_ok(check_gradients([&] { return ops::sum(ops::mul(ops::log_softmax(logits, 0), proj_sm)); }, {logits}),
            "log_softmax");
}

TEST(Backward, SumOfParameterGivesOnes) {
  const Tensor p = Tensor::full({2, 3}, 0.5, true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(ops::sum(p));
  for (double g : p.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SquareAtThree) {
  const Tensor x = Tensor::scalar(3.0, true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(ops::mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, SharedSubexpressionsAccumulate) {
  const Tensor x = Tensor::scalar(1.25, true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(ops::add(x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
}

TEST(Backward, UnreachableGradientsUntouched) {
  const Tensor x = Tensor::scalar(1.0, true);
  const Tensor y = Tensor::scalar(2.0, true);
  y.grad_mut()[0] = 42.0;
  Tape tape;
  TapeScope scope(tape);
  const Tensor unused = ops::scale(y, 3.0);
  tape.backward(ops::scale(x, 5.0));
  EXPECT_DOUBLE_EQ(x.grad()[0], 5.0);
  EXPECT_DOUBLE_EQ(y.grad()[0], 42.0);
  (void)unused;
}

TEST(Backward, NonScalarRootRejected) {
  const Tensor x = Tensor::zeros({3}, true);
  Tape tape;
  TapeScope scope(tape);
  EXPECT_THROW(tape.backward(ops::relu(x)), ShapeError);
}

TEST(Backward, NoGradScopeRecordsNothing) {
  const Tensor x = Tensor::zeros({3}, true);
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradScope off;
    ops::sum(ops::relu(x));
  }
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Backward, CompositeNetworkMatchesFiniteDifferences) {
  Rng rng(8);
  const Tensor x = random_tensor({2, 2, 6, 6}, rng, false);
  const Tensor w1 = random_tensor({4, 2, 3, 3}, rng, true, 0.5);
  const Tensor gain = random_tensor({4}, rng);
  const Tensor bias = random_tensor({4}, rng);
  const Tensor fw = random_tensor({3, 4}, rng);
  const Tensor fb = random_tensor({3}, rng);
  const std::vector<int> labels{2, 0};
  auto loss = [&] {
    Tensor h = ops::conv2d(x, w1, {.padding = 1});
    h = ops::relu(ops::affine_channel_norm(h, gain, bias));
    return ops::cross_entropy(ops::linear(ops::global_avg_pool(h), fw, fb), labels);
  };
  const auto r = check_gradients(loss, {w1, gain, bias, fw, fb});
  EXPECT_LT(r.max_rel, kRelTol) << r.worst;
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  AdamState s;
  s.reset(3);
  adam_step(p, g, s, {.lr = 0.01});
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p[1], -2.0 + 0.01, 1e-9);
  EXPECT_NEAR(p[2], 3.0 - 0.01, 1e-7);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.0, 0.0};
  AdamState s;
  s.reset(2);
  for (int i = 0; i < 3; ++i) adam_step(p, g, s, {.lr = 0.1});
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, QuadraticDecreasesEveryStep) {
  std::vector<double> x{1.0};
  AdamState s;
  s.reset(1);
  double f = x[0] * x[0];
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> g{2.0 * x[0]};
    adam_step(x, g, s, {.lr = 0.1});
    const double next = x[0] * x[0];
    EXPECT_LT(next, f) << "step " << i;
    f = next;
  }
}

TEST(Adam, MaskFreezesValuesAndMoments) {
  std::vector<double> p{1.0, 1.0};
  const std::vector<double> g{1.0, 1.0};
  const std::vector<std::uint8_t> mask{1, 0};
  AdamState s;
  s.reset(2);
  adam_step(p, g, s, {.lr = 0.1}, mask);
  EXPECT_LT(p[0], 1.0);
  EXPECT_EQ(p[1], 1.0);
  EXPECT_EQ(s.m[1], 0.0);
  EXPECT_EQ(s.v[1], 0.0);
}

TEST(Adam, WeightDecayFoldsIntoGradient) {
  std::vector<double> p{2.0};
  const std::vector<double> g{0.0};
  AdamState s;
  s.reset(1);
  adam_step(p, g, s, {.lr = 0.1, .weight_decay = 0.5});
  EXPECT_NEAR(p[0], 1.9, 1e-7);
}

TEST(Optim, CosineScheduleEndsAtZero) {
  EXPECT_DOUBLE_EQ(cosine_lr(0.05, 0, 100), 0.05);
  EXPECT_NEAR(cosine_lr(0.05, 50, 100), 0.025, 1e-15);
  EXPECT_EQ(cosine_lr(0.05, 100, 100), 0.0);
  EXPECT_EQ(cosine_lr(0.05, 150, 100), 0.0);
}

TEST(Optim, ClipGradNorm) {
  Parameter a{"a", Tensor::zeros({2}, true)};
  a.tensor.grad_mut()[0] = 3.0;
  a.tensor.grad_mut()[1] = 4.0;
  std::vector<Parameter*> ps{&a};
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(a.tensor.grad()[0], 0.6, 1e-12);
  EXPECT_NEAR(a.tensor.grad()[1], 0.8, 1e-12);
}

}  // namespace
}  // namespace shrinknas
