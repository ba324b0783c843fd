#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "csi4/autodiff/layers.hpp"
#include "csi4/common/errors.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace csi4 {
namespace {

using ad::Graph;
using ad::LayerKind;
using ad::LayerSpec;
using ad::Shape;
using ad::Tensor;
using ad::Var;

TEST(Layers, LinearWithIdentityWeights) {
  Graph g;
  Tensor x = Tensor::matrix({{1, -2, 3}, {0.5f, 4, -1}});
  Tensor eye = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  Var y = ad::linear(g.constant(x), g.constant(eye), g.constant(Tensor(Shape{3})));
  EXPECT_EQ(y.value(), x);
}

TEST(Layers, LeakyReluValues) {
  Graph g;
  Var y = ad::leaky_relu(g.constant(Tensor::from({-1, 1, 0})), 0.2f);
  EXPECT_FLOAT_EQ(y.value()[0], -0.2f);
  EXPECT_FLOAT_EQ(y.value()[1], 1.0f);
  EXPECT_FLOAT_EQ(y.value()[2], 0.0f);
}

TEST(Layers, LeakyReluGradientAtZeroIsOne) {
  Graph g;
  Var x = g.leaf(Tensor::from({0}));
  auto grads = g.gradients(ad::sum(ad::leaky_relu(x, 0.2f)), std::vector<Var>{x}, false);
  EXPECT_FLOAT_EQ(grads[0].value()[0], 1.0f);
}

TEST(Layers, UnitConvIsIdentity) {
  Rng rng(5, "conv-id");
  Tensor x = testing::random_tensor({2, 4, 3, 1}, rng);
  Graph g;
  Var y = ad::conv2d(g.constant(x), g.constant(Tensor(Shape{1, 1}, 1.0f)),
                     g.constant(Tensor(Shape{1})), 1, 1, 0);
  EXPECT_EQ(y.value(), x);
}

TEST(Layers, ConvMatchesSlidingWindow) {
  std::vector<double> plane(16);
  for (std::size_t i = 0; i < 16; ++i) plane[i] = double(i) * 0.5 - 3.0;
  Tensor x(Shape{1, 4, 4, 1});
  for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<float>(plane[i]);
  Graph g;
  Var y = ad::conv2d(g.constant(x), g.constant(Tensor(Shape{4, 1}, 1.0f)),
                     g.constant(Tensor(Shape{1})), 2, 2, 0);
  auto want = testing::sliding_window_xcorr(plane, 4, 4, std::vector<double>(4, 1.0), 2, 2);
  ASSERT_EQ(y.value().shape(), (Shape{1, 2, 2, 1}));
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(y.value()[i], want[i], 1e-6);
}

TEST(Layers, ConvRandomKernelsMatchSlidingWindowWithPadding) {
  Rng rng(6, "conv-rand");
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t h = 3 + rng.below(4), w = 3 + rng.below(4), k = 1 + rng.below(3);
    const std::size_t pad = rng.below(2), stride = 1 + rng.below(2);
    Tensor x = testing::random_tensor({1, h, w, 1}, rng);
    Tensor kern = testing::random_tensor({k * k, 1}, rng);
    std::vector<double> padded((h + 2 * pad) * (w + 2 * pad), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) padded[(r + pad) * (w + 2 * pad) + c + pad] = x[r * w + c];
    }
    std::vector<double> kd(kern.data().begin(), kern.data().end());
    auto want = testing::sliding_window_xcorr(padded, h + 2 * pad, w + 2 * pad, kd, k, stride);
    Graph g;
    Var y = ad::conv2d(g.constant(x), g.constant(kern), g.constant(Tensor(Shape{1})), k, stride, pad);
    ASSERT_EQ(y.value().size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(y.value()[i], want[i], 1e-5);
  }
}

TEST(Layers, MaxpoolTakesWindowMaxima) {
  Tensor x(Shape{1, 2, 4, 1}, std::vector<float>{1, 5, 2, 0, 3, -1, 7, 4});
  Graph g;
  Var y = ad::maxpool2d(g.constant(x), 2, 2);
  EXPECT_EQ(y.value(), Tensor(Shape{1, 1, 2, 1}, std::vector<float>{5, 7}));
}

TEST(Layers, ShapeMismatchIsDimensionError) {
  Graph g;
  std::vector<Var> p{g.constant(Tensor(Shape{3, 2})), g.constant(Tensor(Shape{2}))};
  ad::LayerContext ctx;
  EXPECT_THROW(ad::layer_forward(LayerSpec::linear(3, 2), p, g.constant(Tensor(Shape{2, 4})), ctx),
               DimensionError);
}

TEST(Layers, SpecValidation) {
  EXPECT_THROW(LayerSpec::linear(0, 3).validate(), ContractError);
  EXPECT_THROW(LayerSpec::dropout(1.0f).validate(), ContractError);
  EXPECT_THROW(LayerSpec::leaky(0.0f).validate(), ContractError);
  EXPECT_THROW(LayerSpec::leaky(1.0f).validate(), ContractError);
  LayerSpec bogus;
  bogus.kind = static_cast<LayerKind>(99);
  EXPECT_THROW(bogus.validate(), ContractError);
}

class GradientCheck : public ::testing::TestWithParam<LayerKind> {};

TEST_P(GradientCheck, HundredRandomTrials) {
  Rng rng(2024, std::string("gradcheck/") + ad::to_string(GetParam()));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto r = testing::check_trial(testing::make_trial(GetParam(), rng));
    worst = std::max(worst, r.max_error());
    EXPECT_LE(r.max_error(), 1e-3) << "trial " << trial;
  }
  RecordProperty("worst_rel_error", std::to_string(worst));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, GradientCheck, ::testing::ValuesIn(testing::all_layer_kinds()),
                         [](const auto& info) { return std::string(ad::to_string(info.param)); });

TEST(Dropout, InvertedScalingPreservesMean) {
  for (float rate : {0.1f, 0.3f, 0.5f}) {
    Rng rng(77, "dropout-mean");
    Graph g;
    Var y = ad::dropout(g.constant(Tensor(Shape{100000}, 1.0f)), rate, ad::Mode::train, &rng);
    double s = 0.0;
    for (float v : y.value().data()) s += v;
    EXPECT_NEAR(s / 1e5, 1.0, 0.01) << "rate " << rate;
  }
}

TEST(Dropout, EvalModeIsIdentity) {
  Graph g;
  Tensor x = Tensor::from({1, 2, 3});
  EXPECT_EQ(ad::dropout(g.constant(x), 0.5f, ad::Mode::eval, nullptr).value(), x);
}

TEST(BatchNorm, TrainModeNormalizesPerChannel) {
  Rng rng(8, "bn");
  Tensor x = testing::random_tensor({6, 3, 4, 2}, rng, 3.0f);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += (i % 2 == 0) ? 5.0f : -2.0f;
  Graph g;
  std::optional<ad::BatchNormUpdate> update;
  Var y = ad::batchnorm(g.constant(x), g.constant(Tensor(Shape{2}, 1.0f)),
                        g.constant(Tensor(Shape{2})), Tensor(Shape{2}), Tensor(Shape{2}, 1.0f),
                        ad::Mode::train, &update);
  const std::size_t per = x.size() / 2;
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t i = c; i < x.size(); i += 2) s += y.value()[i];
    const double mu = s / double(per);
    for (std::size_t i = c; i < x.size(); i += 2) s2 += (y.value()[i] - mu) * (y.value()[i] - mu);
    EXPECT_LE(std::abs(mu), 1e-5);
    EXPECT_NEAR(s2 / double(per), 1.0, 1e-4);
  }
  ASSERT_TRUE(update.has_value());
  // Running mean moves 10 % of the way toward the batch mean.
  double batch_mean0 = 0;
  for (std::size_t i = 0; i < x.size(); i += 2) batch_mean0 += x[i];
  EXPECT_NEAR(update->running_mean[0], 0.1 * batch_mean0 / double(per), 1e-4);
}

TEST(BatchNorm, EvalModeUsesRunningStatistics) {
  Graph g;
  Tensor x = Tensor::matrix({{3, 1}, {5, 1}});
  Var y = ad::batchnorm(g.constant(x), g.constant(Tensor(Shape{2}, 2.0f)),
                        g.constant(Tensor::from({0.5f, 0})), Tensor::from({1, 1}),
                        Tensor::from({4, 1}), ad::Mode::eval, nullptr);
  EXPECT_NEAR(y.value().at(0, 0), 2.0 * (3 - 1) / std::sqrt(4 + 1e-5) + 0.5, 1e-5);
  EXPECT_NEAR(y.value().at(1, 1), 0.0, 1e-6);
}

}  // namespace
}  // namespace csi4
