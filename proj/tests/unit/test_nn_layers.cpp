// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "radloc/nn/layers.hpp"
#include "support/testing.hpp"

namespace radloc {
namespace {

using nn::Mode;
using nn::Shape;
using nn::Tensor;
using testing::random_tensor;

constexpr double kGradTol = 1e-4;

/// Conv input whose entries stay away from the relu/pool kinks is not
/// needed here: the conv itself is smooth.
TEST(Conv, NaiveLoopOracle) {
  Rng rng(1);
  nn::Conv conv(1, 4, 3, 1);
  conv.weight = random_tensor(conv.weight.shape, rng);
  conv.bias = random_tensor(conv.bias.shape, rng);
  const Tensor x = random_tensor({2, 1, 5, 26, 1}, rng);
  const Tensor y = conv.forward(x, Mode::kInfer);
  ASSERT_EQ(y.shape, (Shape{2, 4, 5, 24, 1}));
  double worst = 0.0;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t a = 0; a < 24; ++a) {
          double s = conv.bias.values[o];
          for (std::size_t k = 0; k < 3; ++k) s += conv.weight.values[o * 3 + k] * x.values[(b * 5 + r) * 26 + a + k];
          worst = std::max(worst, std::abs(s - y.values[((b * 4 + o) * 5 + r) * 24 + a]));
        }
  EXPECT_LT(worst, 1e-10);
}

TEST(Conv, VolumetricNaiveOracle) {
  Rng rng(2);
  nn::Conv conv(2, 3, 3, 3);
  conv.weight = random_tensor(conv.weight.shape, rng);
  conv.bias = random_tensor(conv.bias.shape, rng);
  const std::size_t C = 2, R = 2, A = 6, V = 5;
  const Tensor x = random_tensor({1, C, R, A, V}, rng);
  const Tensor y = conv.forward(x, Mode::kInfer);
  ASSERT_EQ(y.shape, (Shape{1, 3, R, A - 2, V - 2}));
  auto xi = [&](std::size_t c, std::size_t r, std::size_t a, std::size_t v) {
    return x.values[((c * R + r) * A + a) * V + v];
  };
  double worst = 0.0;
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t a = 0; a + 2 < A; ++a)
        for (std::size_t v = 0; v + 2 < V; ++v) {
          double s = conv.bias.values[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < 3; ++i)
              for (std::size_t j = 0; j < 3; ++j)
                s += conv.weight.values[((o * C + c) * 3 + i) * 3 + j] * xi(c, r, a + i, v + j);
          worst = std::max(worst, std::abs(s - y.values[((o * R + r) * (A - 2) + a) * (V - 2) + v]));
        }
  EXPECT_LT(worst, 1e-10);
}

TEST(Conv, ShapeErrors) {
  nn::Conv conv(1, 4, 3, 1);
  EXPECT_THROW(conv.output_shape({2, 5, 26, 1}), Error);
  EXPECT_THROW(conv.output_shape({1, 5, 2, 1}), Error);
  EXPECT_THROW(conv.backward(Tensor({1, 4, 5, 24, 1}), true), Error);
}

TEST(Gradients, ConvOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::Conv conv(2, 3, 3, seed % 2 ? 3 : 1);
    conv.weight = random_tensor(conv.weight.shape, rng);
    conv.bias = random_tensor(conv.bias.shape, rng);
    const auto r = testing::check_layer_gradients(conv, random_tensor({2, 2, 2, 6, 4}, rng), rng);
    EXPECT_LT(r.worst(), kGradTol) << "seed " << seed;
  }
}

TEST(Gradients, DenseOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::Dense d(7, 3);
    d.weight = random_tensor(d.weight.shape, rng);
    d.bias = random_tensor(d.bias.shape, rng);
    EXPECT_LT(testing::check_layer_gradients(d, random_tensor({4, 7}, rng), rng).worst(), kGradTol);
  }
}

TEST(Gradients, BatchNormOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::BatchNorm bn(3);
    bn.gamma = random_tensor(bn.gamma.shape, rng);
    bn.beta = random_tensor(bn.beta.shape, rng);
    EXPECT_LT(testing::check_layer_gradients(bn, random_tensor({4, 3, 2, 5, 1}, rng), rng).worst(),
              kGradTol)
        << "seed " << seed;
  }
}

TEST(Gradients, FrozenBatchNormUsesRunningStatistics) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::BatchNorm bn(3);
    bn.gamma = random_tensor(bn.gamma.shape, rng);
    bn.running_mean = random_tensor(bn.running_mean.shape, rng);
    for (double& v : bn.running_var.values) v = 0.5 + std::abs(v);
    bn.set_frozen(true);
    Tensor x = random_tensor({4, 3, 2, 5, 1}, rng);
    const Tensor probe = random_tensor(x.shape, rng);
    auto objective = [&] { return testing::dot(bn.forward(x, Mode::kTrain), probe); };
    bn.forward(x, Mode::kTrain);
    const Tensor gx = bn.backward(probe, true);
    EXPECT_LT(testing::gradient_discrepancy(gx.values, testing::numeric_gradient(x.values, objective, 1e-5)),
              kGradTol);
    EXPECT_FALSE(bn.gamma.has_grad());
  }
}

/// Inputs kept at least `gap` away from zero so central differences never
/// straddle the relu kink.
Tensor away_from_zero(Shape shape, Rng& rng, double gap) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (double& v : t.values) v = v >= 0 ? v + gap : v - gap;
  return t;
}

TEST(Gradients, ReluOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::Relu relu;
    EXPECT_LT(testing::check_layer_gradients(relu, away_from_zero({3, 2, 4, 5, 1}, rng, 1e-3), rng).worst(),
              kGradTol);
  }
}

TEST(Gradients, MaxPoolOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::MaxPool pool(2, seed % 2 ? 2 : 1);
    EXPECT_LT(testing::check_layer_gradients(pool, random_tensor({2, 3, 2, 7, 4}, rng), rng).worst(),
              kGradTol);
  }
}

TEST(Gradients, FlattenOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::Flatten f;
    EXPECT_LT(testing::check_layer_gradients(f, random_tensor({2, 3, 2, 4, 1}, rng), rng).worst(),
              kGradTol);
  }
}

TEST(BatchNorm, TrainOutputIsStandardized) {
  Rng rng(3);
  nn::BatchNorm bn(4);
  Tensor x = random_tensor({8, 4, 5, 6, 1}, rng, 3.0);
  for (double& v : x.values) v += 7.0;
  const Tensor y = bn.forward(x, Mode::kTrain);  // gamma 1, beta 0
  const std::size_t S = 30;
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0.0, q = 0.0;
    for (std::size_t b = 0; b < 8; ++b)
      for (std::size_t i = 0; i < S; ++i) m += y.values[(b * 4 + c) * S + i];
    m /= 8.0 * S;
    for (std::size_t b = 0; b < 8; ++b)
      for (std::size_t i = 0; i < S; ++i) q += std::pow(y.values[(b * 4 + c) * S + i] - m, 2);
    q /= 8.0 * S;
    EXPECT_LT(std::abs(m), 1e-6);
    EXPECT_NEAR(q, 1.0, 1e-5);
  }
}

TEST(BatchNorm, RunningStatisticsMomentum) {
  Rng rng(4);
  nn::BatchNorm bn(1);
  const Tensor x = random_tensor({10, 1, 1, 1, 1}, rng);
  double mean = 0.0;
  for (double v : x.values) mean += v;
  mean /= 10.0;
  double var = 0.0;
  for (double v : x.values) var += (v - mean) * (v - mean);
  bn.forward(x, Mode::kTrain);
  EXPECT_NEAR(bn.running_mean.values[0], 0.1 * mean, 1e-15);
  EXPECT_NEAR(bn.running_var.values[0], 0.9 + 0.1 * var / 9.0, 1e-15);
}

TEST(BatchNorm, ModesAgreeWhenStatisticsMatch) {
  Rng rng(5);
  nn::BatchNorm bn(2, 0.1, 1e-5);
  Tensor x = random_tensor({6, 2, 1, 4, 1}, rng);
  // Set the running statistics to this batch's own (biased) statistics.
  const std::size_t S = 4;
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0.0, q = 0.0;
    for (std::size_t b = 0; b < 6; ++b)
      for (std::size_t i = 0; i < S; ++i) m += x.values[(b * 2 + c) * S + i];
    m /= 6.0 * S;
    for (std::size_t b = 0; b < 6; ++b)
      for (std::size_t i = 0; i < S; ++i) q += std::pow(x.values[(b * 2 + c) * S + i] - m, 2);
    bn.running_mean.values[c] = m;
    bn.running_var.values[c] = q / (6.0 * S);
  }
  nn::BatchNorm copy = bn;
  const Tensor infer = copy.forward(x, Mode::kInfer);
  const Tensor train = bn.forward(x, Mode::kTrain);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(infer.values[i], train.values[i], 1e-12);
}

TEST(MaxPool, RoutesGradientToArgmax) {
  Rng rng(6);
  nn::MaxPool pool(2, 1);
  const Tensor x = random_tensor({2, 3, 2, 9, 1}, rng);
  const Tensor y = pool.forward(x, Mode::kTrain);
  ASSERT_EQ(y.shape, (Shape{2, 3, 2, 4, 1}));
  const Tensor g = random_tensor(y.shape, rng);
  const Tensor dx = pool.backward(g, true);
  double sum_in = 0.0, sum_out = 0.0;
  std::size_t nonzero = 0;
  for (double v : g.values) sum_out += v;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    sum_in += dx.values[i];
    if (dx.values[i] != 0.0) {
      ++nonzero;
      // Only argmax positions receive gradient: the input equals a pooled output.
      EXPECT_NE(std::find(y.values.begin(), y.values.end(), x.values[i]), y.values.end());
    }
  }
  EXPECT_NEAR(sum_in, sum_out, 1e-12);
  EXPECT_EQ(nonzero, y.size());
}

TEST(MaxPool, FirstMaximumWinsTies) {
  nn::MaxPool pool(2, 1);
  Tensor x({1, 1, 1, 2, 1}, 1.0);
  pool.forward(x, Mode::kTrain);
  const Tensor dx = pool.backward(Tensor({1, 1, 1, 1, 1}, 1.0), true);
  EXPECT_EQ(dx.values[0], 1.0);
  EXPECT_EQ(dx.values[1], 0.0);
}

TEST(Layers, BackwardWithoutForwardFails) {
  nn::Dense d(3, 2);
  try {
    d.backward(Tensor({1, 2}), true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
  nn::Relu r;
  EXPECT_THROW(r.backward(Tensor({1, 2}), true), Error);
  nn::MaxPool p(2, 1);
  EXPECT_THROW(p.backward(Tensor({1, 1, 1, 1, 1}), true), Error);
  nn::BatchNorm bn(1);
  EXPECT_THROW(bn.backward(Tensor({1, 1, 1, 1, 1}), true), Error);
}

TEST(Layers, GlorotBounds) {
  Rng rng(7);
  Tensor w({64, 1600});
  nn::glorot_uniform(w, 1600, 64, rng);
  const double bound = std::sqrt(6.0 / (1600 + 64));
  double lo = 1e9, hi = -1e9;
  for (double v : w.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -bound);
  EXPECT_LE(hi, bound);
  EXPECT_LT(lo, -0.9 * bound);
  EXPECT_GT(hi, 0.9 * bound);
}

TEST(Tensor, NonFiniteTripsError) {
  Tensor t({3}, 0.0);
  EXPECT_NO_THROW(t.check_finite("test"));
  t.values[1] = std::nan("");
  try {
    t.check_finite("test");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumerical);
    EXPECT_NE(std::string(e.what()).find("numerical divergence"), std::string::npos);
  }
}

}  // namespace
}  // namespace radloc
