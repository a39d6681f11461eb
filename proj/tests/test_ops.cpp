#include <gtest/gtest.h>

#include <random>

#include "swrn/ops.hpp"
#include "test_util.hpp"

using namespace swrn;
using namespace swrn::test;

TEST(Conv2dForward, IdentityKernel) {
  Tensor<float> in({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  ConvKernel<float> k(1, 1);
  k.w(0, 0, 1, 1) = 1.0f;  // center tap only
  Tensor<float> out = conv2d_forward(in, k);
  EXPECT_TRUE(bitwise_equal(out, in));
}

TEST(Conv2dForward, AllOnesBoundary) {
  Tensor<float> in({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  ConvKernel<float> k(1, 1);
  for (auto& w : k.weights) w = 1.0f;
  Tensor<float> out = conv2d_forward(in, k);
  // corners see 4 taps, edges 6, center 9
  EXPECT_FLOAT_EQ(out.at(0, 0, 0, 0), 4.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0, 1), 6.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 1, 1), 9.0f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 2, 2), 4.0f);
}

TEST(Conv2dForward, MatchesOracleRandom) {
  std::mt19937_64 rng(7);
  Tensor<float> in = random_tensor({2, 5, 6, 7}, rng);
  ConvKernel<float> k = random_kernel(4, 5, rng);
  Tensor<float> got = conv2d_forward(in, k);
  Tensor<float> want = conv2d_oracle(in, k);
  EXPECT_LT(rel_norm_diff(got, want), 1e-6);
}

TEST(Conv2dForward, OracleSweepSmallShapes) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 25; ++trial) {
    Shape4 s{dim(rng), dim(rng), dim(rng), dim(rng)};
    Tensor<float> in = random_tensor(s, rng);
    ConvKernel<float> k = random_kernel(dim(rng), s.c, rng);
    EXPECT_LT(rel_norm_diff(conv2d_forward(in, k), conv2d_oracle(in, k)), 1e-6);
  }
}

TEST(Conv2dForward, ShapeMismatchThrows) {
  Tensor<float> in({1, 2, 4, 4});
  ConvKernel<float> k(3, 5);
  try {
    conv2d_forward(in, k);
    FAIL() << "expected shape error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2"), std::string::npos);
    EXPECT_NE(msg.find("5"), std::string::npos);
  }
}

TEST(Conv2dForward, Deterministic) {
  std::mt19937_64 rng(3);
  Tensor<float> in = random_tensor({1, 3, 5, 5}, rng);
  ConvKernel<float> k = random_kernel(2, 3, rng);
  EXPECT_TRUE(bitwise_equal(conv2d_forward(in, k), conv2d_forward(in, k)));
}

TEST(Conv2dBackward, ZeroCotangent) {
  std::mt19937_64 rng(5);
  Tensor<float> in = random_tensor({1, 2, 4, 4}, rng);
  ConvKernel<float> k = random_kernel(3, 2, rng);
  Tensor<float> gz({1, 3, 4, 4});
  ConvGrads<float> g = conv2d_backward(in, k, gz);
  EXPECT_FLOAT_EQ(g.input.max_abs(), 0.0f);
  for (float v : g.kernel.weights) EXPECT_FLOAT_EQ(v, 0.0f);
  for (float v : g.kernel.bias) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(Conv2dBackward, OnePixelChainRule) {
  // 1x1 image: only the center weight participates.
  const float v = 0.7f, w = -1.3f, g = 2.5f;
  Tensor<float> in({1, 1, 1, 1}, {v});
  ConvKernel<float> k(1, 1);
  k.w(0, 0, 1, 1) = w;
  Tensor<float> gz({1, 1, 1, 1}, {g});
  ConvGrads<float> grads = conv2d_backward(in, k, gz);
  EXPECT_FLOAT_EQ(grads.input[0], w * g);
  EXPECT_FLOAT_EQ(grads.kernel.w(0, 0, 1, 1), v * g);
  EXPECT_FLOAT_EQ(grads.kernel.bias[0], g);
}

// Central finite differences (double precision) on the scalar map
// L(theta) = <grad_out, conv(input, kernel)>.
TEST(Conv2dBackward, FiniteDifferenceOracle) {
  std::mt19937_64 rng(11);
  Tensor<double> in = random_tensor<double>({1, 3, 5, 4}, rng);
  ConvKernel<double> k = random_kernel<double>(2, 3, rng);
  Tensor<double> gz = random_tensor<double>({1, 2, 5, 4}, rng);

  ConvGrads<double> analytic = conv2d_backward(in, k, gz);
  const double step = 1e-3;
  auto loss = [&](const Tensor<double>& x, const ConvKernel<double>& kk) {
    Tensor<double> y = conv2d_forward(x, kk);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * gz[i];
    return acc;
  };

  for (std::size_t i = 0; i < in.size(); ++i) {
    Tensor<double> p = in, m = in;
    p[i] += step;
    m[i] -= step;
    const double fd = (loss(p, k) - loss(m, k)) / (2 * step);
    EXPECT_NEAR(fd, analytic.input[i], 1e-4 * std::max(1.0, std::abs(fd)));
  }
  for (std::size_t i = 0; i < k.weights.size(); ++i) {
    ConvKernel<double> p = k, m = k;
    p.weights[i] += step;
    m.weights[i] -= step;
    const double fd = (loss(in, p) - loss(in, m)) / (2 * step);
    EXPECT_NEAR(fd, analytic.kernel.weights[i],
                1e-4 * std::max(1.0, std::abs(fd)));
  }
  for (std::size_t i = 0; i < k.bias.size(); ++i) {
    ConvKernel<double> p = k, m = k;
    p.bias[i] += step;
    m.bias[i] -= step;
    const double fd = (loss(in, p) - loss(in, m)) / (2 * step);
    EXPECT_NEAR(fd, analytic.kernel.bias[i], 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Relu, Basics) {
  Tensor<float> in({1, 1, 1, 3}, {-1, 0, 2});
  Tensor<float> out = relu(in);
  EXPECT_FLOAT_EQ(out[0], 0);
  EXPECT_FLOAT_EQ(out[1], 0);
  EXPECT_FLOAT_EQ(out[2], 2);

  std::mt19937_64 rng(1);
  Tensor<float> pos = random_tensor({2, 2, 3, 3}, rng, 0.001, 1.0);
  EXPECT_TRUE(bitwise_equal(relu(pos), pos));
}

TEST(Relu, BackwardGating) {
  Tensor<float> in({1, 1, 1, 2}, {-1, 2});
  Tensor<float> g({1, 1, 1, 2}, {5, 5});
  Tensor<float> out = relu_backward(in, g);
  EXPECT_FLOAT_EQ(out[0], 0);
  EXPECT_FLOAT_EQ(out[1], 5);

  // tie at exactly zero propagates zero
  Tensor<float> z({1, 1, 1, 1}, {0.0f});
  Tensor<float> gz({1, 1, 1, 1}, {3.0f});
  EXPECT_FLOAT_EQ(relu_backward(z, gz)[0], 0.0f);
}

TEST(ConcatChannels, ShapesAndRoundTrip) {
  std::mt19937_64 rng(2);
  Tensor<float> a = random_tensor({1, 3, 4, 5}, rng);
  Tensor<float> b = random_tensor({1, 3, 4, 5}, rng);
  Tensor<float> c = random_tensor({1, 16, 4, 5}, rng);
  Tensor<float> cat = concat_channels(a, b, c);
  EXPECT_EQ(cat.shape(), (Shape4{1, 22, 4, 5}));
  EXPECT_TRUE(bitwise_equal(slice_channels(cat, 0, 3), a));
  EXPECT_TRUE(bitwise_equal(slice_channels(cat, 3, 3), b));
  EXPECT_TRUE(bitwise_equal(slice_channels(cat, 6, 16), c));
}

TEST(ConcatChannels, SingleTensorIdentity) {
  std::mt19937_64 rng(4);
  Tensor<float> a = random_tensor({2, 4, 3, 3}, rng);
  EXPECT_TRUE(bitwise_equal(concat_channels<float>({&a}), a));
}

TEST(ConcatChannels, MismatchThrows) {
  Tensor<float> a({1, 3, 4, 4}), b({1, 3, 4, 5});
  EXPECT_THROW(concat_channels(a, b), std::invalid_argument);
  Tensor<float> c({2, 3, 4, 4});
  EXPECT_THROW(concat_channels(a, c), std::invalid_argument);
}

TEST(BilinearUpsample, ConstantPreserved) {
  Tensor<float> in({1, 2, 3, 5}, std::vector<float>(30, 0.37f));
  Tensor<float> out = bilinear_upsample_x4(in);
  EXPECT_EQ(out.shape(), (Shape4{1, 2, 12, 20}));
  for (float v : out) EXPECT_FLOAT_EQ(v, 0.37f);
}

TEST(BilinearUpsample, ClosedFormTwoPixelRow) {
  // half-pixel centers: src = (d+0.5)/4 - 0.5, edge clamped
  Tensor<float> in({1, 1, 1, 2}, {0.0f, 1.0f});
  Tensor<float> out = bilinear_upsample_x4(in);
  ASSERT_EQ(out.shape(), (Shape4{1, 1, 4, 8}));
  const float expect[8] = {0.0f, 0.0f, 0.125f, 0.375f, 0.625f, 0.875f, 1.0f, 1.0f};
  for (int x = 0; x < 8; ++x) EXPECT_FLOAT_EQ(out.at(0, 0, 0, x), expect[x]);
  // rows identical (no vertical variation)
  for (int y = 1; y < 4; ++y)
    for (int x = 0; x < 8; ++x)
      EXPECT_FLOAT_EQ(out.at(0, 0, y, x), out.at(0, 0, 0, x));
}

TEST(BilinearUpsample, ShapeAndRange) {
  std::mt19937_64 rng(9);
  Tensor<float> in = random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0);
  Tensor<float> out = bilinear_upsample_x4(in);
  EXPECT_EQ(out.shape(), (Shape4{1, 3, 64, 64}));
  float lo = 1e9, hi = -1e9;
  for (float v : in) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (float v : out) {
    EXPECT_GE(v, lo - 1e-6);
    EXPECT_LE(v, hi + 1e-6);
  }
}

TEST(DepthToSpace, ShapeAndIndexFormula) {
  Tensor<float> in({1, 16, 1, 1});
  for (std::size_t k = 0; k < 16; ++k) in[k] = (float)k;
  Tensor<float> out = depth_to_space_x4(in);
  ASSERT_EQ(out.shape(), (Shape4{1, 1, 4, 4}));
  // the 4x4 block reads 0..15 row-major
  for (std::size_t dy = 0; dy < 4; ++dy)
    for (std::size_t dx = 0; dx < 4; ++dx)
      EXPECT_FLOAT_EQ(out.at(0, 0, dy, dx), (float)(4 * dy + dx));
}

TEST(DepthToSpace, ShapeContract48) {
  Tensor<float> in({1, 48, 5, 7});
  EXPECT_EQ(depth_to_space_x4(in).shape(), (Shape4{1, 3, 20, 28}));
}

TEST(DepthToSpace, RoundTripBitwise) {
  std::mt19937_64 rng(17);
  Tensor<float> in = random_tensor({2, 32, 3, 4}, rng);
  EXPECT_TRUE(bitwise_equal(space_to_depth_x4(depth_to_space_x4(in)), in));
  Tensor<float> hr = random_tensor({1, 3, 8, 8}, rng);
  EXPECT_TRUE(bitwise_equal(depth_to_space_x4(space_to_depth_x4(hr)), hr));
}

TEST(DepthToSpace, IndivisibleChannelsThrows) {
  Tensor<float> in({1, 15, 2, 2});
  EXPECT_THROW(depth_to_space_x4(in), std::invalid_argument);
}
