#include <gtest/gtest.h>

#include <random>

#include "swrn/model.hpp"
#include "swrn/training.hpp"
#include "test_util.hpp"

using namespace swrn;
using namespace swrn::test;

namespace {

template <typename T>
bool params_bitwise_equal(const Parameters<T>& a, const Parameters<T>& b) {
  auto ka = a.kernels(), kb = b.kernels();
  if (ka.size() != kb.size()) return false;
  for (std::size_t i = 0; i < ka.size(); ++i) {
    if (ka[i]->weights != kb[i]->weights || ka[i]->bias != kb[i]->bias)
      return false;
  }
  return true;
}

template <typename T>
ForwardResult<T> forward_with_zero_state(const Parameters<T>& p,
                                         const Tensor<T>& xp, const Tensor<T>& xc,
                                         const Tensor<T>& xn,
                                         RunMode mode = RunMode::infer) {
  const Shape4 hs{xc.shape().n, p.config.channels, xc.shape().h, xc.shape().w};
  return forward(p, xp, xc, xn, Tensor<T>(hs), Tensor<T>(hs), mode);
}

}  // namespace

TEST(InitParams, DeterministicAndZeroBias) {
  ModelConfig cfg;
  Parameters<float> a = init_params(cfg, 42);
  Parameters<float> b = init_params(cfg, 42);
  EXPECT_TRUE(params_bitwise_equal(a, b));
  Parameters<float> c = init_params(cfg, 43);
  EXPECT_FALSE(params_bitwise_equal(a, c));
  for (const auto* k : a.kernels())
    for (float v : k->bias) EXPECT_EQ(v, 0.0f);
}

TEST(ParamCount, ReferenceWiringValues) {
  ModelConfig cfg;
  cfg.channels = 16;
  EXPECT_EQ(init_params(cfg, 1).param_count(), 41152u);
  cfg.channels = 8;
  EXPECT_EQ(init_params(cfg, 1).param_count(), 12536u);
  cfg.channels = 32;
  EXPECT_EQ(init_params(cfg, 1).param_count(), 146768u);
}

TEST(ParamCount, SeedIndependent) {
  ModelConfig cfg;
  EXPECT_EQ(init_params(cfg, 7).param_count(), init_params(cfg, 99).param_count());
}

TEST(ParamCount, AblationOrdering) {
  ModelConfig cfg;
  cfg.variant = Variant::baseline;
  const auto baseline = zero_params<float>(cfg).param_count();
  cfg.variant = Variant::sliding_window;
  const auto sliding = zero_params<float>(cfg).param_count();
  cfg.variant = Variant::full;
  const auto full = zero_params<float>(cfg).param_count();
  EXPECT_LT(baseline, sliding);
  EXPECT_LT(sliding, full);
}

TEST(Forward, ZeroParamsResidualIdentityAllVariants) {
  std::mt19937_64 rng(21);
  for (Variant v : {Variant::baseline, Variant::sliding_window, Variant::full}) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.channels = 8;
    Parameters<float> p = zero_params<float>(cfg);
    Tensor<float> xp = random_tensor({1, 3, 6, 6}, rng, 0.0, 1.0);
    Tensor<float> xc = random_tensor({1, 3, 6, 6}, rng, 0.0, 1.0);
    Tensor<float> xn = random_tensor({1, 3, 6, 6}, rng, 0.0, 1.0);
    ForwardResult<float> r = forward_with_zero_state(p, xp, xc, xn);
    EXPECT_TRUE(bitwise_equal(r.y, bilinear_upsample_x4(xc)))
        << "variant " << variant_name(v);
    EXPECT_EQ(r.h_fwd_next.max_abs(), 0.0f);
    EXPECT_EQ(r.h_bwd_next.max_abs(), 0.0f);
  }
}

TEST(Forward, OutputShapeContract) {
  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> p = init_params<float>(cfg, 3);
  std::mt19937_64 rng(5);
  Tensor<float> x = random_tensor({2, 3, 5, 7}, rng, 0.0, 1.0);
  ForwardResult<float> r = forward_with_zero_state(p, x, x, x);
  EXPECT_EQ(r.y.shape(), (Shape4{2, 3, 20, 28}));
  EXPECT_EQ(r.h_fwd_next.shape(), (Shape4{2, 8, 5, 7}));
}

TEST(Forward, HiddenStatesNonNegative) {
  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> p = init_params<float>(cfg, 9);
  std::mt19937_64 rng(6);
  Tensor<float> x = random_tensor({1, 3, 6, 6}, rng, 0.0, 1.0);
  Tensor<float> h = random_tensor({1, 8, 6, 6}, rng, 0.0, 0.5);
  ForwardResult<float> r = forward(p, x, x, x, h, h);
  for (float v : r.h_fwd_next) EXPECT_GE(v, 0.0f);
  for (float v : r.h_bwd_next) EXPECT_GE(v, 0.0f);
}

TEST(Forward, BatchConsistencyBitwise) {
  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> p = init_params<float>(cfg, 17);
  std::mt19937_64 rng(8);
  Tensor<float> xb = random_tensor({2, 3, 4, 4}, rng, 0.0, 1.0);
  Tensor<float> hb = random_tensor({2, 8, 4, 4}, rng, 0.0, 0.5);
  ForwardResult<float> batch = forward(p, xb, xb, xb, hb, hb);

  for (std::size_t b = 0; b < 2; ++b) {
    Tensor<float> x({1, 3, 4, 4}), h({1, 8, 4, 4});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t xx = 0; xx < 4; ++xx)
          x.at(0, c, y, xx) = xb.at(b, c, y, xx);
    for (std::size_t c = 0; c < 8; ++c)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t xx = 0; xx < 4; ++xx)
          h.at(0, c, y, xx) = hb.at(b, c, y, xx);
    ForwardResult<float> one = forward(p, x, x, x, h, h);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t xx = 0; xx < 16; ++xx)
          ASSERT_EQ(one.y.at(0, c, y, xx), batch.y.at(b, c, y, xx));
  }
}

TEST(Forward, NonFullVariantsIgnoreHiddenArgs) {
  std::mt19937_64 rng(23);
  for (Variant v : {Variant::baseline, Variant::sliding_window}) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.channels = 8;
    Parameters<float> p = init_params<float>(cfg, 4);
    Tensor<float> x = random_tensor({1, 3, 4, 4}, rng, 0.0, 1.0);
    Tensor<float> h0({1, 8, 4, 4});
    Tensor<float> h1 = random_tensor({1, 8, 4, 4}, rng, 0.0, 1.0);
    ForwardResult<float> a = forward(p, x, x, x, h0, h0);
    ForwardResult<float> b = forward(p, x, x, x, h1, h1);
    EXPECT_TRUE(bitwise_equal(a.y, b.y)) << "variant " << variant_name(v);
  }
}

TEST(Forward, ShapeMismatchNamesLayer) {
  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> p = init_params<float>(cfg, 1);
  Tensor<float> x({1, 3, 4, 4});
  Tensor<float> h_bad({1, 5, 4, 4});
  EXPECT_THROW(forward(p, x, x, x, h_bad, h_bad), std::invalid_argument);
}

TEST(Backward, RequiresTrace) {
  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> p = init_params<float>(cfg, 1);
  Tensor<float> x({1, 3, 4, 4});
  ForwardResult<float> r = forward_with_zero_state(p, x, x, x, RunMode::infer);
  Tensor<float> gy({1, 3, 16, 16}), gh({1, 8, 4, 4});
  EXPECT_THROW(backward(p, r.trace, gy, gh, gh), std::invalid_argument);
}

TEST(Backward, ZeroCotangentGivesZeroGrads) {
  ModelConfig cfg;
  cfg.channels = 8;
  Parameters<float> p = init_params<float>(cfg, 2);
  std::mt19937_64 rng(31);
  Tensor<float> x = random_tensor({1, 3, 4, 4}, rng, 0.0, 1.0);
  ForwardResult<float> r = forward_with_zero_state(p, x, x, x, RunMode::train);
  Tensor<float> gy({1, 3, 16, 16}), gh({1, 8, 4, 4});
  BackwardResult<float> b = backward(p, r.trace, gy, gh, gh);
  for (const auto* k : b.grads.kernels()) {
    for (float v : k->weights) ASSERT_EQ(v, 0.0f);
    for (float v : k->bias) ASSERT_EQ(v, 0.0f);
  }
  EXPECT_EQ(b.grad_h_fwd.max_abs(), 0.0f);
}

TEST(Backward, BatchAdditivity) {
  // sum-reduced loss over a batch of two identical samples gives twice the
  // single-sample gradient
  ModelConfig cfg;
  cfg.channels = 4;
  cfg.layers_f1 = cfg.layers_f2 = cfg.layers_f3 = 4;
  Parameters<double> p = init_params<double>(cfg, 5);
  std::mt19937_64 rng(41);
  Tensor<double> x1 = random_tensor<double>({1, 3, 4, 4}, rng, 0.0, 1.0);
  Tensor<double> h1 = random_tensor<double>({1, 4, 4, 4}, rng, 0.0, 0.5);
  Tensor<double> gy1 = random_tensor<double>({1, 3, 16, 16}, rng);
  Tensor<double> gh1({1, 4, 4, 4});

  Tensor<double> x2({2, 3, 4, 4}), h2({2, 4, 4, 4}), gy2({2, 3, 16, 16});
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < x1.size(); ++i) x2[b * x1.size() + i] = x1[i];
    for (std::size_t i = 0; i < h1.size(); ++i) h2[b * h1.size() + i] = h1[i];
    for (std::size_t i = 0; i < gy1.size(); ++i) gy2[b * gy1.size() + i] = gy1[i];
  }
  Tensor<double> gh2({2, 4, 4, 4});

  auto r1 = forward(p, x1, x1, x1, h1, h1, RunMode::train);
  auto r2 = forward(p, x2, x2, x2, h2, h2, RunMode::train);
  auto b1 = backward(p, r1.trace, gy1, gh1, gh1);
  auto b2 = backward(p, r2.trace, gy2, gh2, gh2);

  auto k1 = b1.grads.kernels();
  auto k2 = b2.grads.kernels();
  for (std::size_t k = 0; k < k1.size(); ++k)
    for (std::size_t i = 0; i < k1[k]->weights.size(); ++i)
      ASSERT_NEAR(k2[k]->weights[i], 2.0 * k1[k]->weights[i],
                  1e-9 * std::max(1.0, std::abs(k1[k]->weights[i])));
}

// Full-model gradient check at one step: d(Charbonnier)/d(every weight)
// against central finite differences, in double precision.
TEST(Backward, FiniteDifferenceFullModel) {
  ModelConfig cfg;
  cfg.channels = 4;
  Parameters<double> p = init_params<double>(cfg, 77);
  std::mt19937_64 rng(55);
  Tensor<double> xp = random_tensor<double>({1, 3, 4, 4}, rng, 0.0, 1.0);
  Tensor<double> xc = random_tensor<double>({1, 3, 4, 4}, rng, 0.0, 1.0);
  Tensor<double> xn = random_tensor<double>({1, 3, 4, 4}, rng, 0.0, 1.0);
  Tensor<double> h = random_tensor<double>({1, 4, 4, 4}, rng, 0.0, 0.3);
  Tensor<double> target = random_tensor<double>({1, 3, 16, 16}, rng, 0.0, 1.0);

  auto loss_of = [&](const Parameters<double>& q) {
    auto r = forward(q, xp, xc, xn, h, h, RunMode::infer);
    return charbonnier_loss(r.y, target, 1e-6).first;
  };

  auto r = forward(p, xp, xc, xn, h, h, RunMode::train);
  auto [l, gy] = charbonnier_loss(r.y, target, 1e-6);
  Tensor<double> gh({1, 4, 4, 4});
  BackwardResult<double> grads = backward(p, r.trace, gy, gh, gh);

  const double step = 1e-6;
  auto pk = p.kernels();
  auto gk = grads.grads.kernels();
  const auto names = p.kernel_names();
  for (std::size_t k = 0; k < pk.size(); ++k) {
    std::vector<double> fd(pk[k]->weights.size());
    for (std::size_t i = 0; i < pk[k]->weights.size(); ++i) {
      Parameters<double> q = p;
      q.kernels()[k]->weights[i] += step;
      const double lp = loss_of(q);
      q.kernels()[k]->weights[i] -= 2 * step;
      fd[i] = (lp - loss_of(q)) / (2 * step);
    }
    EXPECT_LT(rel_norm_diff(gk[k]->weights, fd), 1e-4) << names[k];
  }
}
