#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "nic/errors.h"
#include "nic/losses.h"
#include "nic/model.h"
#include "nic/ops.h"
#include "gradient_cases.h"
#include "reference_msssim.h"
#include "test_support.h"

namespace nic {
namespace {

using testing::finite_difference_check;
using testing::random_tensor;
using TapeD = Tape<double>;
using TensorD = Tensor<double>;
namespace reference = testing::reference;

double comp(const std::vector<double>& v, double alpha) {
  TapeD tape;
  TensorD x(Shape{1, static_cast<int>(v.size())}, v);
  return compression_loss(tape, x, alpha).item();
}

TEST(CompressionLoss, ScaleExample) {
  const double big = comp({0, 0, 500, 500}, 0.0);
  const double small = comp({0, 0, 0.1, 0.1}, 0.0);
  EXPECT_NEAR(big, small, 1e-9);
  EXPECT_NEAR(big, std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(small, 1.414214, 1e-6);
}

TEST(CompressionLoss, OneHotIsMinimum) { EXPECT_DOUBLE_EQ(comp({1, 0, 0, 0}, 0.0), 1.0); }

TEST(CompressionLoss, SqueezeTerm) {
  EXPECT_NEAR(comp({0, 0, 0.1, 0.1}, 1.0), std::sqrt(2.0) + 0.02 / 0.2, 1e-9);
  EXPECT_NEAR(comp({0, 0, 0.1, 0.1}, 1.0), 1.514214, 1e-6);
}

TEST(CompressionLoss, AllZeroCodeIsFinite) {
  TensorD x(Shape{2, 8}, 0.0);
  x.set_requires_grad(true);
  TapeD tape;
  TensorD l = compression_loss(tape, x, 0.01);
  EXPECT_EQ(l.item(), 0.0);
  tape.backward(l);
  for (double g : x.grad()) EXPECT_TRUE(std::isfinite(g));
}

TEST(CompressionLoss, BatchMeanOfPerSampleValues) {
  std::mt19937_64 rng(1);
  TensorD x = random_tensor(Shape{3, 2, 2, 2}, rng, 0, 1);
  double expected = 0;
  for (int n = 0; n < 3; ++n) {
    std::vector<double> s(x.data().begin() + 8 * n, x.data().begin() + 8 * (n + 1));
    expected += comp(s, 0.01) / 3;
  }
  TapeD tape;
  EXPECT_NEAR(compression_loss(tape, x, 0.01).item(), expected, 1e-12);
}

TEST(CompressionLoss, ScaleInvarianceOfSparsityTerm) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> k(1e-3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    TensorD x = random_tensor(Shape{1, 16}, rng, -1, 1);
    const double s = k(rng);
    std::vector<double> scaled(x.data().begin(), x.data().end());
    for (double& v : scaled) v *= s;
    const double a = comp(std::vector<double>(x.data().begin(), x.data().end()), 0.0);
    EXPECT_NEAR(comp(scaled, 0.0), a, 1e-6 * a);
  }
}

TEST(CompressionLoss, SparsityBounds) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 64);
  for (int i = 0; i < 10000; ++i) {
    const int n = len(rng);
    TensorD x = random_tensor(Shape{1, n}, rng, -2, 2);
    const double v = comp(std::vector<double>(x.data().begin(), x.data().end()), 0.0);
    EXPECT_GE(v, 1.0 - 1e-12);
    EXPECT_LE(v, std::sqrt(double(n)) + 1e-12);
  }
  EXPECT_NEAR(comp(std::vector<double>(9, 0.3), 0.0), 3.0, 1e-12);
}

TEST(CompressionLoss, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    TensorD x = random_tensor(Shape{3, 2, 3, 3}, rng, 0.01, 1);
    x.set_requires_grad(true);
    auto r = finite_difference_check([&](TapeD& t) { return compression_loss(t, x, 0.01); }, {x});
    EXPECT_LE(r.max_rel, 1e-3) << seed;
  }
}

TEST(MseLoss, Basics) {
  TapeD tape;
  TensorD z(Shape{2, 3}, 0.0), o(Shape{2, 3}, 1.0);
  EXPECT_EQ(mse_loss(tape, z, z).item(), 0.0);
  EXPECT_EQ(mse_loss(tape, z, o).item(), 1.0);
  EXPECT_THROW(mse_loss(tape, z, TensorD(Shape{3, 2})), ShapeError);
}

TEST(MseLoss, MatchesDirectSum) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    TensorD a = random_tensor(Shape{2, 3, 17, 13}, rng), b = random_tensor(Shape{2, 3, 17, 13}, rng);
    long double acc = 0;
    for (std::size_t k = 0; k < a.numel(); ++k) acc += (long double)(a[k] - b[k]) * (a[k] - b[k]);
    const double ref = static_cast<double>(acc / a.numel());
    TapeD tape;
    EXPECT_NEAR(mse_loss(tape, a, b).item(), ref, 1e-6 * ref);
  }
}

TEST(MseLoss, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    TensorD a = random_tensor(Shape{2, 3, 4, 4}, rng), b = random_tensor(Shape{2, 3, 4, 4}, rng);
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    auto r = finite_difference_check([&](TapeD& t) { return mse_loss(t, a, b); }, {a, b});
    EXPECT_LE(r.max_rel, 1e-3) << seed;
  }
}

TEST(SsimParams, WindowAndWeightsSumToOne) {
  SsimParams p = SsimParams::standard();
  EXPECT_EQ(p.window_size(), 11);
  EXPECT_NEAR(std::accumulate(p.window.begin(), p.window.end(), 0.0), 1.0, 1e-9);
  // The 2-D window is the outer product, so its sum is the square.
  const double s = std::accumulate(p.window.begin(), p.window.end(), 0.0);
  EXPECT_NEAR(s * s, 1.0, 1e-9);
  EXPECT_NEAR(std::accumulate(p.scale_weights.begin(), p.scale_weights.end(), 0.0), 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.c1, 1e-4);
  EXPECT_DOUBLE_EQ(p.c2, 9e-4);
}

TEST(SsimMap, IdenticalInputsGiveOne) {
  std::mt19937_64 rng(5);
  TensorD x = random_tensor(Shape{1, 2, 20, 20}, rng, 0, 1);
  TapeD tape;
  TensorD s = ssim_map(tape, x, x, SsimParams::standard()).ssim;
  for (double v : s.data()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(SsimMap, ConstantImagesClosedForm) {
  TensorD a(Shape{1, 1, 16, 16}, 0.2), b(Shape{1, 1, 16, 16}, 0.6);
  const SsimParams p = SsimParams::standard();
  const double expected = (2 * 0.12 + p.c1) / (0.04 + 0.36 + p.c1);
  TapeD tape;
  TensorD s = ssim_map(tape, a, b, p).ssim;
  for (double v : s.data()) EXPECT_NEAR(v, expected, 1e-12);
}

TEST(SsimMap, SymmetricAndBounded) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    TensorD x = random_tensor(Shape{1, 3, 24, 24}, rng, 0, 1), y = random_tensor(Shape{1, 3, 24, 24}, rng, 0, 1);
    TapeD tape;
    auto a = ssim_map(tape, x, y, SsimParams::standard()).ssim;
    auto b = ssim_map(tape, y, x, SsimParams::standard()).ssim;
    for (std::size_t k = 0; k < a.numel(); ++k) {
      EXPECT_NEAR(a[k], b[k], 1e-14);
      EXPECT_GE(a[k], -1.0);
      EXPECT_LE(a[k], 1.0);
    }
  }
}

TEST(MsSsim, UsableScales) {
  const SsimParams p = SsimParams::standard();
  EXPECT_EQ(usable_scales(256, 256, p), 5);
  EXPECT_EQ(usable_scales(176, 176, p), 5);
  EXPECT_EQ(usable_scales(175, 256, p), 4);
  EXPECT_EQ(usable_scales(128, 128, p), 4);
  EXPECT_EQ(usable_scales(64, 64, p), 3);
  EXPECT_EQ(usable_scales(16, 16, p), 1);
  EXPECT_EQ(usable_scales(10, 64, p), 0);
}

TEST(MsSsim, LossOfIdenticalImagesIsZero) {
  std::mt19937_64 rng(7);
  TensorD x = random_tensor(Shape{2, 3, 64, 64}, rng, 0, 1);
  TapeD tape;
  EXPECT_NEAR(ms_ssim_loss(tape, x, x, SsimParams::standard()).item(), 0.0, 1e-12);
}

TEST(MsSsim, LossArithmetic) {
  // A score of 0.921 corresponds to a loss of (1 - 0.921) / 2.
  EXPECT_NEAR((1 - 0.921) / 2, 0.0395, 1e-12);
  TensorD a(Shape{1, 1, 16, 16}, 0.2), b(Shape{1, 1, 16, 16}, 0.6);
  TapeD tape;
  const double m = ms_ssim(tape, a, b, SsimParams::standard()).item();
  EXPECT_NEAR(ms_ssim_loss(tape, a, b, SsimParams::standard()).item(), (1 - m) / 2, 1e-15);
}

TEST(MsSsim, LossInUnitInterval) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    TensorD x = random_tensor(Shape{1, 3, 48, 48}, rng, 0, 1), y = random_tensor(Shape{1, 3, 48, 48}, rng, 0, 1);
    TapeD tape;
    const double l = ms_ssim_loss(tape, x, y, SsimParams::standard()).item();
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 1.0);
  }
}

TEST(MsSsim, TooSmallIsAnError) {
  TapeD tape;
  TensorD x(Shape{1, 1, 8, 8}, 0.5);
  EXPECT_THROW(ms_ssim(tape, x, x, SsimParams::standard()), ShapeError);
}

reference::Plane plane_of(const TensorD& t, int n, int c) {
  const int h = t.dim(2), w = t.dim(3);
  reference::Plane p{h, w, {}};
  const std::size_t off = (static_cast<std::size_t>(n) * t.dim(1) + c) * h * w;
  p.v.assign(t.data().begin() + off, t.data().begin() + off + static_cast<std::size_t>(h) * w);
  return p;
}

TEST(MsSsim, MatchesIndependentReference) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0, 0.1);
  for (int pair = 0; pair < 3; ++pair) {
    TensorD x = random_tensor(Shape{1, 2, 180, 184}, rng, 0, 1);
    TensorD y = x.clone();
    for (auto& v : y.mutable_data()) v = std::clamp(v + noise(rng) * (pair + 1), 0.0, 1.0);
    TapeD tape;
    TensorD m = ms_ssim(tape, x, y, SsimParams::standard());
    for (int c = 0; c < 2; ++c) {
      const double ref = reference::ms_ssim(plane_of(x, 0, c), plane_of(y, 0, c),
                                            SsimParams::standard().scale_weights);
      EXPECT_NEAR(m[c], ref, 1e-10);
      // The unnormalized published exponents move the value only slightly.
      EXPECT_NEAR(m[c], reference::ms_ssim(plane_of(x, 0, c), plane_of(y, 0, c)), 1e-4);
    }
  }
}

TEST(MsSsim, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    TensorD x = random_tensor(Shape{1, 2, 24, 24}, rng, 0, 1);
    TensorD y = x.clone();
    for (auto& v : y.mutable_data()) v = std::clamp(v + 0.2 * (rng() % 1000 / 1000.0 - 0.5), 0.0, 1.0);
    y.set_requires_grad(true);
    auto r = finite_difference_check(
        [&](TapeD& t) { return ms_ssim_loss(t, x, y, SsimParams::standard()); }, {y});
    EXPECT_LE(r.max_rel, 1e-3) << seed;
  }
}

ModelConfig toy_config() {
  ModelConfig c;
  c.enc_channels = {8, 8, 8};
  c.code_channels = 4;
  c.dec_channels = {8, 8, 8};
  return c;
}

TEST(CycleLoss, ZeroOnIdenticalInputsAndNonNegative) {
  auto p = init_params<double>(toy_config(), 3);
  std::mt19937_64 rng(10);
  TensorD a = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  TensorD b = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  TapeD tape;
  EXPECT_EQ(cycle_loss(tape, a, a, p).item(), 0.0);
  EXPECT_GT(cycle_loss(tape, a, b, p).item(), 0.0);
}

TEST(CycleLoss, EqualsMseOfEncoderFeatures) {
  auto p = init_params<double>(toy_config(), 3);
  std::mt19937_64 rng(11);
  TensorD a = random_tensor(Shape{2, 3, 16, 16}, rng, 0, 1);
  TensorD b = random_tensor(Shape{2, 3, 16, 16}, rng, 0, 1);
  TapeD tape;
  const double direct =
      mse_loss(tape, encode_features(tape, a, p), encode_features(tape, b, p)).item();
  EXPECT_EQ(cycle_loss(tape, a, b, p).item(), direct);
}

TEST(CycleLoss, FrozenBranchesGiveNoEncoderGradient) {
  auto p = init_params<double>(toy_config(), 3);
  std::mt19937_64 rng(12);
  TensorD a = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  TensorD b = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  b.set_requires_grad(true);
  TapeD tape;
  tape.backward(cycle_loss(tape, a, b, p));
  for (const auto& t : p.tensors()) {
    for (double g : t.grad()) EXPECT_EQ(g, 0.0);
  }
  double norm = 0;
  for (double g : b.grad()) norm += std::abs(g);
  EXPECT_GT(norm, 0.0);
}

TEST(LossConfig, ModeDefaults) {
  auto r6 = LossConfig::for_mode(LossMode::kMse).resolved();
  EXPECT_EQ(r6.gamma, 1e-4);
  auto r7 = LossConfig::for_mode(LossMode::kMseMsssim).resolved();
  EXPECT_EQ(r7.lambda_msssim, 0.1);
  EXPECT_EQ(r7.gamma, 2.5e-4);
  auto r8 = LossConfig::for_mode(LossMode::kMseMsssimCycle).resolved();
  EXPECT_EQ(r8.lambda_msssim, 0.1);
  EXPECT_EQ(r8.lambda_cycle, 0.01);
  EXPECT_EQ(r8.gamma, 3e-4);
  EXPECT_EQ(r8.alpha, 0.01);
}

TEST(LossConfig, MissingOrNegativeWeightsAreErrors) {
  LossConfig c;
  c.mode = LossMode::kMseMsssimCycle;
  c.gamma = 1e-4;
  c.lambda_msssim = 0.1;
  EXPECT_THROW(c.resolved(), ConfigError);
  c.lambda_cycle = -1;
  EXPECT_THROW(c.resolved(), ConfigError);
  c.lambda_cycle = 0.01;
  EXPECT_NO_THROW(c.resolved());
  c.alpha = -0.5;
  EXPECT_THROW(c.resolved(), ConfigError);
  EXPECT_THROW(parse_loss_mode("ssim"), ConfigError);
  EXPECT_EQ(parse_loss_mode("MSE_MSSSIM_CYCLE"), LossMode::kMseMsssimCycle);
  for (auto m : {LossMode::kMse, LossMode::kMseMsssim, LossMode::kMseMsssimCycle}) {
    EXPECT_EQ(parse_loss_mode(to_string(m)), m);
  }
}

TEST(CombinedLoss, TermsFollowMode) {
  auto p = init_params<double>(toy_config(), 5);
  std::mt19937_64 rng(13);
  TensorD img = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  TapeD tape;
  auto f = forward_train(tape, img, p);

  LossConfig mse_only = LossConfig::for_mode(LossMode::kMse);
  mse_only.gamma = 0.0;
  auto t0 = combined_loss(tape, img, f.recon, f.code_pre, mse_only, p);
  EXPECT_EQ(t0.total.item(), mse_loss(tape, img, f.recon).item());

  const double mse = t0.mse;
  const double cp = compression_loss(tape, f.code_pre, 0.01).item();
  const double ms = ms_ssim_loss(tape, img, f.recon, SsimParams::standard()).item();
  const double cyc = cycle_loss(tape, img, f.recon, p).item();

  auto t6 = combined_loss(tape, img, f.recon, f.code_pre, LossConfig::for_mode(LossMode::kMse), p);
  EXPECT_NEAR(t6.total.item(), mse + 1e-4 * cp, 1e-14);
  auto t7 = combined_loss(tape, img, f.recon, f.code_pre, LossConfig::for_mode(LossMode::kMseMsssim), p);
  EXPECT_NEAR(t7.total.item(), mse + 0.1 * ms + 2.5e-4 * cp, 1e-14);
  EXPECT_NEAR(t7.task, mse + 0.1 * ms, 1e-14);
  auto t8 = combined_loss(tape, img, f.recon, f.code_pre,
                          LossConfig::for_mode(LossMode::kMseMsssimCycle), p);
  EXPECT_NEAR(t8.total.item(), mse + 0.1 * ms + 0.01 * cyc + 3e-4 * cp, 1e-14);
  EXPECT_NEAR(t8.task, mse + 0.1 * ms + 0.01 * cyc, 1e-14);
  EXPECT_EQ(t8.cycle, cyc);
}

class LossGradient : public ::testing::TestWithParam<testing::GradientCase> {};

TEST_P(LossGradient, MatchesFiniteDifferencesOnTwentySeeds) {
  const auto& c = GetParam();
  for (int seed = 0; seed < testing::kGradSeeds; ++seed) {
    auto r = testing::run_gradient_case(c, seed);
    EXPECT_LE(r.max_rel, testing::kGradTol) << c.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllLosses, LossGradient,
                         ::testing::ValuesIn(testing::loss_gradient_cases()),
                         [](const auto& info) { return info.param.name; });

}  // namespace
}  // namespace nic
