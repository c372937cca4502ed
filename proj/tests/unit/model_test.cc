#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "nic/checkpoint.h"
#include "nic/errors.h"
#include "nic/losses.h"
#include "nic/model.h"
#include "nic/ops.h"
#include "test_support.h"

namespace nic {
namespace {

using testing::finite_difference_check;
using testing::random_tensor;
using TapeD = Tape<double>;
using TensorD = Tensor<double>;

ModelConfig toy_config() {
  ModelConfig c;
  c.enc_channels = {8, 8, 8};
  c.code_channels = 4;
  c.dec_channels = {8, 8, 8};
  return c;
}

void zero_branches(AutoencoderParams<double>& p) {
  for (auto& np : p.all()) {
    if (np.name.find(".res") != std::string::npos) {
      for (auto& v : np.tensor.mutable_data()) v = 0;
    }
  }
}

TEST(ModelConfig, Validation) {
  EXPECT_NO_THROW(ModelConfig{}.validate());
  EXPECT_NO_THROW(ModelConfig::desk().validate());
  ModelConfig c;
  c.enc_channels[1] = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.code_channels = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.dec_channels[0] = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.stride_kernel = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(init_params<float>(c, 1), ConfigError);
}

TEST(InitParams, SameSeedIsBitIdentical) {
  auto a = init_params<float>(ModelConfig::desk(), 42);
  auto b = init_params<float>(ModelConfig::desk(), 42);
  auto c = init_params<float>(ModelConfig::desk(), 43);
  ASSERT_EQ(a.all().size(), b.all().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.all().size(); ++i) {
    EXPECT_EQ(a.all()[i].tensor.values(), b.all()[i].tensor.values());
    any_diff |= a.all()[i].tensor.values() != c.all()[i].tensor.values();
  }
  EXPECT_TRUE(any_diff);
}

TEST(InitParams, BiasesAreZero) {
  auto p = init_params<float>(ModelConfig{}, 7);
  for (const auto& np : p.all()) {
    if (np.tensor.rank() == 1) {
      for (float v : np.tensor.data()) EXPECT_EQ(v, 0.0f) << np.name;
    }
  }
}

// Pools every weight of a family and compares its standard deviation with the
// initializer's target sqrt(gain / fan_in).
TEST(InitParams, WeightSpreadMatchesFanIn) {
  const ModelConfig cfg{};
  auto p = init_params<double>(cfg, 3);
  auto specs = param_specs(cfg);
  std::map<std::string, std::pair<double, std::size_t>> ratio_sq;  // family -> (sum (w/target)^2, n)
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].shape.size() == 1) continue;
    const bool branch = specs[i].name.find(".res") != std::string::npos;
    const double target = std::sqrt((branch ? 2.0 : 1.0) / specs[i].fan_in);
    EXPECT_EQ(specs[i].gain, branch ? 2.0 : 1.0) << specs[i].name;
    auto& acc = ratio_sq[branch ? "branch" : "trunk"];
    for (double w : p.all()[i].tensor.data()) {
      acc.first += (w / target) * (w / target);
      ++acc.second;
    }
  }
  ASSERT_EQ(ratio_sq.size(), 2u);
  for (const auto& [family, acc] : ratio_sq) {
    ASSERT_GE(acc.second, 10000u) << family;
    const double rel_std = std::sqrt(acc.first / acc.second);
    EXPECT_NEAR(rel_std, 1.0, 0.2) << family;
  }
  // Residual-branch layers carry the He scale sqrt(2 / fan_in).
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].shape.size() == 1 || specs[i].name != "enc.res2.c2.w") continue;
    double s = 0;
    for (double w : p.all()[i].tensor.data()) s += w * w;
    const double std = std::sqrt(s / p.all()[i].tensor.numel());
    EXPECT_NEAR(std / std::sqrt(2.0 / specs[i].fan_in), 1.0, 0.2);
  }
}

TEST(AutoencoderParams, PartitionsAreDisjointAndExhaustive) {
  auto p = init_params<float>(ModelConfig::desk(), 1);
  auto enc = p.partition(Partition::kEncoder);
  auto dec = p.partition(Partition::kDecoder);
  EXPECT_EQ(enc.size() + dec.size(), p.all().size());
  std::set<const void*> seen;
  for (const auto& t : p.tensors()) EXPECT_TRUE(seen.insert(t.storage_id()).second);
  for (const auto& np : p.all()) {
    EXPECT_EQ(np.part == Partition::kEncoder, np.name.rfind("enc.", 0) == 0) << np.name;
  }
}

TEST(AutoencoderParams, ShapesFollowConfig) {
  const ModelConfig cfg{};
  auto p = init_params<float>(cfg, 1);
  EXPECT_EQ(p.get("enc.down0.w").shape(), (Shape{64, 3, 4, 4}));
  EXPECT_EQ(p.get("enc.res1.c1.w").shape(), (Shape{32, 128, 1, 1}));
  EXPECT_EQ(p.get("enc.res1.c2.w").shape(), (Shape{32, 32, 3, 3}));
  EXPECT_EQ(p.get("enc.res1.c3.w").shape(), (Shape{128, 32, 1, 1}));
  EXPECT_EQ(p.get("enc.proj.w").shape(), (Shape{16, 192, 1, 1}));
  EXPECT_EQ(p.get("dec.up0.w").shape(), (Shape{16, 192, 4, 4}));
  EXPECT_EQ(p.get("dec.out.w").shape(), (Shape{3, 64, 1, 1}));
  EXPECT_THROW(p.get("enc.nope"), ShapeError);
  std::vector<NamedParam<float>> bad = p.clone().all();
  bad.pop_back();
  EXPECT_THROW(AutoencoderParams<float>(cfg, bad, 1), ShapeError);
}

TEST(ResidualBlock, ZeroBranchIsIdentity) {
  auto p = init_params<double>(toy_config(), 2);
  zero_branches(p);
  std::mt19937_64 rng(1);
  TensorD x = random_tensor(Shape{2, 8, 4, 4}, rng);
  TapeD tape;
  TensorD y = residual_block(tape, x, p, "enc.res0");
  EXPECT_EQ(y.values(), x.values());
}

TEST(ResidualBlock, PreservesShape) {
  ModelConfig cfg = toy_config();
  cfg.enc_channels = {16, 16, 16};
  auto p = init_params<float>(cfg, 2);
  std::mt19937_64 rng(1);
  Tensor<float> x = random_tensor<float>(Shape{2, 16, 8, 8}, rng);
  Tape<float> tape;
  EXPECT_EQ(residual_block(tape, x, p, "enc.res1").shape(), x.shape());
}

TEST(ResidualBlock, ChannelCountMustMatchBlock) {
  auto p = init_params<float>(toy_config(), 2);
  Tape<float> tape;
  EXPECT_THROW(residual_block(tape, Tensor<float>(Shape{1, 6, 4, 4}), p, "enc.res0"), ShapeError);
}

TEST(ResidualBlock, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    auto p = init_params<double>(toy_config(), seed);
    std::mt19937_64 rng(seed);
    for (auto& np : p.all()) {
      if (np.tensor.rank() == 1) np.tensor = random_tensor(np.tensor.shape(), rng, -0.1, 0.1).set_requires_grad(true);
    }
    TensorD x = random_tensor(Shape{1, 8, 4, 4}, rng);
    x.set_requires_grad(true);
    std::vector<TensorD> inputs{x};
    for (const char* n : {"c1.w", "c1.b", "c2.w", "c2.b", "c3.w", "c3.b"}) {
      inputs.push_back(p.get(std::string("enc.res0.") + n));
    }
    TensorD probe = random_tensor(Shape{1, 8, 4, 4}, rng);
    auto r = finite_difference_check(
        [&](TapeD& tape) {
          return ops::sum(tape, ops::mul(tape, residual_block(tape, x, p, "enc.res0"), probe));
        },
        inputs);
    EXPECT_LE(r.max_rel, 1e-3) << "seed " << seed;
  }
}

TEST(Encoder, ShapeAndRange) {
  auto p = init_params<float>(ModelConfig{}, 5);
  std::mt19937_64 rng(2);
  Tensor<float> img = random_tensor<float>(Shape{1, 3, 128, 128}, rng, 0, 1);
  Tape<float> tape;
  Tensor<float> code = encode_features(tape, img, p);
  EXPECT_EQ(code.shape(), (Shape{1, 16, 16, 16}));
  for (float v : code.data()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
  Tensor<float> again = encode_features(tape, img, p);
  EXPECT_EQ(code.values(), again.values());
}

TEST(Encoder, RejectsSizesNotMultipleOfEight) {
  auto p = init_params<float>(ModelConfig::desk(), 5);
  Tape<float> tape;
  EXPECT_THROW(encode_features(tape, Tensor<float>(Shape{1, 3, 12, 16}), p), ShapeError);
  EXPECT_THROW(encode_features(tape, Tensor<float>(Shape{1, 3, 16, 20}), p), ShapeError);
}

TEST(Decoder, ShapeAndRange) {
  auto p = init_params<float>(ModelConfig{}, 5);
  std::mt19937_64 rng(3);
  Tensor<float> code = random_tensor<float>(Shape{1, 16, 16, 16}, rng, 0, 1);
  Tape<float> tape;
  Tensor<float> img = decode(tape, code, p);
  EXPECT_EQ(img.shape(), (Shape{1, 3, 128, 128}));
  for (float v : img.data()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Autoencoder, RoundTripPreservesSpatialDims) {
  for (auto cfg : {ModelConfig::desk(), toy_config()}) {
    auto p = init_params<float>(cfg, 9);
    for (auto [h, w] : {std::pair{8, 8}, {16, 40}, {24, 8}}) {
      Tape<float> tape;
      Tensor<float> img(Shape{2, 3, h, w}, 0.5f);
      EXPECT_EQ(decode(tape, encode_features(tape, img, p), p).shape(), img.shape());
    }
  }
}

TEST(Autoencoder, ZeroBranchesEndToEndMatchPlainChain) {
  auto p = init_params<double>(toy_config(), 4);
  zero_branches(p);
  std::mt19937_64 rng(2);
  TensorD img = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  TapeD tape;
  TensorD code = encode_features(tape, img, p);
  TensorD h = img;
  for (int b = 0; b < 3; ++b) {
    const std::string n = "enc.down" + std::to_string(b);
    h = ops::conv2d(tape, h, p.get(n + ".w"), p.get(n + ".b"), 2, 1);
  }
  h = ops::sigmoid(tape, ops::conv2d(tape, h, p.get("enc.proj.w"), p.get("enc.proj.b"), 1, 0));
  EXPECT_EQ(code.values(), h.values());
}

TEST(ForwardTrain, BinaryCodeAndEncoderGradients) {
  auto p = init_params<float>(ModelConfig::desk(), 6);
  std::mt19937_64 rng(4);
  Tensor<float> img = random_tensor<float>(Shape{1, 3, 32, 32}, rng, 0, 1);
  Tape<float> tape;
  auto f = forward_train(tape, img, p);
  for (float v : f.code_bin.data()) EXPECT_TRUE(v == 0.0f || v == 1.0f);
  EXPECT_EQ(f.recon.shape(), img.shape());
  tape.backward(mse_loss(tape, img, f.recon));
  for (const auto& t : p.partition(Partition::kEncoder)) {
    ASSERT_TRUE(t.has_grad());
    double norm = 0;
    for (float g : t.grad()) norm += std::abs(g);
    EXPECT_GT(norm, 0.0);
  }
}

TEST(EncodeFrozen, SameValuesNoParameterGradient) {
  auto p = init_params<double>(toy_config(), 8);
  std::mt19937_64 rng(5);
  TensorD img = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  img.set_requires_grad(true);
  TapeD tape;
  TensorD a = encode_features(tape, img, p);
  TapeD tape2;
  TensorD b = encode_frozen(tape2, img, p);
  EXPECT_EQ(a.values(), b.values());
  tape2.backward(ops::sum(tape2, ops::square(tape2, b)));
  for (const auto& t : p.partition(Partition::kEncoder)) {
    for (double g : t.grad()) EXPECT_EQ(g, 0.0);
  }
  double norm = 0;
  for (double g : img.grad()) norm += std::abs(g);
  EXPECT_GT(norm, 0.0);
}

// Whole autoencoder with every loss term, rounding replaced by its
// straight-through identity so finite differences are meaningful.
TEST(Autoencoder, FullModelGradientMatchesFiniteDifferences) {
  auto p = init_params<double>(toy_config(), 12);
  std::mt19937_64 rng(12);
  for (auto& np : p.all()) {
    if (np.tensor.rank() == 1) {
      np.tensor = random_tensor(np.tensor.shape(), rng, -0.1, 0.1).set_requires_grad(true);
    }
  }
  TensorD img = random_tensor(Shape{1, 3, 16, 16}, rng, 0, 1);
  LossConfig lc = LossConfig::for_mode(LossMode::kMseMsssimCycle);
  // The cycle term's encoder copies are constants, so perturbing a weight
  // must not move them: they read a snapshot.
  const auto frozen = p.clone();
  auto f = [&](TapeD& tape) {
    TensorD code = encode_features(tape, img, p);
    TensorD recon = decode(tape, code, p);
    return combined_loss(tape, img, recon, code, lc, frozen).total;
  };
  auto r = finite_difference_check(f, p.tensors());
  EXPECT_LE(r.max_rel, 1e-3);
  EXPECT_EQ(r.checked, p.parameter_count());
}

TEST(Checkpoint, RoundTripIsExact) {
  auto p = init_params<float>(ModelConfig::desk(), 77);
  auto bytes = serialize_checkpoint(p);
  auto q = parse_checkpoint(bytes);
  EXPECT_EQ(q.config(), p.config());
  EXPECT_EQ(q.init_seed(), 77u);
  ASSERT_EQ(q.all().size(), p.all().size());
  for (std::size_t i = 0; i < p.all().size(); ++i) {
    EXPECT_EQ(q.all()[i].name, p.all()[i].name);
    EXPECT_EQ(q.all()[i].tensor.shape(), p.all()[i].tensor.shape());
    EXPECT_EQ(q.all()[i].tensor.values(), p.all()[i].tensor.values());
  }
  EXPECT_EQ(serialize_checkpoint(q), bytes);
}

TEST(Checkpoint, LayoutIsLittleEndianWithMagic) {
  auto p = init_params<float>(ModelConfig::desk(), 0x0102030405060708ull);
  auto b = serialize_checkpoint(p);
  ASSERT_GT(b.size(), 50u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "NAEW");
  EXPECT_EQ(b[4], kCheckpointVersion);
  EXPECT_EQ(b[5], 16);  // enc_channels[0] = 16, low byte first
  EXPECT_EQ(b[6], 0);
  // init_seed follows 8 ints and one double.
  EXPECT_EQ(b[5 + 8 * 4 + 8], 0x08);
  EXPECT_EQ(b[5 + 8 * 4 + 8 + 7], 0x01);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  auto b = serialize_checkpoint(init_params<float>(ModelConfig::desk(), 1));
  auto bad_magic = b;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_checkpoint(bad_magic), FormatError);
  auto bad_version = b;
  bad_version[4] = 9;
  try {
    parse_checkpoint(bad_version);
    FAIL();
  } catch (const VersionError& e) {
    EXPECT_EQ(e.found(), 9);
    EXPECT_EQ(e.expected(), kCheckpointVersion);
  }
  auto truncated = b;
  truncated.resize(b.size() - 3);
  EXPECT_THROW(parse_checkpoint(truncated), FormatError);
  auto trailing = b;
  trailing.push_back(0);
  EXPECT_THROW(parse_checkpoint(trailing), FormatError);
}

TEST(Checkpoint, SaveLoadFile) {
  testing::TempDir dir;
  auto p = init_params<float>(ModelConfig::desk(), 5);
  save_checkpoint(dir.file("m.ckpt"), p);
  auto q = load_checkpoint(dir.file("m.ckpt"));
  EXPECT_EQ(serialize_checkpoint(q), serialize_checkpoint(p));
  EXPECT_THROW(load_checkpoint(dir.file("missing.ckpt")), FormatError);
}

}  // namespace
}  // namespace nic
