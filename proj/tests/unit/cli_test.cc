#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.h"
#include "nic/checkpoint.h"
#include "nic/codec.h"
#include "nic/image.h"
#include "test_support.h"

namespace nic {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "nic");
  args.push_back("-q");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::create_directories(dir.path() / "data");
    write_image(dir.file("data/a.png"), testing::pattern_image(40, 40, 1));
    write_image(dir.file("data/b.ppm"), testing::pattern_image(48, 32, 2));
    std::ofstream(dir.file("run.cfg")) << "desk_scale = true\n"
                                          "epochs = 1\n"
                                          "iters_per_epoch = 3\n"
                                          "batch_size = 2\n"
                                          "crop = 32\n"
                                          "crop_stride = 16\n";
    save_checkpoint(dir.file("m.ckpt"), init_params<float>(ModelConfig::desk(), 5));
    write_image(dir.file("img.ppm"), testing::pattern_image(37, 21, 3));
  }
  TempDir dir;
};

TEST_F(Cli, TrainWritesCheckpointAndLogDeterministically) {
  Outcome a = run({"train", "--data", dir.file("data"), "--config", dir.file("run.cfg"), "--out",
               dir.file("t1.ckpt")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NO_THROW(load_checkpoint(dir.file("t1.ckpt")));
  Outcome b = run({"train", "--data", dir.file("data"), "--config", dir.file("run.cfg"), "--out",
               dir.file("t2.ckpt")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir.file("t1.ckpt.csv")), slurp(dir.file("t2.ckpt.csv")));
  EXPECT_EQ(slurp(dir.file("t1.ckpt")), slurp(dir.file("t2.ckpt")));
}

TEST_F(Cli, TrainRejectsBadConfigWithLineNumber) {
  std::ofstream(dir.file("bad.cfg")) << "epochs = 1\nlearning_rate = 3\n";
  Outcome r = run({"train", "--data", dir.file("data"), "--config", dir.file("bad.cfg"), "--out",
               dir.file("t.ckpt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"train", "--data", dir.file("data")}).code, 2);
  EXPECT_EQ(run({"encode", "--model", dir.file("m.ckpt"), "--out", dir.file("x.nic")}).code, 2);
  EXPECT_EQ(run({"encode", "--model", dir.file("m.ckpt"), "--in", dir.file("missing.ppm"),
                 "--out", dir.file("x.nic")})
                .code,
            2);
  fs::create_directories(dir.path() / "empty");
  EXPECT_EQ(run({"eval", "--model", dir.file("m.ckpt"), "--data", dir.file("empty")}).code, 2);
}

TEST_F(Cli, EncodeDecodeRoundTrip) {
  Outcome e = run({"encode", "--model", dir.file("m.ckpt"), "--in", dir.file("img.ppm"), "--out",
               dir.file("x.nic")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto size = fs::file_size(dir.file("x.nic"));
  EXPECT_EQ(field(e.out, "bytes"), std::to_string(size));
  EXPECT_DOUBLE_EQ(std::stod(field(e.out, "bpp")), 8.0 * size / (37 * 21));

  Outcome d = run({"decode", "--model", dir.file("m.ckpt"), "--in", dir.file("x.nic"), "--out",
               dir.file("y.png")});
  ASSERT_EQ(d.code, 0) << d.err;
  Image out = read_image(dir.file("y.png"));
  EXPECT_EQ(out.width, 37);
  EXPECT_EQ(out.height, 21);

  Outcome i = run({"inspect", "--in", dir.file("x.nic")});
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_EQ(field(i.out, "format"), "NIC1");
  EXPECT_EQ(field(i.out, "latent"), "8x3x5");
}

TEST_F(Cli, FinetuneNeverIncreasesTaskLoss) {
  Outcome plain = run({"encode", "--model", dir.file("m.ckpt"), "--in", dir.file("img.ppm"),
                   "--out", dir.file("p.nic")});
  Outcome tuned = run({"encode", "--model", dir.file("m.ckpt"), "--in", dir.file("img.ppm"),
                   "--out", dir.file("f.nic"), "--finetune", "--finetune-steps", "5"});
  ASSERT_EQ(plain.code, 0) << plain.err;
  ASSERT_EQ(tuned.code, 0) << tuned.err;
  EXPECT_LE(std::stod(field(tuned.out, "task_loss")), std::stod(field(plain.out, "task_loss")));
  EXPECT_EQ(field(tuned.out, "task_loss_before"), field(plain.out, "task_loss"));
}

TEST_F(Cli, VersionMismatchExitsThreeNamingBothVersions) {
  auto bytes = serialize_checkpoint(init_params<float>(ModelConfig::desk(), 5));
  bytes[4] = 7;
  std::ofstream(dir.file("v.ckpt"), std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  Outcome r = run({"encode", "--model", dir.file("v.ckpt"), "--in", dir.file("img.ppm"), "--out",
               dir.file("x.nic")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("7"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("1"), std::string::npos) << r.err;

  ASSERT_EQ(run({"encode", "--model", dir.file("m.ckpt"), "--in", dir.file("img.ppm"), "--out",
                 dir.file("x.nic")})
                .code,
            0);
  std::string s = slurp(dir.file("x.nic"));
  s[4] = 2;
  std::ofstream(dir.file("x2.nic"), std::ios::binary) << s;
  Outcome d = run({"decode", "--model", dir.file("m.ckpt"), "--in", dir.file("x2.nic"), "--out",
               dir.file("y.ppm")});
  EXPECT_EQ(d.code, 3);
  EXPECT_NE(d.err.find("found version 2, expected 1"), std::string::npos) << d.err;
}

TEST_F(Cli, GarbageInputIsFormatError) {
  std::ofstream(dir.file("junk.nic")) << "not a stream";
  EXPECT_EQ(run({"decode", "--model", dir.file("m.ckpt"), "--in", dir.file("junk.nic"), "--out",
                 dir.file("y.ppm")})
                .code,
            3);
  EXPECT_EQ(run({"inspect", "--in", dir.file("junk.nic")}).code, 3);
}

TEST_F(Cli, EvalWritesCsvAndSummary) {
  Outcome r = run({"eval", "--model", dir.file("m.ckpt"), "--data", dir.file("data"), "--csv",
               dir.file("r.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string csv = slurp(dir.file("r.csv"));
  EXPECT_NE(csv.find("a.png"), std::string::npos);
  EXPECT_NE(csv.find("b.ppm"), std::string::npos);
  EXPECT_NE(r.out.find("PSNR"), std::string::npos);
  Outcome again = run({"eval", "--model", dir.file("m.ckpt"), "--data", dir.file("data"), "--csv",
                   dir.file("r2.csv"), "--threads", "2"});
  EXPECT_EQ(slurp(dir.file("r2.csv")), csv);
  EXPECT_EQ(again.out, r.out);
}

}  // namespace
}  // namespace nic
