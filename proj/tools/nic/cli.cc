#include "cli.h"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "nic/bitstream.h"
#include "nic/checkpoint.h"
#include "nic/codec.h"
#include "nic/config_file.h"
#include "nic/entropy_coder.h"
#include "nic/errors.h"
#include "nic/image.h"
#include "nic/metrics.h"
#include "nic/trainer.h"

namespace nic::cli {
namespace {

namespace fs = std::filesystem;

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void dump(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("write failed for " + path);
}

struct LossFlags {
  std::string config_path;
  std::string mode;
  bool finetune = false;
  int finetune_steps = -1;
};

void add_loss_flags(CLI::App* cmd, LossFlags& f) {
  cmd->add_option("--config", f.config_path, "config file supplying loss weights and fine-tuning settings")
      ->check(CLI::ExistingFile);
  cmd->add_option("--loss", f.mode, "loss mode: mse, mse_msssim or mse_msssim_cycle");
  cmd->add_flag("--finetune", f.finetune, "optimize the encoder per image before coding");
  cmd->add_option("--finetune-steps", f.finetune_steps, "fine-tuning step budget")
      ->check(CLI::NonNegativeNumber);
}

CompressOptions compress_options(const LossFlags& f) {
  CompressOptions o;
  if (!f.config_path.empty()) {
    RunConfig rc = load_config(f.config_path);
    o.loss = rc.train.loss;
    o.finetune_config = rc.train.finetune;
  }
  if (!f.mode.empty()) {
    const double alpha = o.loss.alpha;
    o.loss = LossConfig::for_mode(parse_loss_mode(f.mode));
    o.loss.alpha = alpha;
  }
  if (f.finetune_steps >= 0) o.finetune_config.steps = f.finetune_steps;
  o.finetune = f.finetune;
  return o;
}

std::string fmt_exact(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

int cmd_train(const std::string& data, const std::string& config, const std::string& out_path,
              const std::string& log_path, bool resume, std::ostream& out) {
  RunConfig rc = load_config(config);
  TrainOptions opts;
  opts.checkpoint_path = out_path;
  opts.log_path = log_path.empty() ? out_path + ".csv" : log_path;
  opts.resume = resume;
  if (!resume) {
    std::error_code ec;
    fs::remove(opts.log_path, ec);
  }
  TrainResult r = train(data, rc.train, rc.model, opts);
  save_checkpoint(out_path, r.params);
  out << "checkpoint " << out_path << "\n";
  out << "log " << opts.log_path << "\n";
  out << "parameters " << r.params.parameter_count() << "\n";
  if (!r.log.empty()) out << csv_header() << "\n" << csv_row(r.log.back()) << "\n";
  return kOk;
}

int cmd_encode(const std::string& model, const std::string& in, const std::string& out_path,
               const LossFlags& flags, std::ostream& out) {
  CompressOptions opts = compress_options(flags);
  AutoencoderParams<float> params = load_checkpoint(model);
  Image image = read_image(in);
  CompressResult r = compress_image(image, params, opts);
  dump(out_path, serialize_bitstream(r.stream));
  const auto size = fs::file_size(out_path);
  out << "size " << image.width << "x" << image.height << "\n";
  out << "bytes " << size << "\n";
  out << "bpp " << fmt_exact(bits_per_pixel(size, image.width, image.height)) << "\n";
  out << "activation_rate " << fmt_exact(r.code.activation_rate()) << "\n";
  if (r.finetune) {
    out << "finetune_steps " << r.finetune->steps_run << "\n";
    out << "task_loss_before " << fmt_exact(r.finetune->initial_task) << "\n";
  }
  out << "task_loss " << fmt_exact(r.task_loss) << "\n";
  return kOk;
}

int cmd_decode(const std::string& model, const std::string& in, const std::string& out_path,
               std::ostream& out) {
  Bitstream s = parse_bitstream(slurp(in));
  AutoencoderParams<float> params = load_checkpoint(model);
  Image image = decompress_image(s, params);
  write_image(out_path, image);
  out << "size " << image.width << "x" << image.height << "\n";
  return kOk;
}

int cmd_eval(const std::string& model, const std::string& data, const std::string& csv_path,
             int threads, const LossFlags& flags, std::ostream& out) {
  EvalOptions opts;
  opts.compress = compress_options(flags);
  opts.threads = threads > 0 ? threads : thread_budget();
  std::vector<std::string> files = list_images(data);
  if (files.empty()) throw ConfigError("no images in " + data);
  AutoencoderParams<float> params = load_checkpoint(model);
  EvalReport r = evaluate(files, params, opts);
  const std::string csv = report_csv(r);
  if (csv_path.empty()) {
    out << csv;
  } else {
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw FormatError("cannot write " + csv_path);
    f << csv;
  }
  out << report_summary(r);
  return kOk;
}

void inspect_bitstream(const std::vector<std::uint8_t>& bytes, std::ostream& out) {
  Bitstream s = parse_bitstream(bytes);
  const BitstreamHeader& h = s.header;
  out << "format NIC1\n";
  out << "version " << int(h.version) << "\n";
  out << "size " << h.orig_width << "x" << h.orig_height << "\n";
  out << "code_channels " << int(h.code_channels) << "\n";
  out << "downsample_log2 " << int(h.downsample_log2) << "\n";
  out << "latent " << int(h.code_channels) << "x" << h.latent_height() << "x"
      << h.latent_width() << "\n";
  out << "payload_bytes " << h.payload_len << "\n";
  out << "bpp " << fmt_exact(bits_per_pixel(s.total_bytes(), h.orig_width, h.orig_height))
      << "\n";
  ContextModel ctx(h.code_channels);
  CodeTensor code =
      cabac_decode(s.payload, h.code_channels, h.latent_height(), h.latent_width(), &ctx);
  out << "activation_rate " << fmt_exact(code.activation_rate()) << "\n";
  std::vector<double> cost = context_costs(code);
  out << "context,channel,left,top,n0,n1,p1,ideal_bits\n";
  for (int c = 0; c < static_cast<int>(ctx.size()); ++c) {
    out << c << "," << c / 4 << "," << (c >> 1) % 2 << "," << c % 2 << "," << ctx.n0(c)
        << "," << ctx.n1(c) << "," << ctx.p1(c) << "," << cost[c] << "\n";
  }
}

void inspect_checkpoint(const std::vector<std::uint8_t>& bytes, std::ostream& out) {
  AutoencoderParams<float> p = parse_checkpoint(bytes);
  const ModelConfig& m = p.config();
  out << "format NAEW\n";
  out << "version " << int(kCheckpointVersion) << "\n";
  out << "enc_channels " << m.enc_channels[0] << "," << m.enc_channels[1] << ","
      << m.enc_channels[2] << "\n";
  out << "code_channels " << m.code_channels << "\n";
  out << "dec_channels " << m.dec_channels[0] << "," << m.dec_channels[1] << ","
      << m.dec_channels[2] << "\n";
  out << "stride_kernel " << m.stride_kernel << "\n";
  out << "leaky_slope " << m.leaky_slope << "\n";
  out << "init_seed " << p.init_seed() << "\n";
  out << "parameters " << p.parameter_count() << "\n";
  for (const auto& np : p.all()) {
    out << np.name << " " << shape_str(np.tensor.shape()) << "\n";
  }
}

int cmd_inspect(const std::string& in, std::ostream& out) {
  std::vector<std::uint8_t> bytes = slurp(in);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, kCheckpointMagic)) {
    inspect_checkpoint(bytes, out);
  } else {
    inspect_bitstream(bytes, out);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned image codec: train, encode, decode, evaluate"};
  app.name(args.empty() ? "nic" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  std::string data, config, model, in, out_path, log_path, csv_path;
  bool resume = false;
  int threads = 0;
  LossFlags loss;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a directory of images");
  train_cmd->add_option("--data", data, "training image directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--config", config, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "checkpoint path")->required();
  train_cmd->add_option("--log", log_path, "CSV log path (default: <out>.csv)");
  train_cmd->add_flag("--resume", resume, "continue from <out> and <out>.state");

  CLI::App* encode_cmd = app.add_subcommand("encode", "compress one image");
  encode_cmd->add_option("--model", model)->required()->check(CLI::ExistingFile);
  encode_cmd->add_option("--in", in, "PNG or PPM image")->required()->check(CLI::ExistingFile);
  encode_cmd->add_option("--out", out_path, "bitstream path")->required();
  add_loss_flags(encode_cmd, loss);

  CLI::App* decode_cmd = app.add_subcommand("decode", "decompress one bitstream");
  decode_cmd->add_option("--model", model)->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--in", in, "bitstream path")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--out", out_path, "image path (.png, otherwise PPM)")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "encode and decode a directory, report metrics");
  eval_cmd->add_option("--model", model)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data, "image directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--csv", csv_path, "per-image CSV path (default: stdout)");
  eval_cmd->add_option("--threads", threads, "worker threads (default: NIC_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  add_loss_flags(eval_cmd, loss);

  CLI::App* inspect_cmd = app.add_subcommand("inspect", "describe a bitstream or checkpoint");
  inspect_cmd->add_option("--in", in)->required()->check(CLI::ExistingFile);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*train_cmd) return cmd_train(data, config, out_path, log_path, resume, out);
    if (*encode_cmd) return cmd_encode(model, in, out_path, loss, out);
    if (*decode_cmd) return cmd_decode(model, in, out_path, out);
    if (*eval_cmd) return cmd_eval(model, data, csv_path, threads, loss, out);
    if (*inspect_cmd) return cmd_inspect(in, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kFormat;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace nic::cli
