#include "nic/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "byte_io.h"
#include "nic/checkpoint.h"
#include "nic/errors.h"
#include "nic/ops.h"

namespace nic {

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.desk_scale = true;
  c.lr0 = 5e-4;
  c.epochs = 20;
  c.iters_per_epoch = 100;
  c.batch_size = 8;
  c.crop = 64;
  c.crop_stride = 32;
  return c;
}

void TrainConfig::validate() const {
  auto positive = [](long v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(halve_every, "halve_every");
  positive(epochs, "epochs");
  positive(iters_per_epoch, "iters_per_epoch");
  positive(batch_size, "batch_size");
  positive(crop, "crop");
  positive(crop_stride, "crop_stride");
  if (stop_halving_after < 0) throw ConfigError("stop_halving_after must be >= 0");
  if (!(lr0 > 0)) throw ConfigError("lr0 must be positive");
  if (crop % kDownsample != 0) throw ConfigError("crop must be divisible by 8");
  if (crop_stride * 2 != crop) throw ConfigError("crop_stride must equal crop / 2");
  if (!(flip_prob >= 0 && flip_prob <= 1)) throw ConfigError("flip_prob must lie in [0, 1]");
  if (finetune.steps < 0) throw ConfigError("finetune_steps must be >= 0");
  if (!(finetune.lr > 0)) throw ConfigError("finetune_lr must be positive");
  if (finetune.patience <= 0) throw ConfigError("finetune_patience must be positive");
  loss.resolved();
}

double lr_schedule(int epoch, const TrainConfig& config) {
  const int max_halvings = config.stop_halving_after / config.halve_every;
  const int halvings = std::min(std::max(epoch, 0) / config.halve_every, max_halvings);
  return config.lr0 / std::ldexp(1.0, halvings);
}

namespace {

std::vector<int> crop_offsets(int extent, int crop, int stride) {
  std::vector<int> out;
  for (int o = 0; o + crop <= extent; o += stride) out.push_back(o);
  if (out.empty() || out.back() != extent - crop) out.push_back(extent - crop);
  return out;
}

Tensor<float> center_pad_reflect(const Tensor<float>& img, int out_h, int out_w) {
  const int h = img.dim(1), w = img.dim(2);
  const int top = (out_h - h) / 2, left = (out_w - w) / 2;
  Tensor<float> out(Shape{3, out_h, out_w});
  auto src = img.data();
  auto dst = out.mutable_data();
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const int sy = reflect_index(y - top, h);
      for (int x = 0; x < out_w; ++x) {
        dst[(std::size_t(c) * out_h + y) * out_w + x] =
            src[(std::size_t(c) * h + sy) * w + reflect_index(x - left, w)];
      }
    }
  }
  return out;
}

Tensor<float> stack(const std::vector<Tensor<float>>& crops,
                    const std::vector<std::size_t>& index) {
  const Shape& s = crops[index[0]].shape();
  Tensor<float> batch(Shape{static_cast<int>(index.size()), s[0], s[1], s[2]});
  auto dst = batch.mutable_data();
  const std::size_t per = crops[index[0]].numel();
  for (std::size_t i = 0; i < index.size(); ++i) {
    auto src = crops[index[i]].data();
    std::copy(src.begin(), src.end(), dst.begin() + i * per);
  }
  return batch;
}

double mean_value(const Tensor<float>& t) {
  double acc = 0;
  for (float v : t.data()) acc += v;
  return t.numel() ? acc / static_cast<double>(t.numel()) : 0.0;
}

}  // namespace

std::vector<Tensor<float>> make_crops(const Tensor<float>& image, int crop, int stride) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("make_crops: expected 3 x H x W, got " + shape_str(image.shape()));
  }
  if (crop <= 0 || stride <= 0) throw ShapeError("make_crops: crop and stride must be positive");
  Tensor<float> src = image;
  if (image.dim(1) < crop || image.dim(2) < crop) {
    spdlog::info("make_crops: {}x{} image smaller than {} crop; reflect-padding",
                 image.dim(2), image.dim(1), crop);
    src = center_pad_reflect(image, std::max(crop, image.dim(1)),
                             std::max(crop, image.dim(2)));
  }
  const int h = src.dim(1), w = src.dim(2);
  std::vector<Tensor<float>> out;
  auto data = src.data();
  for (int oy : crop_offsets(h, crop, stride)) {
    for (int ox : crop_offsets(w, crop, stride)) {
      Tensor<float> c(Shape{3, crop, crop});
      auto dst = c.mutable_data();
      for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < crop; ++y) {
          const float* row = data.data() + (std::size_t(ch) * h + oy + y) * w + ox;
          std::copy(row, row + crop, dst.begin() + (std::size_t(ch) * crop + y) * crop);
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

Tensor<float> flip_horizontal(const Tensor<float>& batch, const std::vector<bool>& mask) {
  if (batch.rank() != 4 || mask.size() != static_cast<std::size_t>(batch.dim(0))) {
    throw ShapeError("flip_horizontal: mask does not match batch " + shape_str(batch.shape()));
  }
  Tensor<float> out = batch.detach();
  auto d = out.mutable_data();
  const int w = batch.dim(3);
  const std::size_t rows_per_sample = std::size_t(batch.dim(1)) * batch.dim(2);
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (!mask[n]) continue;
    for (std::size_t r = 0; r < rows_per_sample; ++r) {
      auto first = d.begin() + (n * rows_per_sample + r) * w;
      std::reverse(first, first + w);
    }
  }
  return out;
}

Tensor<float> augment(const Tensor<float>& batch, std::mt19937_64& rng, double flip_prob,
                      std::vector<bool>* mask_out) {
  std::bernoulli_distribution coin(flip_prob);
  std::vector<bool> mask(batch.dim(0));
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = coin(rng);
  if (mask_out) *mask_out = mask;
  return flip_horizontal(batch, mask);
}

std::string csv_header() { return "epoch,lr,loss,mse,ms_ssim,cycle,comp,activation_rate"; }

std::string csv_row(const EpochLog& e) {
  std::ostringstream os;
  os.precision(9);
  os << e.epoch << ',' << e.lr << ',' << e.loss << ',' << e.mse << ',' << e.ms_ssim << ','
     << e.cycle << ',' << e.comp << ',' << e.activation_rate;
  return os.str();
}

namespace {
constexpr char kStateMagic[4] = {'N', 'A', 'E', 'S'};
constexpr std::uint8_t kStateVersion = 1;
}  // namespace

void save_train_state(const std::string& path, const TrainState& state) {
  detail::ByteWriter w;
  w.bytes(kStateMagic, 4);
  w.u8(kStateVersion);
  w.le32(static_cast<std::uint32_t>(state.epochs_done));
  w.le64(state.adam.step);
  w.le32(static_cast<std::uint32_t>(state.adam.m.size()));
  for (std::size_t i = 0; i < state.adam.m.size(); ++i) {
    w.le32(static_cast<std::uint32_t>(state.adam.m[i].size()));
    for (float v : state.adam.m[i]) w.f32(v);
    for (float v : state.adam.v[i]) w.f32(v);
  }
  w.le32(static_cast<std::uint32_t>(state.rng_state.size()));
  w.bytes(state.rng_state.data(), state.rng_state.size());
  detail::write_file(path, w.buffer());
}

TrainState load_train_state(const std::string& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes.data(), bytes.size(), "train state");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kStateMagic, 4) != 0) throw FormatError("train state: bad magic");
  const int version = r.u8();
  if (version != kStateVersion) {
    throw VersionError("train state: unsupported version", version, kStateVersion);
  }
  TrainState s;
  s.epochs_done = static_cast<int>(r.le32());
  s.adam.step = r.le64();
  const std::uint32_t n = r.le32();
  s.adam.m.resize(n);
  s.adam.v.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t len = r.le32();
    s.adam.m[i].resize(len);
    s.adam.v[i].resize(len);
    for (float& v : s.adam.m[i]) v = r.f32();
    for (float& v : s.adam.v[i]) v = r.f32();
  }
  s.rng_state.resize(r.le32());
  r.bytes(s.rng_state.data(), s.rng_state.size());
  return s;
}

TrainResult train(const std::vector<Image>& images, const TrainConfig& config,
                  const ModelConfig& model, const TrainOptions& options) {
  config.validate();
  model.validate();
  if (images.empty()) throw ConfigError("training dataset is empty");

  std::vector<Tensor<float>> crops;
  for (const Image& img : images) {
    Tensor<float> t = image_to_tensor<float>(img);
    Tensor<float> chw(Shape{3, img.height, img.width}, t.values());
    auto c = make_crops(chw, config.crop, config.crop_stride);
    crops.insert(crops.end(), std::make_move_iterator(c.begin()),
                 std::make_move_iterator(c.end()));
  }
  spdlog::info("training on {} crops from {} images", crops.size(), images.size());

  AutoencoderParams<float> params = init_params<float>(model, config.seed);
  std::vector<Tensor<float>> tensors = params.tensors();
  AdamState<float> adam = AdamState<float>::zeros(tensors);
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  int first_epoch = 0;

  if (options.resume) {
    if (options.checkpoint_path.empty()) throw ConfigError("resume needs a checkpoint path");
    AutoencoderParams<float> loaded = load_checkpoint(options.checkpoint_path);
    if (!(loaded.config() == model)) {
      throw ConfigError("resume: checkpoint model configuration differs from config file");
    }
    params = std::move(loaded);
    tensors = params.tensors();
    TrainState st = load_train_state(options.checkpoint_path + ".state");
    adam.step = st.adam.step;
    adam.m = std::move(st.adam.m);
    adam.v = std::move(st.adam.v);
    std::istringstream is(st.rng_state);
    is >> rng;
    first_epoch = st.epochs_done;
    spdlog::info("resuming after epoch {}", first_epoch);
  }

  if (!options.log_path.empty()) {
    const bool fresh = !options.resume || !std::filesystem::exists(options.log_path);
    std::ofstream log(options.log_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw ConfigError("cannot write log " + options.log_path);
    if (fresh) log << csv_header() << '\n';
  }

  std::uniform_int_distribution<std::size_t> pick(0, crops.size() - 1);
  TrainResult result;
  std::int64_t global_step = std::int64_t(first_epoch) * config.iters_per_epoch;

  for (int epoch = first_epoch; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, config);
    EpochLog acc;
    acc.epoch = epoch;
    acc.lr = lr;
    for (int it = 0; it < config.iters_per_epoch; ++it, ++global_step) {
      std::vector<std::size_t> index(config.batch_size);
      for (auto& i : index) i = pick(rng);
      Tensor<float> batch = augment(stack(crops, index), rng, config.flip_prob);

      Tape<float> tape;
      params.zero_grad();
      TrainForward<float> f = forward_train(tape, batch, params);
      LossTerms<float> terms =
          combined_loss(tape, batch, f.recon, f.code_pre, config.loss, params);
      if (!std::isfinite(terms.total.item())) {
        throw NumericError("non-finite training loss at step " + std::to_string(global_step));
      }
      tape.backward(terms.total);
      adam_step(tensors, adam, lr);

      StepInfo info;
      info.step = global_step;
      info.epoch = epoch;
      info.lr = lr;
      info.loss = terms.total.item();
      info.mse = terms.mse;
      info.ms_ssim = terms.ms_ssim;
      info.cycle = terms.cycle;
      info.comp = terms.comp;
      info.activation_rate = mean_value(f.code_bin);
      if (options.on_step) options.on_step(info);
      acc.loss += info.loss;
      acc.mse += info.mse;
      acc.ms_ssim += info.ms_ssim;
      acc.cycle += info.cycle;
      acc.comp += info.comp;
      acc.activation_rate += info.activation_rate;
    }
    const double n = config.iters_per_epoch;
    acc.loss /= n;
    acc.mse /= n;
    acc.ms_ssim /= n;
    acc.cycle /= n;
    acc.comp /= n;
    acc.activation_rate /= n;
    result.log.push_back(acc);
    spdlog::info("epoch {} lr {:.3g} loss {:.6f} mse {:.6f} act {:.4f}", epoch, lr, acc.loss,
                 acc.mse, acc.activation_rate);

    if (!options.log_path.empty()) {
      std::ofstream log(options.log_path, std::ios::app);
      log << csv_row(acc) << '\n';
    }
    if (!options.checkpoint_path.empty()) {
      save_checkpoint(options.checkpoint_path, params);
      TrainState st;
      st.epochs_done = epoch + 1;
      st.adam = adam;
      std::ostringstream os;
      os << rng;
      st.rng_state = os.str();
      save_train_state(options.checkpoint_path + ".state", st);
    }
  }
  result.params = std::move(params);
  return result;
}

TrainResult train(const std::string& dataset_dir, const TrainConfig& config,
                  const ModelConfig& model, const TrainOptions& options) {
  std::vector<std::string> files;
  try {
    files = list_images(dataset_dir);
  } catch (const FormatError& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  if (files.empty()) throw ConfigError("dataset directory has no images: " + dataset_dir);
  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_image(f));
  return train(images, config, model, options);
}

FinetuneResult post_train_encoder_opt(const Tensor<float>& image,
                                      const AutoencoderParams<float>& params,
                                      const LossConfig& loss, const FinetuneConfig& config) {
  FinetuneResult out;
  AutoencoderParams<float> work = params.clone();
  work.set_requires_grad(Partition::kDecoder, false);
  work.set_requires_grad(Partition::kEncoder, true);
  std::vector<Tensor<float>> enc = work.partition(Partition::kEncoder);
  AdamState<float> adam = AdamState<float>::zeros(enc);

  std::vector<std::vector<float>> best(enc.size());
  auto snapshot = [&]() {
    for (std::size_t i = 0; i < enc.size(); ++i) best[i].assign(enc[i].data().begin(), enc[i].data().end());
  };
  snapshot();

  // Objective and gradients at the current encoder.
  auto evaluate = [&](bool with_grad) {
    Tape<float> tape;
    tape.set_enabled(with_grad);
    work.zero_grad();
    TrainForward<float> f = forward_train(tape, image, work);
    LossTerms<float> terms = combined_loss(tape, image, f.recon, f.code_pre, loss, work);
    if (with_grad) tape.backward(terms.total);
    return std::pair<double, double>(terms.total.item(), terms.task);
  };

  bool first = true;
  int since_best = 0;
  for (int s = 0; s <= config.steps; ++s) {
    const bool last = s == config.steps;
    auto [total, task] = evaluate(!last);
    out.trace.push_back(total);
    if (first) {
      out.initial_loss = out.best_loss = total;
      out.initial_task = out.best_task = task;
      first = false;
    } else if (total < out.best_loss && task <= out.initial_task) {
      out.best_loss = total;
      out.best_task = task;
      snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
    if (last) break;
    adam_step(enc, adam, config.lr);
    out.steps_run = s + 1;
  }
  for (std::size_t i = 0; i < enc.size(); ++i) {
    std::copy(best[i].begin(), best[i].end(), enc[i].mutable_data().begin());
  }
  work.set_requires_grad(Partition::kDecoder, true);
  out.params = std::move(work);
  return out;
}

}  // namespace nic
