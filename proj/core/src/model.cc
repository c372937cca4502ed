#include "nic/model.h"

#include <cmath>
#include <random>

#include "nic/errors.h"
#include "nic/ops.h"

namespace nic {
namespace {

constexpr int kImageChannels = 3;

int strided_pad(const ModelConfig& c) { return (c.stride_kernel - 2) / 2; }

void add_conv(std::vector<ParamSpec>& out, const std::string& name, Partition part,
              int cin, int cout, int k) {
  out.push_back({name + ".w", part, Shape{cout, cin, k, k}, cin * k * k});
  out.push_back({name + ".b", part, Shape{cout}, cin * k * k});
}

void add_deconv(std::vector<ParamSpec>& out, const std::string& name,
                Partition part, int cin, int cout, int k, int stride) {
  const int fan_in = cin * k * k / (stride * stride);
  out.push_back({name + ".w", part, Shape{cin, cout, k, k}, fan_in});
  out.push_back({name + ".b", part, Shape{cout}, fan_in});
}

void add_residual(std::vector<ParamSpec>& out, const std::string& name,
                  Partition part, int c) {
  const std::size_t first = out.size();
  add_conv(out, name + ".c1", part, c, c / 4, 1);
  add_conv(out, name + ".c2", part, c / 4, c / 4, 3);
  add_conv(out, name + ".c3", part, c / 4, c, 1);
  for (std::size_t i = first; i < out.size(); ++i) out[i].gain = 2.0;
}

template <typename T>
Tensor<T> conv_layer(Tape<T>& tape, const Tensor<T>& x,
                     const AutoencoderParams<T>& p, const std::string& name,
                     int stride, int pad) {
  return ops::conv2d(tape, x, p.get(name + ".w"), p.get(name + ".b"), stride, pad);
}

void require_multiple_of_8(const Shape& s, const char* what) {
  if (s.size() != 4 || s[2] % kDownsample != 0 || s[3] % kDownsample != 0 ||
      s[2] == 0 || s[3] == 0) {
    throw ShapeError(std::string(what) +
                     ": expected N x 3 x H x W with H, W positive multiples of 8, got " +
                     shape_str(s));
  }
}

}  // namespace

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.enc_channels = {16, 32, 48};
  c.code_channels = 8;
  c.dec_channels = {48, 32, 16};
  return c;
}

void ModelConfig::validate() const {
  auto check = [](int c, const char* what) {
    if (c < 4 || c % 4 != 0) {
      throw ConfigError(std::string(what) + " must be a multiple of 4 and >= 4, got " +
                        std::to_string(c));
    }
  };
  for (int c : enc_channels) check(c, "enc_channels");
  for (int c : dec_channels) check(c, "dec_channels");
  check(code_channels, "code_channels");
  if (code_channels > 255) {
    throw ConfigError("code_channels must fit in one byte, got " +
                      std::to_string(code_channels));
  }
  if (stride_kernel < 2 || stride_kernel % 2 != 0) {
    throw ConfigError("stride_kernel must be even and >= 2, got " +
                      std::to_string(stride_kernel));
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw ConfigError("leaky_slope must lie in [0, 1)");
  }
}

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  c.validate();
  std::vector<ParamSpec> out;
  const int k = c.stride_kernel;
  int cin = kImageChannels;
  for (int b = 0; b < 3; ++b) {
    const std::string blk = std::to_string(b);
    add_conv(out, "enc.down" + blk, Partition::kEncoder, cin, c.enc_channels[b], k);
    add_residual(out, "enc.res" + blk, Partition::kEncoder, c.enc_channels[b]);
    cin = c.enc_channels[b];
  }
  add_conv(out, "enc.proj", Partition::kEncoder, cin, c.code_channels, 1);
  cin = c.code_channels;
  for (int b = 0; b < 3; ++b) {
    const std::string blk = std::to_string(b);
    add_deconv(out, "dec.up" + blk, Partition::kDecoder, cin, c.dec_channels[b], k, 2);
    add_residual(out, "dec.res" + blk, Partition::kDecoder, c.dec_channels[b]);
    cin = c.dec_channels[b];
  }
  add_conv(out, "dec.out", Partition::kDecoder, cin, kImageChannels, 1);
  return out;
}

template <typename T>
AutoencoderParams<T>::AutoencoderParams(ModelConfig config,
                                        std::vector<NamedParam<T>> params,
                                        std::uint64_t init_seed)
    : config_(config), params_(std::move(params)), init_seed_(init_seed) {
  auto specs = param_specs(config_);
  if (specs.size() != params_.size()) {
    throw ShapeError("parameter list has " + std::to_string(params_.size()) +
                     " tensors, configuration needs " + std::to_string(specs.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].name != params_[i].name || specs[i].part != params_[i].part ||
        specs[i].shape != params_[i].tensor.shape()) {
      throw ShapeError("parameter " + std::to_string(i) + " (" + params_[i].name +
                       " " + shape_str(params_[i].tensor.shape()) +
                       ") does not match configuration (" + specs[i].name + " " +
                       shape_str(specs[i].shape) + ")");
    }
  }
}

template <typename T>
const Tensor<T>& AutoencoderParams<T>::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ShapeError("no parameter named " + name);
}

template <typename T>
Tensor<T>& AutoencoderParams<T>::get(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ShapeError("no parameter named " + name);
}

template <typename T>
std::vector<Tensor<T>> AutoencoderParams<T>::partition(Partition part) const {
  std::vector<Tensor<T>> out;
  for (const auto& p : params_) {
    if (p.part == part) out.push_back(p.tensor);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> AutoencoderParams<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::size_t AutoencoderParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
void AutoencoderParams<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
void AutoencoderParams<T>::set_requires_grad(Partition part, bool on) {
  for (auto& p : params_) {
    if (p.part == part) p.tensor.set_requires_grad(on);
  }
}

template <typename T>
AutoencoderParams<T> AutoencoderParams<T>::clone() const {
  std::vector<NamedParam<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back({p.name, p.part, p.tensor.clone()});
  return AutoencoderParams<T>(config_, std::move(out), init_seed_);
}

template <typename T>
AutoencoderParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto specs = param_specs(config);
  std::mt19937_64 rng(seed);
  std::vector<NamedParam<T>> params;
  params.reserve(specs.size());
  for (const auto& s : specs) {
    Tensor<T> t(s.shape);
    const bool is_bias = s.shape.size() == 1;
    if (!is_bias) {
      const double bound = std::sqrt(3.0 * s.gain / s.fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (T& v : t.mutable_data()) v = static_cast<T>(dist(rng));
    }
    t.set_requires_grad(true);
    params.push_back({s.name, s.part, std::move(t)});
  }
  return AutoencoderParams<T>(config, std::move(params), seed);
}

template <typename T>
Tensor<T> residual_block(Tape<T>& tape, const Tensor<T>& x,
                         const AutoencoderParams<T>& params,
                         const std::string& prefix) {
  if (x.rank() != 4 || x.dim(1) % 4 != 0) {
    throw ShapeError("residual_block: channel count must be divisible by 4, input " +
                     shape_str(x.shape()));
  }
  const T slope = static_cast<T>(params.config().leaky_slope);
  Tensor<T> h = ops::leaky_relu(tape, x, slope);
  h = conv_layer(tape, h, params, prefix + ".c1", 1, 0);
  h = ops::leaky_relu(tape, h, slope);
  h = conv_layer(tape, h, params, prefix + ".c2", 1, 1);
  h = ops::leaky_relu(tape, h, slope);
  h = conv_layer(tape, h, params, prefix + ".c3", 1, 0);
  return ops::add(tape, x, h);
}

template <typename T>
Tensor<T> encode_features(Tape<T>& tape, const Tensor<T>& image,
                          const AutoencoderParams<T>& params) {
  require_multiple_of_8(image.shape(), "encode_features");
  if (image.dim(1) != kImageChannels) {
    throw ShapeError("encode_features: expected 3 image channels, got " +
                     shape_str(image.shape()));
  }
  const int pad = strided_pad(params.config());
  Tensor<T> h = image;
  for (int b = 0; b < 3; ++b) {
    const std::string blk = std::to_string(b);
    h = conv_layer(tape, h, params, "enc.down" + blk, 2, pad);
    h = residual_block(tape, h, params, "enc.res" + blk);
  }
  h = conv_layer(tape, h, params, "enc.proj", 1, 0);
  return ops::sigmoid(tape, h);
}

template <typename T>
Tensor<T> decode(Tape<T>& tape, const Tensor<T>& code,
                 const AutoencoderParams<T>& params) {
  if (code.rank() != 4 || code.dim(1) != params.config().code_channels) {
    throw ShapeError("decode: expected N x " +
                     std::to_string(params.config().code_channels) +
                     " x h x w code, got " + shape_str(code.shape()));
  }
  const int pad = strided_pad(params.config());
  Tensor<T> h = code;
  for (int b = 0; b < 3; ++b) {
    const std::string blk = std::to_string(b);
    h = ops::conv2d_transpose(tape, h, params.get("dec.up" + blk + ".w"),
                              params.get("dec.up" + blk + ".b"), 2, pad);
    h = residual_block(tape, h, params, "dec.res" + blk);
  }
  h = conv_layer(tape, h, params, "dec.out", 1, 0);
  return ops::sigmoid(tape, h);
}

template <typename T>
TrainForward<T> forward_train(Tape<T>& tape, const Tensor<T>& image,
                              const AutoencoderParams<T>& params) {
  TrainForward<T> f;
  f.code_pre = encode_features(tape, image, params);
  f.code_bin = ops::ste_round(tape, f.code_pre);
  f.recon = decode(tape, f.code_bin, params);
  return f;
}

template <typename T>
Tensor<T> encode_frozen(Tape<T>& tape, const Tensor<T>& image,
                        const AutoencoderParams<T>& params) {
  std::vector<NamedParam<T>> frozen;
  for (const auto& p : params.all()) {
    // Decoder tensors are never touched by the encoder path; share them.
    frozen.push_back({p.name, p.part,
                      p.part == Partition::kEncoder ? p.tensor.detach() : p.tensor});
  }
  AutoencoderParams<T> constants(params.config(), std::move(frozen), params.init_seed());
  return encode_features(tape, image, constants);
}

#define NIC_INSTANTIATE(T)                                                          \
  template class AutoencoderParams<T>;                                              \
  template AutoencoderParams<T> init_params<T>(const ModelConfig&, std::uint64_t);  \
  template Tensor<T> residual_block<T>(Tape<T>&, const Tensor<T>&,                  \
                                       const AutoencoderParams<T>&,                 \
                                       const std::string&);                         \
  template Tensor<T> encode_features<T>(Tape<T>&, const Tensor<T>&,                 \
                                        const AutoencoderParams<T>&);               \
  template Tensor<T> decode<T>(Tape<T>&, const Tensor<T>&,                          \
                               const AutoencoderParams<T>&);                        \
  template TrainForward<T> forward_train<T>(Tape<T>&, const Tensor<T>&,             \
                                            const AutoencoderParams<T>&);           \
  template Tensor<T> encode_frozen<T>(Tape<T>&, const Tensor<T>&,                   \
                                      const AutoencoderParams<T>&);

NIC_INSTANTIATE(float)
NIC_INSTANTIATE(double)
#undef NIC_INSTANTIATE

}  // namespace nic
