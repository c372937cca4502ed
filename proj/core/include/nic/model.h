#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nic/tape.h"
#include "nic/tensor.h"

namespace nic {

struct ModelConfig {
  std::array<int, 3> enc_channels{64, 128, 192};
  int code_channels = 16;
  std::array<int, 3> dec_channels{192, 128, 64};
  double leaky_slope = 0.2;
  int stride_kernel = 4;  // strided conv / deconv kernel, stride 2, pad 1

  // Small widths for single-core runs.
  static ModelConfig desk();

  // Throws ConfigError when a channel count is < 4 or not divisible by 4,
  // or the strided kernel cannot produce exact 2x resampling.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Total down/upsampling factor of the autoencoder.
inline constexpr int kDownsample = 8;
inline constexpr int kDownsampleLog2 = 3;

enum class Partition : std::uint8_t { kEncoder = 0, kDecoder = 1 };

template <typename T>
struct NamedParam {
  std::string name;
  Partition part;
  Tensor<T> tensor;
};

// All learnable tensors of the autoencoder in canonical order: encoder
// layers first, then decoder layers. Encoder and decoder never share a
// tensor.
template <typename T>
class AutoencoderParams {
 public:
  AutoencoderParams() = default;
  AutoencoderParams(ModelConfig config, std::vector<NamedParam<T>> params,
                    std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  std::uint64_t init_seed() const { return init_seed_; }

  const std::vector<NamedParam<T>>& all() const { return params_; }
  std::vector<NamedParam<T>>& all() { return params_; }
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);

  std::vector<Tensor<T>> partition(Partition part) const;
  std::vector<Tensor<T>> tensors() const;
  std::size_t parameter_count() const;

  void zero_grad();
  void set_requires_grad(Partition part, bool on);
  // Deep copy (fresh storage for every tensor).
  AutoencoderParams clone() const;

  template <typename U>
  AutoencoderParams<U> cast() const {
    std::vector<NamedParam<U>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) {
      out.push_back(NamedParam<U>{p.name, p.part, tensor_cast<U>(p.tensor)});
    }
    return AutoencoderParams<U>(config_, std::move(out), init_seed_);
  }

 private:
  ModelConfig config_;
  std::vector<NamedParam<T>> params_;
  std::uint64_t init_seed_ = 0;
};

// Canonical (name, partition, shape) list for a configuration.
struct ParamSpec {
  std::string name;
  Partition part;
  Shape shape;
  int fan_in;
  double gain = 1.0;
};
std::vector<ParamSpec> param_specs(const ModelConfig& config);

// Weights uniform in +-sqrt(3 * gain / fan_in) (variance gain / fan_in),
// biases zero. gain is 2 inside residual branches, whose convolutions follow
// a leaky ReLU, and 1 for the strided, projection and output layers. fan_in
// counts the inputs that reach one output element: Cin * k * k for
// convolutions and Cin * k * k / stride^2 for transposed convolutions.
template <typename T>
AutoencoderParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

// y = x + f(x), f = lrelu -> 1x1 (C/4) -> lrelu -> 3x3 (C/4) -> lrelu -> 1x1 (C).
// `prefix` selects the block's parameters, e.g. "enc.res0".
template <typename T>
Tensor<T> residual_block(Tape<T>& tape, const Tensor<T>& x,
                         const AutoencoderParams<T>& params,
                         const std::string& prefix);

// Image N x 3 x H x W in [0, 1] (H, W multiples of 8) -> code in (0, 1),
// N x C x H/8 x W/8, before binarization.
template <typename T>
Tensor<T> encode_features(Tape<T>& tape, const Tensor<T>& image,
                          const AutoencoderParams<T>& params);

// Code N x C x h x w -> image N x 3 x 8h x 8w in (0, 1).
template <typename T>
Tensor<T> decode(Tape<T>& tape, const Tensor<T>& code,
                 const AutoencoderParams<T>& params);

template <typename T>
struct TrainForward {
  Tensor<T> code_pre;  // sigmoid output
  Tensor<T> code_bin;  // ste_round(code_pre), values in {0, 1}
  Tensor<T> recon;     // decode(code_bin)
};

template <typename T>
TrainForward<T> forward_train(Tape<T>& tape, const Tensor<T>& image,
                              const AutoencoderParams<T>& params);

// Same values as encode_features, but the encoder weights enter the graph as
// constants: gradients reach `image` only.
template <typename T>
Tensor<T> encode_frozen(Tape<T>& tape, const Tensor<T>& image,
                        const AutoencoderParams<T>& params);

}  // namespace nic
