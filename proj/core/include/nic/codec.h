#pragma once

#include <optional>

#include "nic/bitstream.h"
#include "nic/entropy_coder.h"
#include "nic/image.h"
#include "nic/losses.h"
#include "nic/model.h"
#include "nic/trainer.h"

namespace nic {

struct CompressOptions {
  bool finetune = false;
  LossConfig loss = LossConfig::for_mode(LossMode::kMse);
  FinetuneConfig finetune_config;
};

struct CompressResult {
  Bitstream stream;
  CodeTensor code;
  std::optional<FinetuneResult> finetune;
  double task_loss = 0;  // task loss of the encoder actually used
};

// Task loss (distortion terms of `loss`, no rate term) of one forward pass on
// a 1 x 3 x H x W input.
double task_loss(const Tensor<float>& input, const AutoencoderParams<float>& params,
                 const LossConfig& loss);

// Normalized image reflect-padded to multiples of 8: 1 x 3 x H' x W'.
Tensor<float> padded_input(const Image& image);

CodeTensor code_from_tensor(const Tensor<float>& code_bin);  // 1 x C x h x w
Tensor<float> code_to_tensor(const CodeTensor& code);

// Runs the decoder on a code and returns the 8-bit image cropped to
// width x height.
Image reconstruct(const CodeTensor& code, const AutoencoderParams<float>& params, int width,
                  int height);

// normalize -> pad -> [fine-tune encoder] -> encode -> round -> entropy code.
CompressResult compress_image(const Image& image, const AutoencoderParams<float>& params,
                              const CompressOptions& options = {});

// Entropy decode -> decoder -> crop -> 8-bit. Throws FormatError when the
// stream's code shape does not fit the model.
Image decompress_image(const Bitstream& stream, const AutoencoderParams<float>& params);

// 8 * bytes / (width * height)
double bits_per_pixel(std::size_t bytes, int width, int height);

}  // namespace nic
