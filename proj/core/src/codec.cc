#include "nic/codec.h"

#include <limits>

#include "nic/errors.h"
#include "nic/ops.h"

namespace nic {

Tensor<float> padded_input(const Image& image) {
  if (image.width <= 0 || image.height <= 0) {
    throw ShapeError("compress: zero-sized image");
  }
  const int h = (image.height + kDownsample - 1) / kDownsample * kDownsample;
  const int w = (image.width + kDownsample - 1) / kDownsample * kDownsample;
  return pad_reflect(image_to_tensor<float>(image), h, w);
}

CodeTensor code_from_tensor(const Tensor<float>& code_bin) {
  if (code_bin.rank() != 4 || code_bin.dim(0) != 1) {
    throw ShapeError("code_from_tensor: expected 1 x C x h x w, got " +
                     shape_str(code_bin.shape()));
  }
  CodeTensor code(code_bin.dim(1), code_bin.dim(2), code_bin.dim(3));
  auto d = code_bin.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0f && d[i] != 1.0f) {
      throw ShapeError("code_from_tensor: non-binary value at index " + std::to_string(i));
    }
    code.bits[i] = d[i] != 0.0f;
  }
  return code;
}

Tensor<float> code_to_tensor(const CodeTensor& code) {
  code.validate();
  std::vector<float> values(code.bits.begin(), code.bits.end());
  return Tensor<float>(Shape{1, code.channels, code.height, code.width}, std::move(values));
}

Image reconstruct(const CodeTensor& code, const AutoencoderParams<float>& params, int width,
                  int height) {
  Tape<float> tape;
  tape.set_enabled(false);
  Tensor<float> recon = decode(tape, code_to_tensor(code), params);
  return tensor_to_image(crop(recon, height, width));
}

double task_loss(const Tensor<float>& input, const AutoencoderParams<float>& params,
                 const LossConfig& loss) {
  Tape<float> tape;
  tape.set_enabled(false);
  TrainForward<float> f = forward_train(tape, input, params);
  return combined_loss(tape, input, f.recon, f.code_pre, loss, params).task;
}

CompressResult compress_image(const Image& image, const AutoencoderParams<float>& params,
                              const CompressOptions& options) {
  if (image.width > std::numeric_limits<std::uint16_t>::max() ||
      image.height > std::numeric_limits<std::uint16_t>::max()) {
    throw ShapeError("compress: image dimensions exceed 65535");
  }
  Tensor<float> input = padded_input(image);
  CompressResult out;
  const AutoencoderParams<float>* model = &params;
  if (options.finetune) {
    out.finetune = post_train_encoder_opt(input, params, options.loss, options.finetune_config);
    model = &out.finetune->params;
    out.task_loss = out.finetune->best_task;
  } else {
    out.task_loss = task_loss(input, params, options.loss);
  }
  Tape<float> tape;
  tape.set_enabled(false);
  Tensor<float> code_bin = ops::ste_round(tape, encode_features(tape, input, *model));
  out.code = code_from_tensor(code_bin);
  out.stream.payload = cabac_encode(out.code);
  BitstreamHeader& h = out.stream.header;
  h.orig_width = static_cast<std::uint16_t>(image.width);
  h.orig_height = static_cast<std::uint16_t>(image.height);
  h.code_channels = static_cast<std::uint8_t>(out.code.channels);
  h.downsample_log2 = kDownsampleLog2;
  h.payload_len = static_cast<std::uint32_t>(out.stream.payload.size());
  return out;
}

Image decompress_image(const Bitstream& stream, const AutoencoderParams<float>& params) {
  const BitstreamHeader& h = stream.header;
  if (h.code_channels != params.config().code_channels) {
    throw FormatError("bitstream has " + std::to_string(h.code_channels) +
                      " code channels, model expects " +
                      std::to_string(params.config().code_channels));
  }
  if (h.orig_width == 0 || h.orig_height == 0) throw FormatError("bitstream: zero image size");
  if (h.payload_len != stream.payload.size()) {
    throw FormatError("bitstream: payload_len does not match payload");
  }
  CodeTensor code = cabac_decode(stream.payload, h.code_channels, h.latent_height(),
                                 h.latent_width());
  return reconstruct(code, params, h.orig_width, h.orig_height);
}

double bits_per_pixel(std::size_t bytes, int width, int height) {
  return 8.0 * static_cast<double>(bytes) / (static_cast<double>(width) * height);
}

}  // namespace nic
