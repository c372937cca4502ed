#include "nic/entropy_coder.h"

#include <algorithm>
#include <cmath>

#include "nic/errors.h"

namespace nic {
namespace {

constexpr std::uint32_t kTop = 1u << 24;

// Visits bits in coding order with their context.
template <typename F>
void for_each_context(int channels, int height, int width, const std::uint8_t* bits,
                      F&& f) {
  for (int c = 0; c < channels; ++c) {
    const std::uint8_t* plane = bits + std::size_t(c) * height * width;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const int left = x > 0 ? plane[std::size_t(y) * width + x - 1] : 0;
        const int top = y > 0 ? plane[std::size_t(y - 1) * width + x] : 0;
        f(std::size_t(y) * width + x + std::size_t(c) * height * width,
          context_index(c, left, top));
      }
    }
  }
}

}  // namespace

void CodeTensor::validate() const {
  if (channels < 0 || height < 0 || width < 0 ||
      bits.size() != std::size_t(channels) * height * width) {
    throw ShapeError("code tensor " + std::to_string(channels) + "x" +
                     std::to_string(height) + "x" + std::to_string(width) + " holds " +
                     std::to_string(bits.size()) + " values");
  }
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) {
      throw ShapeError("code tensor value " + std::to_string(bits[i]) + " at index " +
                       std::to_string(i) + " is not binary");
    }
  }
}

double CodeTensor::activation_rate() const {
  if (bits.empty()) return 0.0;
  std::size_t ones = std::count(bits.begin(), bits.end(), std::uint8_t{1});
  return static_cast<double>(ones) / static_cast<double>(bits.size());
}

double ContextModel::p1(int ctx) const {
  const auto& c = counts_[ctx];
  return (static_cast<double>(c[1]) + 0.5) / (static_cast<double>(c[0] + c[1]) + 1.0);
}

std::uint32_t ContextModel::p0_q16(int ctx) const {
  const auto& c = counts_[ctx];
  const std::uint64_t num = (2 * c[0] + 1) << 16;
  const std::uint64_t den = 2 * (c[0] + c[1]) + 2;
  return static_cast<std::uint32_t>(std::clamp<std::uint64_t>(num / den, 1, 65535));
}

void RangeEncoder::encode(int bit, std::uint32_t p0_q16) {
  const std::uint32_t bound = (range_ >> 16) * p0_q16;
  if (bit == 0) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next();
}

std::uint8_t RangeDecoder::next() {
  if (pos_ >= in_.size()) throw FormatError("truncated stream");
  return in_[pos_++];
}

int RangeDecoder::decode(std::uint32_t p0_q16) {
  const std::uint32_t bound = (range_ >> 16) * p0_q16;
  int bit;
  if (code_ < bound) {
    range_ = bound;
    bit = 0;
  } else {
    code_ -= bound;
    range_ -= bound;
    bit = 1;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next();
  }
  return bit;
}

std::vector<std::uint8_t> cabac_encode(const CodeTensor& code, ContextModel* final_model) {
  code.validate();
  ContextModel model(code.channels);
  RangeEncoder enc;
  for_each_context(code.channels, code.height, code.width, code.bits.data(),
                   [&](std::size_t i, int ctx) {
                     const int bit = code.bits[i];
                     enc.encode(bit, model.p0_q16(ctx));
                     model.update(ctx, bit);
                   });
  if (final_model) *final_model = model;
  return enc.finish();
}

CodeTensor cabac_decode(std::span<const std::uint8_t> payload, int channels, int height,
                        int width, ContextModel* final_model) {
  if (channels < 0 || height < 0 || width < 0) {
    throw ShapeError("cabac_decode: negative dimensions");
  }
  CodeTensor code(channels, height, width);
  ContextModel model(channels);
  RangeDecoder dec(payload);
  // Neighbours are read from already-decoded positions only.
  for_each_context(channels, height, width, code.bits.data(), [&](std::size_t i, int ctx) {
    const int bit = dec.decode(model.p0_q16(ctx));
    code.bits[i] = static_cast<std::uint8_t>(bit);
    model.update(ctx, bit);
  });
  if (final_model) *final_model = model;
  return code;
}

std::vector<double> context_costs(const CodeTensor& code) {
  code.validate();
  ContextModel model(code.channels);
  std::vector<double> cost(model.size(), 0.0);
  for_each_context(code.channels, code.height, code.width, code.bits.data(),
                   [&](std::size_t i, int ctx) {
                     const int bit = code.bits[i];
                     const double p1 = model.p1(ctx);
                     cost[ctx] -= std::log2(bit ? p1 : 1.0 - p1);
                     model.update(ctx, bit);
                   });
  return cost;
}

}  // namespace nic
