#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace nic {

// Binarized latent of one image: channels x height x width values in {0, 1},
// channel-major then row-major.
struct CodeTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  CodeTensor() = default;
  CodeTensor(int c, int h, int w)
      : channels(c), height(h), width(w), bits(std::size_t(c) * h * w, 0) {}

  std::size_t size() const { return bits.size(); }
  std::uint8_t at(int c, int y, int x) const {
    return bits[(std::size_t(c) * height + y) * width + x];
  }
  // Throws ShapeError unless every value is 0/1 and the length matches.
  void validate() const;
  double activation_rate() const;
  bool operator==(const CodeTensor&) const = default;
};

// Context for one bit from its channel and the already-coded left and top
// neighbours in the same channel (0 outside the plane).
constexpr int context_index(int channel, int left_bit, int top_bit) {
  return channel * 4 + 2 * left_bit + top_bit;
}

// Adaptive Krichevsky-Trofimov estimate per context:
//   p1 = (n1 + 1/2) / (n0 + n1 + 1).
class ContextModel {
 public:
  explicit ContextModel(int channels) : counts_(std::size_t(channels) * 4, {0, 0}) {}

  std::size_t size() const { return counts_.size(); }
  std::uint64_t n0(int ctx) const { return counts_[ctx][0]; }
  std::uint64_t n1(int ctx) const { return counts_[ctx][1]; }
  double p1(int ctx) const;
  // Probability of a zero bit in 1/65536 units, clamped to [1, 65535].
  std::uint32_t p0_q16(int ctx) const;
  void update(int ctx, int bit) { ++counts_[ctx][bit]; }

  bool operator==(const ContextModel&) const = default;

 private:
  std::vector<std::array<std::uint64_t, 2>> counts_;
};

// Binary range coder: 32-bit range, byte-wise renormalization with carry
// propagation through a cached byte. Probabilities are 16-bit.
class RangeEncoder {
 public:
  void encode(int bit, std::uint32_t p0_q16);
  // Flushes the coder state; the encoder must not be used afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  // Throws FormatError("truncated stream") if fewer than 5 bytes.
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(std::uint32_t p0_q16);
  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t next();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

// Codes every bit of `code` under its context's adaptive probability.
// `final_model`, when given, receives the context state after the last bit.
std::vector<std::uint8_t> cabac_encode(const CodeTensor& code,
                                       ContextModel* final_model = nullptr);

// Inverse of cabac_encode. Bytes past the end of the coded data are
// ignored; running out of bytes throws FormatError("truncated stream").
CodeTensor cabac_decode(std::span<const std::uint8_t> payload, int channels,
                        int height, int width, ContextModel* final_model = nullptr);

// Ideal adaptive code length in bits of `code` under the same model
// (sum of -log2 p over all bits), split per context.
std::vector<double> context_costs(const CodeTensor& code);

}  // namespace nic
