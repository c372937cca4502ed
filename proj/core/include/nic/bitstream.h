#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nic {

// Compressed-image container (15-byte header, big-endian integers):
//   "NIC1" | version u8 | orig_width u16 | orig_height u16 |
//   code_channels u8 | downsample_log2 u8 | payload_len u32 | payload
inline constexpr char kBitstreamMagic[4] = {'N', 'I', 'C', '1'};
inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::size_t kBitstreamHeaderSize = 15;

struct BitstreamHeader {
  std::uint8_t version = kBitstreamVersion;
  std::uint16_t orig_width = 0;
  std::uint16_t orig_height = 0;
  std::uint8_t code_channels = 0;
  std::uint8_t downsample_log2 = 3;
  std::uint32_t payload_len = 0;

  int latent_height() const;  // ceil(orig_height / 2^downsample_log2)
  int latent_width() const;
  bool operator==(const BitstreamHeader&) const = default;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<std::uint8_t> payload;

  std::size_t total_bytes() const { return kBitstreamHeaderSize + payload.size(); }
};

std::vector<std::uint8_t> serialize_header(const BitstreamHeader& h);
// Reads and validates the header (magic, version, downsample factor).
BitstreamHeader parse_header(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_bitstream(const Bitstream& s);
// Takes exactly payload_len bytes after the header; anything beyond is ignored.
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);

}  // namespace nic
