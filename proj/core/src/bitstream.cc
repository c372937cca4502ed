#include "nic/bitstream.h"

#include <cstring>

#include "byte_io.h"
#include "nic/errors.h"
#include "nic/model.h"

namespace nic {

int BitstreamHeader::latent_height() const {
  const int f = 1 << downsample_log2;
  return (orig_height + f - 1) / f;
}

int BitstreamHeader::latent_width() const {
  const int f = 1 << downsample_log2;
  return (orig_width + f - 1) / f;
}

std::vector<std::uint8_t> serialize_header(const BitstreamHeader& h) {
  detail::ByteWriter w;
  w.bytes(kBitstreamMagic, 4);
  w.u8(h.version);
  w.be16(h.orig_width);
  w.be16(h.orig_height);
  w.u8(h.code_channels);
  w.u8(h.downsample_log2);
  w.be32(h.payload_len);
  return std::move(w.buffer());
}

BitstreamHeader parse_header(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes.data(), bytes.size(), "bitstream header");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kBitstreamMagic, 4) != 0) {
    throw FormatError("bitstream: bad magic, expected NIC1");
  }
  BitstreamHeader h;
  h.version = r.u8();
  if (h.version != kBitstreamVersion) {
    throw VersionError("bitstream: unsupported version", h.version, kBitstreamVersion);
  }
  h.orig_width = r.be16();
  h.orig_height = r.be16();
  h.code_channels = r.u8();
  h.downsample_log2 = r.u8();
  h.payload_len = r.be32();
  if (h.downsample_log2 != kDownsampleLog2) {
    throw FormatError("bitstream: downsample_log2 " + std::to_string(h.downsample_log2) +
                      " not supported (expected 3)");
  }
  return h;
}

std::vector<std::uint8_t> serialize_bitstream(const Bitstream& s) {
  if (s.header.payload_len != s.payload.size()) {
    throw FormatError("bitstream: payload_len " + std::to_string(s.header.payload_len) +
                      " does not match payload size " + std::to_string(s.payload.size()));
  }
  auto out = serialize_header(s.header);
  out.insert(out.end(), s.payload.begin(), s.payload.end());
  return out;
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  Bitstream s;
  s.header = parse_header(bytes);
  const std::size_t avail = bytes.size() - kBitstreamHeaderSize;
  if (avail < s.header.payload_len) {
    throw FormatError("bitstream: payload_len " + std::to_string(s.header.payload_len) +
                      " exceeds the " + std::to_string(avail) + " bytes present");
  }
  auto first = bytes.begin() + kBitstreamHeaderSize;
  s.payload.assign(first, first + s.header.payload_len);
  return s;
}

}  // namespace nic
