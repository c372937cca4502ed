#include "nic/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "byte_io.h"
#include "nic/errors.h"

namespace nic {

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path);
}

}  // namespace detail

std::vector<std::uint8_t> serialize_checkpoint(const AutoencoderParams<float>& params) {
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic, 4);
  w.u8(kCheckpointVersion);
  const ModelConfig& c = params.config();
  for (int v : c.enc_channels) w.le32(static_cast<std::uint32_t>(v));
  w.le32(static_cast<std::uint32_t>(c.code_channels));
  for (int v : c.dec_channels) w.le32(static_cast<std::uint32_t>(v));
  w.le32(static_cast<std::uint32_t>(c.stride_kernel));
  w.f64(c.leaky_slope);
  w.le64(params.init_seed());
  w.le32(static_cast<std::uint32_t>(params.all().size()));
  for (const auto& p : params.all()) {
    w.le32(static_cast<std::uint32_t>(p.tensor.rank()));
    for (int d : p.tensor.shape()) w.le32(static_cast<std::uint32_t>(d));
    for (float v : p.tensor.data()) w.f32(v);
  }
  return std::move(w.buffer());
}

AutoencoderParams<float> parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size(), "checkpoint");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic, expected NAEW");
  }
  const int version = r.u8();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported version", version, kCheckpointVersion);
  }
  ModelConfig c;
  for (int& v : c.enc_channels) v = static_cast<int>(r.le32());
  c.code_channels = static_cast<int>(r.le32());
  for (int& v : c.dec_channels) v = static_cast<int>(r.le32());
  c.stride_kernel = static_cast<int>(r.le32());
  c.leaky_slope = r.f64();
  const std::uint64_t seed = r.le64();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid model configuration: ") + e.what());
  }
  const auto specs = param_specs(c);
  const std::uint32_t count = r.le32();
  if (count != specs.size()) {
    throw FormatError("checkpoint: " + std::to_string(count) +
                      " tensors stored, configuration needs " +
                      std::to_string(specs.size()));
  }
  std::vector<NamedParam<float>> params;
  params.reserve(count);
  for (const auto& s : specs) {
    const std::uint32_t rank = r.le32();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.le32());
    if (shape != s.shape) {
      throw FormatError("checkpoint: tensor " + s.name + " has shape " +
                        shape_str(shape) + ", expected " + shape_str(s.shape));
    }
    std::vector<float> values(shape_numel(shape));
    for (float& v : values) v = r.f32();
    Tensor<float> t(shape, std::move(values));
    t.set_requires_grad(true);
    params.push_back({s.name, s.part, std::move(t)});
  }
  if (r.remaining() != 0) {
    throw FormatError("checkpoint: " + std::to_string(r.remaining()) +
                      " trailing bytes at offset " + std::to_string(r.offset()));
  }
  return AutoencoderParams<float>(c, std::move(params), seed);
}

void save_checkpoint(const std::string& path, const AutoencoderParams<float>& params) {
  detail::write_file(path, serialize_checkpoint(params));
}

AutoencoderParams<float> load_checkpoint(const std::string& path) {
  return parse_checkpoint(detail::read_file(path));
}

}  // namespace nic
