#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nic/model.h"

namespace nic {

// Checkpoint container:
//   "NAEW" | version u8 | enc_channels 3 x i32 | code_channels i32 |
//   dec_channels 3 x i32 | stride_kernel i32 | leaky_slope f64 |
//   init_seed u64 | tensor count u32 |
//   per tensor: rank u32, extents rank x u32, values as f32
// All multi-byte fields little-endian. Tensors follow param_specs() order.
inline constexpr char kCheckpointMagic[4] = {'N', 'A', 'E', 'W'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const AutoencoderParams<float>& params);
AutoencoderParams<float> parse_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const AutoencoderParams<float>& params);
AutoencoderParams<float> load_checkpoint(const std::string& path);

}  // namespace nic
