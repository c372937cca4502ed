#pragma once

#include <string>

#include "nic/model.h"
#include "nic/trainer.h"

namespace nic {

struct RunConfig {
  TrainConfig train;
  ModelConfig model;
};

// Line-oriented `key = value` text. '#' starts a comment; blank lines are
// ignored. `desk_scale = true` applies the desk presets before the other
// keys, and `loss_mode` sets that mode's default weights before explicit
// weight keys, regardless of line order. Unknown keys, duplicates and bad
// values throw ConfigError carrying the line number.
//
// Keys: lr0 halve_every stop_halving_after epochs iters_per_epoch
//       batch_size crop crop_stride flip_prob seed desk_scale
//       loss_mode alpha gamma lambda_msssim lambda_cycle
//       finetune_steps finetune_lr finetune_patience
//       enc_channels dec_channels (three comma-separated ints)
//       code_channels leaky_slope stride_kernel
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string format_config(const RunConfig& config);

}  // namespace nic
