#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nic/adam.h"
#include "nic/image.h"
#include "nic/losses.h"
#include "nic/model.h"

namespace nic {

struct FinetuneConfig {
  int steps = 100;
  double lr = 1e-5;
  int patience = 10;  // stop after this many evaluations without improvement
};

struct TrainConfig {
  double lr0 = 2e-4;
  int halve_every = 10;         // epochs
  int stop_halving_after = 50;  // epoch after which the rate stays constant
  int epochs = 200;
  int iters_per_epoch = 900;
  int batch_size = 64;
  int crop = 128;
  int crop_stride = 64;  // half-overlapping
  double flip_prob = 0.5;
  std::uint64_t seed = 1;
  bool desk_scale = false;
  LossConfig loss = LossConfig::for_mode(LossMode::kMse);
  FinetuneConfig finetune;

  // Desk preset: 64 x 64 crops, batch 8, 20 epochs of 100 iterations.
  static TrainConfig desk();
  void validate() const;
};

// lr0 / 2^min(floor(epoch / halve_every), stop_halving_after / halve_every)
double lr_schedule(int epoch, const TrainConfig& config);

// Crops of a 3 x H x W image. Corners sit on multiples of `stride`, plus a
// final crop flush with the right/bottom edge when the grid misses it. An
// axis shorter than `crop` is first reflect-padded symmetrically to `crop`.
std::vector<Tensor<float>> make_crops(const Tensor<float>& image, int crop, int stride);

// Left-right flip of the samples selected by `mask` (N x C x H x W).
Tensor<float> flip_horizontal(const Tensor<float>& batch, const std::vector<bool>& mask);

// Flips each sample independently with probability `flip_prob`. The drawn
// mask is written to `mask_out` when given.
Tensor<float> augment(const Tensor<float>& batch, std::mt19937_64& rng, double flip_prob,
                      std::vector<bool>* mask_out = nullptr);

struct StepInfo {
  std::int64_t step = 0;  // global, 0-based
  int epoch = 0;
  double lr = 0;
  double loss = 0;
  double mse = 0;
  double ms_ssim = 0;
  double cycle = 0;
  double comp = 0;
  double activation_rate = 0;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0;
  double loss = 0;
  double mse = 0;
  double ms_ssim = 0;
  double cycle = 0;
  double comp = 0;
  double activation_rate = 0;
};

struct TrainOptions {
  std::string checkpoint_path;  // written after every epoch when set
  std::string log_path;         // CSV, appended once per epoch when set
  bool resume = false;          // continue from checkpoint_path + ".state"
  std::function<void(const StepInfo&)> on_step;
};

struct TrainResult {
  AutoencoderParams<float> params;
  std::vector<EpochLog> log;
};

// Epochs x iters_per_epoch Adam steps on batches sampled uniformly from the
// precomputed crop inventory of `images`. Throws ConfigError on an empty
// dataset or invalid configuration.
TrainResult train(const std::vector<Image>& images, const TrainConfig& config,
                  const ModelConfig& model, const TrainOptions& options = {});
TrainResult train(const std::string& dataset_dir, const TrainConfig& config,
                  const ModelConfig& model, const TrainOptions& options = {});

std::string csv_header();
std::string csv_row(const EpochLog& e);

struct FinetuneResult {
  AutoencoderParams<float> params;  // best encoder, decoder tensors unchanged
  std::vector<double> trace;        // combined loss of every evaluated encoder
  double initial_loss = 0;
  double initial_task = 0;
  double best_loss = 0;
  double best_task = 0;
  int steps_run = 0;
};

// Per-image encoder fine-tuning with the decoder frozen. Minimizes the
// training objective of `loss`; the returned encoder is the best one seen
// whose task loss does not exceed the initial task loss, so neither the
// objective nor the task loss can get worse.
FinetuneResult post_train_encoder_opt(const Tensor<float>& image,
                                      const AutoencoderParams<float>& params,
                                      const LossConfig& loss, const FinetuneConfig& config);

// Training-state sidecar used for resuming: epoch count, Adam moments and
// RNG state.
struct TrainState {
  int epochs_done = 0;
  AdamState<float> adam;
  std::string rng_state;
};
void save_train_state(const std::string& path, const TrainState& state);
TrainState load_train_state(const std::string& path);

}  // namespace nic
