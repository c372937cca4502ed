#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nic/model.h"
#include "nic/tape.h"
#include "nic/tensor.h"

namespace nic {

enum class LossMode { kMse, kMseMsssim, kMseMsssimCycle };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& s);

// Weights of the training objective. Unset weights take the per-mode
// defaults from for_mode(); resolved() throws if a weight the mode uses is
// still unset.
struct LossConfig {
  LossMode mode = LossMode::kMse;
  double alpha = 0.01;                  // squeeze term weight inside L_comp
  std::optional<double> gamma;          // L_comp weight
  std::optional<double> lambda_msssim;  // lambda (MSE+MS-SSIM) or lambda_1
  std::optional<double> lambda_cycle;   // lambda_2

  // MSE: gamma 1e-4. MSE+MS-SSIM: lambda 0.1, gamma 2.5e-4.
  // MSE+MS-SSIM+cycle: lambda_1 0.1, lambda_2 0.01, gamma 3e-4.
  static LossConfig for_mode(LossMode mode);

  struct Resolved {
    LossMode mode;
    double alpha;
    double gamma;
    double lambda_msssim;
    double lambda_cycle;
  };
  Resolved resolved() const;
};

struct SsimParams {
  std::vector<double> window;  // 1-D Gaussian taps; the 2-D window is its outer product
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
  int scales = 5;
  // The usual published exponents, which sum to 1.0001, divided by their sum.
  std::array<double, 5> scale_weights{0.0448 / 1.0001, 0.2856 / 1.0001, 0.3001 / 1.0001,
                                      0.2363 / 1.0001, 0.1333 / 1.0001};

  // 11 x 11 Gaussian, sigma 1.5, unit dynamic range.
  static SsimParams standard();
  int window_size() const { return static_cast<int>(window.size()); }
};

std::vector<double> gaussian_window(int size, double sigma);

// Number of scales usable for an image of the given size: the largest
// M <= params.scales whose coarsest level (after M - 1 halvings) still
// holds one window. 0 when even the finest level is too small.
int usable_scales(int height, int width, const SsimParams& params);

// L_comp per sample on the flattened code, averaged over the batch:
//   l1 / max(l2, eps) + alpha * l2^2 / max(l1, eps).
// The guard leaves nonzero codes untouched, so the first term is exactly
// scale invariant.
template <typename T>
Tensor<T> compression_loss(Tape<T>& tape, const Tensor<T>& code, T alpha);

inline constexpr double kCompressionEps = 1e-8;

template <typename T>
Tensor<T> mse_loss(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct SsimMaps {
  Tensor<T> ssim;  // luminance * contrast-structure, per position
  Tensor<T> cs;    // contrast-structure only
};

// Gaussian-weighted SSIM over every valid window position.
template <typename T>
SsimMaps<T> ssim_map(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                     const SsimParams& params);

// Per (sample, channel) MS-SSIM: prod_{j<M} relu(mean cs_j)^w_j *
// relu(mean ssim_M)^w_M, with the first M weights renormalized to sum 1.
// Returns N x C.
template <typename T>
Tensor<T> ms_ssim(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                  const SsimParams& params);

// (1 - mean MS-SSIM) / 2.
template <typename T>
Tensor<T> ms_ssim_loss(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                       const SsimParams& params);

// MSE between frozen-encoder features of the original and reconstruction.
template <typename T>
Tensor<T> cycle_loss(Tape<T>& tape, const Tensor<T>& original,
                     const Tensor<T>& recon, const AutoencoderParams<T>& params);

template <typename T>
struct LossTerms {
  Tensor<T> total;
  double mse = 0;
  double ms_ssim = 0;  // loss value (1 - msssim) / 2; 0 when unused
  double cycle = 0;
  double comp = 0;
  // mse + weighted perceptual terms, without the rate term.
  double task = 0;
};

template <typename T>
LossTerms<T> combined_loss(Tape<T>& tape, const Tensor<T>& original,
                           const Tensor<T>& recon, const Tensor<T>& code_pre,
                           const LossConfig& config,
                           const AutoencoderParams<T>& params,
                           const SsimParams& ssim = SsimParams::standard());

}  // namespace nic
