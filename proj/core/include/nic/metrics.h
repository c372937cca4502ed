#pragma once

#include <string>
#include <vector>

#include "nic/codec.h"
#include "nic/image.h"
#include "nic/model.h"

namespace nic {

inline constexpr double kPsnrCap = 100.0;

// Mean squared error over all 8-bit samples.
double mse_8bit(const Image& a, const Image& b);
// 10 log10(255^2 / mse); kPsnrCap when mse == 0.
double psnr_from_mse(double mse);
double psnr_8bit(const Image& a, const Image& b);
// MS-SSIM of the 8-bit images scaled to [0, 1], 64-bit arithmetic, up to 5
// scales. NaN when the image is smaller than one window.
double ms_ssim_8bit(const Image& a, const Image& b);

struct ImageReport {
  std::string name;
  int width = 0;
  int height = 0;
  std::size_t bytes = 0;
  double bpp = 0;
  double mse = 0;
  double psnr = 0;
  double ms_ssim = 0;
};

struct EvalReport {
  std::vector<ImageReport> images;  // sorted by name
  std::size_t image_count = 0;
  double psnr_pooled = 0;     // from MSE pooled over all samples
  double psnr_mean = 0;       // mean of per-image PSNR
  double ms_ssim_mean = 0;    // over images where it is defined
  double bpp = 0;             // total bits / total pixels
};

struct EvalOptions {
  CompressOptions compress;
  int threads = 1;
};

// Encode + decode every image, collecting rate and distortion metrics. Work is
// spread over `threads` workers; the report order does not depend on it.
EvalReport evaluate(const std::vector<std::string>& files,
                    const AutoencoderParams<float>& params, const EvalOptions& options);
EvalReport evaluate_images(const std::vector<std::pair<std::string, Image>>& images,
                           const AutoencoderParams<float>& params,
                           const EvalOptions& options);

std::string report_csv(const EvalReport& report);
// Aggregate line in the layout "PSNR  MS-SSIM  bpp".
std::string report_summary(const EvalReport& report);

// Worker count from NIC_THREADS (unset or invalid: hardware concurrency).
int thread_budget();

}  // namespace nic
