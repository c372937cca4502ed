#include "nic/metrics.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "nic/errors.h"
#include "nic/losses.h"

namespace nic {

double mse_8bit(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError("mse_8bit: image sizes differ");
  }
  double acc = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = double(a.rgb[i]) - double(b.rgb[i]);
    acc += d * d;
  }
  return a.rgb.empty() ? 0.0 : acc / static_cast<double>(a.rgb.size());
}

double psnr_from_mse(double mse) {
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double psnr_8bit(const Image& a, const Image& b) { return psnr_from_mse(mse_8bit(a, b)); }

double ms_ssim_8bit(const Image& a, const Image& b) {
  const SsimParams params = SsimParams::standard();
  if (usable_scales(a.height, a.width, params) == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  Tape<double> tape;
  tape.set_enabled(false);
  Tensor<double> v = ms_ssim(tape, image_to_tensor<double>(a), image_to_tensor<double>(b), params);
  double acc = 0;
  for (double x : v.data()) acc += x;
  return acc / static_cast<double>(v.numel());
}

EvalReport evaluate_images(const std::vector<std::pair<std::string, Image>>& images,
                           const AutoencoderParams<float>& params,
                           const EvalOptions& options) {
  EvalReport report;
  report.images.resize(images.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= images.size()) return;
      try {
        const auto& [name, img] = images[i];
        CompressResult c = compress_image(img, params, options.compress);
        Image out = decompress_image(c.stream, params);
        ImageReport r;
        r.name = name;
        r.width = img.width;
        r.height = img.height;
        r.bytes = c.stream.total_bytes();
        r.bpp = bits_per_pixel(r.bytes, img.width, img.height);
        r.mse = mse_8bit(img, out);
        r.psnr = psnr_from_mse(r.mse);
        r.ms_ssim = ms_ssim_8bit(img, out);
        report.images[i] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(images.size());
      }
    }
  };
  const int n = std::max(1, std::min<int>(options.threads, static_cast<int>(images.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::sort(report.images.begin(), report.images.end(),
            [](const ImageReport& a, const ImageReport& b) { return a.name < b.name; });
  report.image_count = report.images.size();
  double sq = 0, samples = 0, bits = 0, pixels = 0, psnr_sum = 0, ms_sum = 0;
  int ms_count = 0;
  for (const auto& r : report.images) {
    const double s = 3.0 * r.width * r.height;
    sq += r.mse * s;
    samples += s;
    bits += 8.0 * r.bytes;
    pixels += double(r.width) * r.height;
    psnr_sum += r.psnr;
    if (!std::isnan(r.ms_ssim)) {
      ms_sum += r.ms_ssim;
      ++ms_count;
    }
  }
  if (report.image_count) {
    report.psnr_pooled = psnr_from_mse(sq / samples);
    report.psnr_mean = psnr_sum / report.image_count;
    report.ms_ssim_mean = ms_count ? ms_sum / ms_count : std::numeric_limits<double>::quiet_NaN();
    report.bpp = bits / pixels;
  }
  return report;
}

EvalReport evaluate(const std::vector<std::string>& files,
                    const AutoencoderParams<float>& params, const EvalOptions& options) {
  std::vector<std::pair<std::string, Image>> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    images.emplace_back(std::filesystem::path(f).filename().string(), read_image(f));
  }
  return evaluate_images(images, params, options);
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os.precision(8);
  os << "name,width,height,bytes,bpp,mse,psnr,ms_ssim\n";
  for (const auto& r : report.images) {
    os << r.name << ',' << r.width << ',' << r.height << ',' << r.bytes << ',' << r.bpp << ','
       << r.mse << ',' << r.psnr << ',' << r.ms_ssim << '\n';
  }
  os << "ALL_pooled,,,," << report.bpp << ",," << report.psnr_pooled << ','
     << report.ms_ssim_mean << '\n';
  os << "ALL_mean,,,," << report.bpp << ",," << report.psnr_mean << ',' << report.ms_ssim_mean
     << '\n';
  return os.str();
}

std::string report_summary(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "images %zu | PSNR %.2f dB (mean of per-image %.2f) | MS-SSIM %.3f | bpp %.3f",
                report.image_count, report.psnr_pooled, report.psnr_mean, report.ms_ssim_mean,
                report.bpp);
  return buf;
}

int thread_budget() {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("NIC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, hw));
  }
  return hw;
}

}  // namespace nic
