#include "nic/losses.h"

#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <utility>

#include <spdlog/spdlog.h>

#include "nic/errors.h"
#include "nic/ops.h"

namespace nic {

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kMse:
      return "mse";
    case LossMode::kMseMsssim:
      return "mse_msssim";
    case LossMode::kMseMsssimCycle:
      return "mse_msssim_cycle";
  }
  return "?";
}

LossMode parse_loss_mode(const std::string& s) {
  if (s == "mse" || s == "MSE_ONLY") return LossMode::kMse;
  if (s == "mse_msssim" || s == "MSE_MSSSIM") return LossMode::kMseMsssim;
  if (s == "mse_msssim_cycle" || s == "MSE_MSSSIM_CYCLE") return LossMode::kMseMsssimCycle;
  throw ConfigError("unknown loss mode '" + s +
                    "' (expected mse, mse_msssim or mse_msssim_cycle)");
}

LossConfig LossConfig::for_mode(LossMode mode) {
  LossConfig c;
  c.mode = mode;
  switch (mode) {
    case LossMode::kMse:
      c.gamma = 1e-4;
      break;
    case LossMode::kMseMsssim:
      c.gamma = 2.5e-4;
      c.lambda_msssim = 0.1;
      break;
    case LossMode::kMseMsssimCycle:
      c.gamma = 3e-4;
      c.lambda_msssim = 0.1;
      c.lambda_cycle = 0.01;
      break;
  }
  return c;
}

LossConfig::Resolved LossConfig::resolved() const {
  auto need = [&](const std::optional<double>& v, const char* name) {
    if (!v) {
      throw ConfigError(std::string("loss mode ") + to_string(mode) + " requires " + name);
    }
    if (!(*v >= 0.0)) throw ConfigError(std::string(name) + " must be >= 0");
    return *v;
  };
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  Resolved r{mode, alpha, need(gamma, "gamma"), 0.0, 0.0};
  if (mode != LossMode::kMse) r.lambda_msssim = need(lambda_msssim, "lambda_msssim");
  if (mode == LossMode::kMseMsssimCycle) r.lambda_cycle = need(lambda_cycle, "lambda_cycle");
  return r;
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double center = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

SsimParams SsimParams::standard() {
  SsimParams p;
  p.window = gaussian_window(11, 1.5);
  return p;
}

int usable_scales(int height, int width, const SsimParams& params) {
  const int win = params.window_size();
  int m = 0;
  int h = height, w = width;
  while (m < params.scales && h >= win && w >= win) {
    ++m;
    h /= 2;
    w /= 2;
  }
  return m;
}

namespace {

// max(x, eps) as x + relu(eps - x): exactly x whenever x >= eps.
template <typename T>
Tensor<T> at_least_eps(Tape<T>& tape, const Tensor<T>& x) {
  const T eps = static_cast<T>(kCompressionEps);
  Tensor<T> shortfall = ops::add_scalar(tape, ops::scale(tape, x, T(-1)), eps);
  return ops::add(tape, x, ops::relu(tape, shortfall));
}

}  // namespace

template <typename T>
Tensor<T> compression_loss(Tape<T>& tape, const Tensor<T>& code, T alpha) {
  Tensor<T> l1 = ops::sum_per_sample(tape, ops::abs(tape, code));
  Tensor<T> sq = ops::sum_per_sample(tape, ops::square(tape, code));
  Tensor<T> l2 = ops::sqrt(tape, sq);
  Tensor<T> sparsity = ops::div(tape, l1, at_least_eps(tape, l2));
  Tensor<T> squeeze = ops::div(tape, sq, at_least_eps(tape, l1));
  return ops::mean(tape, ops::add(tape, sparsity, ops::scale(tape, squeeze, alpha)));
}

template <typename T>
Tensor<T> mse_loss(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mse_loss: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  return ops::mean(tape, ops::square(tape, ops::sub(tape, a, b)));
}

template <typename T>
SsimMaps<T> ssim_map(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                     const SsimParams& params) {
  if (x.shape() != y.shape()) {
    throw ShapeError("ssim_map: shape mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(y.shape()));
  }
  const std::vector<T> win(params.window.begin(), params.window.end());
  const T c1 = static_cast<T>(params.c1);
  const T c2 = static_cast<T>(params.c2);
  using namespace ops;
  Tensor<T> mu_x = separable_filter(tape, x, win);
  Tensor<T> mu_y = separable_filter(tape, y, win);
  Tensor<T> mu_xx = square(tape, mu_x);
  Tensor<T> mu_yy = square(tape, mu_y);
  Tensor<T> mu_xy = mul(tape, mu_x, mu_y);
  Tensor<T> var_x = sub(tape, separable_filter(tape, square(tape, x), win), mu_xx);
  Tensor<T> var_y = sub(tape, separable_filter(tape, square(tape, y), win), mu_yy);
  Tensor<T> cov = sub(tape, separable_filter(tape, mul(tape, x, y), win), mu_xy);

  Tensor<T> lum = div(tape, add_scalar(tape, scale(tape, mu_xy, T(2)), c1),
                      add_scalar(tape, add(tape, mu_xx, mu_yy), c1));
  Tensor<T> cs = div(tape, add_scalar(tape, scale(tape, cov, T(2)), c2),
                     add_scalar(tape, add(tape, var_x, var_y), c2));
  return {mul(tape, lum, cs), cs};
}

namespace {

void log_scale_reduction(int h, int w, int used, int wanted) {
  static std::mutex mu;
  static std::set<std::pair<int, int>> seen;
  std::lock_guard<std::mutex> lock(mu);
  if (seen.insert({h, w}).second) {
    spdlog::info("ms-ssim: {}x{} input supports {} of {} scales; weights renormalized",
                 w, h, used, wanted);
  }
}

}  // namespace

template <typename T>
Tensor<T> ms_ssim(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                  const SsimParams& params) {
  if (x.rank() != 4 || x.shape() != y.shape()) {
    throw ShapeError("ms_ssim: expected equal N x C x H x W shapes, got " +
                     shape_str(x.shape()) + " and " + shape_str(y.shape()));
  }
  const int m = usable_scales(x.dim(2), x.dim(3), params);
  if (m == 0) {
    throw ShapeError("ms_ssim: image " + shape_str(x.shape()) + " smaller than the " +
                     std::to_string(params.window_size()) + "-tap window");
  }
  if (m < params.scales) log_scale_reduction(x.dim(2), x.dim(3), m, params.scales);
  double wsum = 0;
  for (int j = 0; j < m; ++j) wsum += params.scale_weights[j];

  Tensor<T> xs = x, ys = y;
  Tensor<T> result;
  for (int j = 0; j < m; ++j) {
    SsimMaps<T> maps = ssim_map(tape, xs, ys, params);
    const bool last = j == m - 1;
    Tensor<T> level = ops::spatial_mean(tape, last ? maps.ssim : maps.cs);
    const T weight = static_cast<T>(params.scale_weights[j] / wsum);
    Tensor<T> term = ops::pow_scalar(tape, level, weight);
    result = result.defined() ? ops::mul(tape, result, term) : term;
    if (!last) {
      xs = ops::avg_pool2(tape, xs);
      ys = ops::avg_pool2(tape, ys);
    }
  }
  return result;
}

template <typename T>
Tensor<T> ms_ssim_loss(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                       const SsimParams& params) {
  Tensor<T> m = ops::mean(tape, ms_ssim(tape, x, y, params));
  return ops::add_scalar(tape, ops::scale(tape, m, T(-0.5)), T(0.5));
}

template <typename T>
Tensor<T> cycle_loss(Tape<T>& tape, const Tensor<T>& original,
                     const Tensor<T>& recon, const AutoencoderParams<T>& params) {
  Tensor<T> f_orig = encode_frozen(tape, original, params);
  Tensor<T> f_recon = encode_frozen(tape, recon, params);
  return mse_loss(tape, f_orig, f_recon);
}

template <typename T>
LossTerms<T> combined_loss(Tape<T>& tape, const Tensor<T>& original,
                           const Tensor<T>& recon, const Tensor<T>& code_pre,
                           const LossConfig& config,
                           const AutoencoderParams<T>& params,
                           const SsimParams& ssim) {
  const LossConfig::Resolved w = config.resolved();
  LossTerms<T> out;
  Tensor<T> mse = mse_loss(tape, original, recon);
  Tensor<T> comp = compression_loss(tape, code_pre, static_cast<T>(w.alpha));
  out.mse = static_cast<double>(mse.item());
  out.comp = static_cast<double>(comp.item());
  out.task = out.mse;
  Tensor<T> total = mse;
  if (w.mode != LossMode::kMse) {
    Tensor<T> ms = ms_ssim_loss(tape, original, recon, ssim);
    out.ms_ssim = static_cast<double>(ms.item());
    out.task += w.lambda_msssim * out.ms_ssim;
    total = ops::add(tape, total, ops::scale(tape, ms, static_cast<T>(w.lambda_msssim)));
  }
  if (w.mode == LossMode::kMseMsssimCycle) {
    Tensor<T> cyc = cycle_loss(tape, original, recon, params);
    out.cycle = static_cast<double>(cyc.item());
    out.task += w.lambda_cycle * out.cycle;
    total = ops::add(tape, total, ops::scale(tape, cyc, static_cast<T>(w.lambda_cycle)));
  }
  out.total = ops::add(tape, total, ops::scale(tape, comp, static_cast<T>(w.gamma)));
  return out;
}

#define NIC_INSTANTIATE(T)                                                          \
  template Tensor<T> compression_loss<T>(Tape<T>&, const Tensor<T>&, T);            \
  template Tensor<T> mse_loss<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template SsimMaps<T> ssim_map<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                   const SsimParams&);                              \
  template Tensor<T> ms_ssim<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                const SsimParams&);                                 \
  template Tensor<T> ms_ssim_loss<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                     const SsimParams&);                            \
  template Tensor<T> cycle_loss<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                   const AutoencoderParams<T>&);                    \
  template LossTerms<T> combined_loss<T>(Tape<T>&, const Tensor<T>&,                \
                                         const Tensor<T>&, const Tensor<T>&,        \
                                         const LossConfig&,                         \
                                         const AutoencoderParams<T>&,               \
                                         const SsimParams&);

NIC_INSTANTIATE(float)
NIC_INSTANTIATE(double)
#undef NIC_INSTANTIATE

}  // namespace nic
