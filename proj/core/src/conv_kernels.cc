#include "conv_kernels.h"

#include <algorithm>
#include <cstddef>

namespace nic::kernels {
namespace {

// Range of output columns [lo, hi) whose tap at kernel column kx falls
// inside the input row.
inline void valid_range(int k, int stride, int pad, int in_extent,
                        int out_extent, int* lo, int* hi) {
  // ix = o * stride + k - pad must lie in [0, in_extent).
  int first = pad - k;
  int l = first <= 0 ? 0 : (first + stride - 1) / stride;
  int last = in_extent - 1 + pad - k;
  int h = last < 0 ? 0 : last / stride + 1;
  *lo = std::min(l, out_extent);
  *hi = std::clamp(h, *lo, out_extent);
}

}  // namespace

template <typename T>
void conv_forward(const ConvGeometry& g, std::span<const T> in,
                  std::span<const T> weight, std::span<T> out) {
  const std::size_t in_plane = std::size_t(g.in_h) * g.in_w;
  const std::size_t out_plane = std::size_t(g.out_h) * g.out_w;
  const int ksize = g.kernel_h * g.kernel_w;
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      T* o = out.data() + (std::size_t(n) * g.out_channels + co) * out_plane;
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const T* x = in.data() + (std::size_t(n) * g.in_channels + ci) * in_plane;
        const T* w = weight.data() + (std::size_t(co) * g.in_channels + ci) * ksize;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          int oy0, oy1;
          valid_range(ky, g.stride, g.pad, g.in_h, g.out_h, &oy0, &oy1);
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const T wv = w[ky * g.kernel_w + kx];
            if (wv == T(0)) continue;
            int ox0, ox1;
            valid_range(kx, g.stride, g.pad, g.in_w, g.out_w, &ox0, &ox1);
            for (int oy = oy0; oy < oy1; ++oy) {
              const T* xr = x + std::size_t(oy * g.stride + ky - g.pad) * g.in_w;
              T* orow = o + std::size_t(oy) * g.out_w;
              if (g.stride == 1) {
                const T* xs = xr + kx - g.pad;
                for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * xs[ox];
              } else {
                for (int ox = ox0; ox < ox1; ++ox) {
                  orow[ox] += wv * xr[ox * g.stride + kx - g.pad];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward_data(const ConvGeometry& g, std::span<const T> grad_out,
                        std::span<const T> weight, std::span<T> grad_in) {
  const std::size_t in_plane = std::size_t(g.in_h) * g.in_w;
  const std::size_t out_plane = std::size_t(g.out_h) * g.out_w;
  const int ksize = g.kernel_h * g.kernel_w;
  for (int n = 0; n < g.batch; ++n) {
    for (int ci = 0; ci < g.in_channels; ++ci) {
      T* gi = grad_in.data() + (std::size_t(n) * g.in_channels + ci) * in_plane;
      for (int co = 0; co < g.out_channels; ++co) {
        const T* go = grad_out.data() + (std::size_t(n) * g.out_channels + co) * out_plane;
        const T* w = weight.data() + (std::size_t(co) * g.in_channels + ci) * ksize;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          int oy0, oy1;
          valid_range(ky, g.stride, g.pad, g.in_h, g.out_h, &oy0, &oy1);
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const T wv = w[ky * g.kernel_w + kx];
            if (wv == T(0)) continue;
            int ox0, ox1;
            valid_range(kx, g.stride, g.pad, g.in_w, g.out_w, &ox0, &ox1);
            for (int oy = oy0; oy < oy1; ++oy) {
              T* gr = gi + std::size_t(oy * g.stride + ky - g.pad) * g.in_w;
              const T* gor = go + std::size_t(oy) * g.out_w;
              if (g.stride == 1) {
                T* gs = gr + kx - g.pad;
                for (int ox = ox0; ox < ox1; ++ox) gs[ox] += wv * gor[ox];
              } else {
                for (int ox = ox0; ox < ox1; ++ox) {
                  gr[ox * g.stride + kx - g.pad] += wv * gor[ox];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward_weight(const ConvGeometry& g, std::span<const T> in,
                          std::span<const T> grad_out, std::span<T> grad_weight) {
  const std::size_t in_plane = std::size_t(g.in_h) * g.in_w;
  const std::size_t out_plane = std::size_t(g.out_h) * g.out_w;
  const int ksize = g.kernel_h * g.kernel_w;
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      const T* go = grad_out.data() + (std::size_t(n) * g.out_channels + co) * out_plane;
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const T* x = in.data() + (std::size_t(n) * g.in_channels + ci) * in_plane;
        T* gw = grad_weight.data() + (std::size_t(co) * g.in_channels + ci) * ksize;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          int oy0, oy1;
          valid_range(ky, g.stride, g.pad, g.in_h, g.out_h, &oy0, &oy1);
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            int ox0, ox1;
            valid_range(kx, g.stride, g.pad, g.in_w, g.out_w, &ox0, &ox1);
            T acc = 0;
            for (int oy = oy0; oy < oy1; ++oy) {
              const T* xr = x + std::size_t(oy * g.stride + ky - g.pad) * g.in_w;
              const T* gor = go + std::size_t(oy) * g.out_w;
              if (g.stride == 1) {
                const T* xs = xr + kx - g.pad;
                for (int ox = ox0; ox < ox1; ++ox) acc += gor[ox] * xs[ox];
              } else {
                for (int ox = ox0; ox < ox1; ++ox) {
                  acc += gor[ox] * xr[ox * g.stride + kx - g.pad];
                }
              }
            }
            gw[ky * g.kernel_w + kx] += acc;
          }
        }
      }
    }
  }
}

template <typename T>
void add_bias(int batch, int channels, int plane, std::span<const T> bias,
              std::span<T> out) {
  T* o = out.data();
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const T b = bias[c];
      for (int i = 0; i < plane; ++i) *o++ += b;
    }
  }
}

template <typename T>
void bias_grad(int batch, int channels, int plane, std::span<const T> grad_out,
               std::span<T> grad_bias) {
  const T* g = grad_out.data();
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      T acc = 0;
      for (int i = 0; i < plane; ++i) acc += *g++;
      grad_bias[c] += acc;
    }
  }
}

#define NIC_INSTANTIATE(T)                                                     \
  template void conv_forward<T>(const ConvGeometry&, std::span<const T>,       \
                                std::span<const T>, std::span<T>);             \
  template void conv_backward_data<T>(const ConvGeometry&, std::span<const T>, \
                                      std::span<const T>, std::span<T>);       \
  template void conv_backward_weight<T>(const ConvGeometry&,                   \
                                        std::span<const T>,                    \
                                        std::span<const T>, std::span<T>);     \
  template void add_bias<T>(int, int, int, std::span<const T>, std::span<T>);  \
  template void bias_grad<T>(int, int, int, std::span<const T>, std::span<T>);

NIC_INSTANTIATE(float)
NIC_INSTANTIATE(double)
#undef NIC_INSTANTIATE

}  // namespace nic::kernels
