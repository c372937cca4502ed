#pragma once

#include <span>

namespace nic::kernels {

// Geometry of a 2-D cross-correlation from an "input" plane set
// (N x Cin x H x W) to an "output" plane set (N x Cout x Ho x Wo) with a
// Cout x Cin x kh x kw weight. Transposed convolution reuses the same
// geometry with the roles of input and output exchanged.
struct ConvGeometry {
  int batch = 0;
  int in_channels = 0;
  int in_h = 0;
  int in_w = 0;
  int out_channels = 0;
  int out_h = 0;
  int out_w = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int pad = 0;
};

// out += conv(in, weight). `out` is not cleared.
template <typename T>
void conv_forward(const ConvGeometry& g, std::span<const T> in,
                  std::span<const T> weight, std::span<T> out);

// grad_in += conv^T(grad_out, weight).
template <typename T>
void conv_backward_data(const ConvGeometry& g, std::span<const T> grad_out,
                        std::span<const T> weight, std::span<T> grad_in);

// grad_weight += d<grad_out, conv(in, w)>/dw.
template <typename T>
void conv_backward_weight(const ConvGeometry& g, std::span<const T> in,
                          std::span<const T> grad_out, std::span<T> grad_weight);

// out[n, c, :, :] += bias[c]
template <typename T>
void add_bias(int batch, int channels, int plane, std::span<const T> bias,
              std::span<T> out);

// grad_bias[c] += sum over n and plane of grad_out[n, c, :]
template <typename T>
void bias_grad(int batch, int channels, int plane, std::span<const T> grad_out,
               std::span<T> grad_bias);

}  // namespace nic::kernels
