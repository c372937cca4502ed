#pragma once

#include <vector>

#include "nic/tape.h"
#include "nic/tensor.h"

// Differentiable tensor operations. Every op takes the tape it records on
// first; nothing is recorded when no input requires a gradient. Binary
// elementwise ops require equal shapes, except that either operand may be a
// rank-0 scalar.
namespace nic::ops {

// When enabled, every op output is scanned for NaN/Inf and a NumericError
// is thrown naming the op. Off by default.
void set_finite_checks(bool on);
bool finite_checks();

// --- convolution ----------------------------------------------------------

// Cross-correlation with zero padding. input N x Cin x H x W, weight
// Cout x Cin x kh x kw, bias Cout (may be undefined for no bias).
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding);

// Adjoint of conv2d with respect to its input. input N x Cin x H x W,
// weight Cin x Cout x kh x kw; output extent (H - 1) * stride - 2 * padding + kh.
template <typename T>
Tensor<T> conv2d_transpose(Tape<T>& tape, const Tensor<T>& input,
                           const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride, int padding);

// --- activations ----------------------------------------------------------

template <typename T>
Tensor<T> leaky_relu(Tape<T>& tape, const Tensor<T>& x, T slope);
template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x);

// Forward: round half away from zero. Backward: identity (straight-through).
template <typename T>
Tensor<T> ste_round(Tape<T>& tape, const Tensor<T>& x);

// --- elementwise ----------------------------------------------------------

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> div(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T s);
template <typename T>
Tensor<T> add_scalar(Tape<T>& tape, const Tensor<T>& x, T s);
template <typename T>
Tensor<T> abs(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> square(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> sqrt(Tape<T>& tape, const Tensor<T>& x);
// x^p for x > 0; defined as 0 with zero gradient for x <= 0.
template <typename T>
Tensor<T> pow_scalar(Tape<T>& tape, const Tensor<T>& x, T p);

// --- reductions -----------------------------------------------------------

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> l1_norm(Tape<T>& tape, const Tensor<T>& x);
template <typename T>
Tensor<T> l2_norm(Tape<T>& tape, const Tensor<T>& x);
// Sums all but the leading dimension: N x ... -> N.
template <typename T>
Tensor<T> sum_per_sample(Tape<T>& tape, const Tensor<T>& x);
// Averages over the two trailing dimensions: N x C x H x W -> N x C.
template <typename T>
Tensor<T> spatial_mean(Tape<T>& tape, const Tensor<T>& x);

// --- filtering ------------------------------------------------------------

// Separable depthwise filtering with a 1-D kernel applied along both axes,
// no padding: N x C x H x W -> N x C x (H-k+1) x (W-k+1).
template <typename T>
Tensor<T> separable_filter(Tape<T>& tape, const Tensor<T>& x,
                           const std::vector<T>& kernel);

// 2 x 2 mean pooling with stride 2; an odd trailing row/column is dropped.
template <typename T>
Tensor<T> avg_pool2(Tape<T>& tape, const Tensor<T>& x);

}  // namespace nic::ops
