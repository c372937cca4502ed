#include "nic/ops.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "conv_kernels.h"
#include "nic/errors.h"

namespace nic::ops {
namespace {

std::atomic<bool> g_finite_checks{false};

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
  if (!g_finite_checks.load(std::memory_order_relaxed)) return;
  for (T v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

template <typename T>
bool wants_grad(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

bool is_scalar_shape(const Shape& s) { return s.empty(); }

// Result shape for a binary elementwise op with scalar broadcasting.
template <typename T>
Shape binary_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (is_scalar_shape(b.shape())) return a.shape();
  if (is_scalar_shape(a.shape())) return b.shape();
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                   " vs " + shape_str(b.shape()));
}

// Accumulates a broadcast gradient into `target`: elementwise when shapes
// match, summed when target is a scalar.
template <typename T, typename F>
void accumulate(Tensor<T> target, std::size_t n, F&& grad_at) {
  auto g = target.grad_buffer();
  if (target.numel() == n) {
    for (std::size_t i = 0; i < n; ++i) g[i] += grad_at(i);
  } else {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += grad_at(i);
    g[0] += acc;
  }
}

template <typename T>
inline T bval(const Tensor<T>& t, std::size_t i) {
  return t.numel() == 1 ? t[0] : t[i];
}

// Shared implementation of unary elementwise ops: forward f(x), backward
// df/dx evaluated from (x, y).
template <typename T, typename F, typename D>
Tensor<T> unary(Tape<T>& tape, const char* name, const Tensor<T>& x, F f, D dfdx) {
  Tensor<T> y(x.shape());
  auto yd = y.mutable_data();
  auto xd = x.data();
  for (std::size_t i = 0; i < xd.size(); ++i) yd[i] = f(xd[i]);
  check_finite(y, name);
  tape.record(name, {x}, y, [x, y, dfdx]() mutable {
    if (!wants_grad(x)) return;
    auto gy = y.grad();
    auto gx = x.grad_buffer();
    auto xd = x.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * dfdx(xd[i], yd[i]);
  });
  return y;
}

template <typename T>
void require_rank(const Tensor<T>& t, int rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " +
                     std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

}  // namespace

void set_finite_checks(bool on) { g_finite_checks.store(on); }
bool finite_checks() { return g_finite_checks.load(); }

// --- convolution ----------------------------------------------------------

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (input.dim(1) != weight.dim(1)) {
    throw ShapeError("conv2d: input channels do not match weight: input " +
                     shape_str(input.shape()) + ", weight " +
                     shape_str(weight.shape()));
  }
  if (stride <= 0 || padding < 0) {
    throw ShapeError("conv2d: stride must be positive and padding non-negative");
  }
  kernels::ConvGeometry g;
  g.batch = input.dim(0);
  g.in_channels = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.out_channels = weight.dim(0);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = stride;
  g.pad = padding;
  if (g.kernel_h > g.in_h + 2 * padding || g.kernel_w > g.in_w + 2 * padding) {
    throw ShapeError("conv2d: kernel " + shape_str(weight.shape()) +
                     " larger than padded input " + shape_str(input.shape()));
  }
  g.out_h = (g.in_h + 2 * padding - g.kernel_h) / stride + 1;
  g.out_w = (g.in_w + 2 * padding - g.kernel_w) / stride + 1;
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(g.out_channels)) {
    throw ShapeError("conv2d: bias " + shape_str(bias.shape()) +
                     " does not match output channels of weight " +
                     shape_str(weight.shape()));
  }

  Tensor<T> out(Shape{g.batch, g.out_channels, g.out_h, g.out_w});
  kernels::conv_forward<T>(g, input.data(), weight.data(), out.mutable_data());
  const int plane = g.out_h * g.out_w;
  if (bias.defined()) {
    kernels::add_bias<T>(g.batch, g.out_channels, plane, bias.data(),
                         out.mutable_data());
  }
  check_finite(out, "conv2d");

  tape.record("conv2d", {input, weight, bias}, out,
              [g, plane, input, weight, bias, out]() mutable {
                auto go = out.grad();
                if (wants_grad(input)) {
                  kernels::conv_backward_data<T>(g, go, weight.data(),
                                                 input.grad_buffer());
                }
                if (wants_grad(weight)) {
                  kernels::conv_backward_weight<T>(g, input.data(), go,
                                                   weight.grad_buffer());
                }
                if (wants_grad(bias)) {
                  kernels::bias_grad<T>(g.batch, g.out_channels, plane, go,
                                        bias.grad_buffer());
                }
              });
  return out;
}

template <typename T>
Tensor<T> conv2d_transpose(Tape<T>& tape, const Tensor<T>& input,
                           const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride, int padding) {
  require_rank(input, 4, "conv2d_transpose", "input");
  require_rank(weight, 4, "conv2d_transpose", "weight");
  if (input.dim(1) != weight.dim(0)) {
    throw ShapeError("conv2d_transpose: input channels do not match weight: input " +
                     shape_str(input.shape()) + ", weight " +
                     shape_str(weight.shape()));
  }
  if (stride <= 0 || padding < 0) {
    throw ShapeError(
        "conv2d_transpose: stride must be positive and padding non-negative");
  }
  const int out_h = (input.dim(2) - 1) * stride - 2 * padding + weight.dim(2);
  const int out_w = (input.dim(3) - 1) * stride - 2 * padding + weight.dim(3);
  if (out_h <= 0 || out_w <= 0) {
    throw ShapeError("conv2d_transpose: non-positive output extent " +
                     std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " for input " + shape_str(input.shape()));
  }
  // The equivalent forward convolution maps the (larger) output back onto
  // the input, with weight laid out as Cout_conv = Cin, Cin_conv = Cout.
  kernels::ConvGeometry g;
  g.batch = input.dim(0);
  g.in_channels = weight.dim(1);
  g.in_h = out_h;
  g.in_w = out_w;
  g.out_channels = weight.dim(0);
  g.out_h = input.dim(2);
  g.out_w = input.dim(3);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = stride;
  g.pad = padding;
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(g.in_channels)) {
    throw ShapeError("conv2d_transpose: bias " + shape_str(bias.shape()) +
                     " does not match output channels of weight " +
                     shape_str(weight.shape()));
  }

  Tensor<T> out(Shape{g.batch, g.in_channels, out_h, out_w});
  kernels::conv_backward_data<T>(g, input.data(), weight.data(), out.mutable_data());
  const int plane = out_h * out_w;
  if (bias.defined()) {
    kernels::add_bias<T>(g.batch, g.in_channels, plane, bias.data(),
                         out.mutable_data());
  }
  check_finite(out, "conv2d_transpose");

  tape.record("conv2d_transpose", {input, weight, bias}, out,
              [g, plane, input, weight, bias, out]() mutable {
                auto go = out.grad();
                if (wants_grad(input)) {
                  kernels::conv_forward<T>(g, go, weight.data(),
                                           input.grad_buffer());
                }
                if (wants_grad(weight)) {
                  kernels::conv_backward_weight<T>(g, go, input.data(),
                                                   weight.grad_buffer());
                }
                if (wants_grad(bias)) {
                  kernels::bias_grad<T>(g.batch, g.in_channels, plane, go,
                                        bias.grad_buffer());
                }
              });
  return out;
}

// --- activations ----------------------------------------------------------

template <typename T>
Tensor<T> leaky_relu(Tape<T>& tape, const Tensor<T>& x, T slope) {
  return unary(
      tape, "leaky_relu", x,
      [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, "relu", x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, "sigmoid", x,
      [](T v) {
        // exp of a non-positive argument only; clamped off 0 and 1.
        T y;
        if (v >= T(0)) {
          y = T(1) / (T(1) + std::exp(-v));
        } else {
          T e = std::exp(v);
          y = e / (T(1) + e);
        }
        return std::clamp(y, std::numeric_limits<T>::denorm_min(),
                          T(1) - std::numeric_limits<T>::epsilon() / 2);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> ste_round(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, "ste_round", x, [](T v) { return std::round(v); },
      [](T, T) { return T(1); });
}

// --- elementwise ----------------------------------------------------------

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> y(binary_shape(a, b, "add"));
  auto yd = y.mutable_data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = bval(a, i) + bval(b, i);
  check_finite(y, "add");
  tape.record("add", {a, b}, y, [a, b, y]() mutable {
    auto gy = y.grad();
    if (wants_grad(a)) accumulate(a, gy.size(), [&](std::size_t i) { return gy[i]; });
    if (wants_grad(b)) accumulate(b, gy.size(), [&](std::size_t i) { return gy[i]; });
  });
  return y;
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> y(binary_shape(a, b, "sub"));
  auto yd = y.mutable_data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = bval(a, i) - bval(b, i);
  check_finite(y, "sub");
  tape.record("sub", {a, b}, y, [a, b, y]() mutable {
    auto gy = y.grad();
    if (wants_grad(a)) accumulate(a, gy.size(), [&](std::size_t i) { return gy[i]; });
    if (wants_grad(b)) accumulate(b, gy.size(), [&](std::size_t i) { return -gy[i]; });
  });
  return y;
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> y(binary_shape(a, b, "mul"));
  auto yd = y.mutable_data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = bval(a, i) * bval(b, i);
  check_finite(y, "mul");
  tape.record("mul", {a, b}, y, [a, b, y]() mutable {
    auto gy = y.grad();
    if (wants_grad(a)) {
      accumulate(a, gy.size(), [&](std::size_t i) { return gy[i] * bval(b, i); });
    }
    if (wants_grad(b)) {
      accumulate(b, gy.size(), [&](std::size_t i) { return gy[i] * bval(a, i); });
    }
  });
  return y;
}

template <typename T>
Tensor<T> div(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> y(binary_shape(a, b, "div"));
  auto yd = y.mutable_data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = bval(a, i) / bval(b, i);
  check_finite(y, "div");
  tape.record("div", {a, b}, y, [a, b, y]() mutable {
    auto gy = y.grad();
    if (wants_grad(a)) {
      accumulate(a, gy.size(), [&](std::size_t i) { return gy[i] / bval(b, i); });
    }
    if (wants_grad(b)) {
      accumulate(b, gy.size(), [&](std::size_t i) {
        T bv = bval(b, i);
        return -gy[i] * bval(a, i) / (bv * bv);
      });
    }
  });
  return y;
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T s) {
  return unary(
      tape, "scale", x, [s](T v) { return s * v; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(Tape<T>& tape, const Tensor<T>& x, T s) {
  return unary(
      tape, "add_scalar", x, [s](T v) { return v + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> abs(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, "abs", x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> square(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, "square", x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> sqrt(Tape<T>& tape, const Tensor<T>& x) {
  return unary(
      tape, "sqrt", x, [](T v) { return std::sqrt(v); },
      [](T, T y) { return y > T(0) ? T(0.5) / y : T(0); });
}

template <typename T>
Tensor<T> pow_scalar(Tape<T>& tape, const Tensor<T>& x, T p) {
  return unary(
      tape, "pow_scalar", x,
      [p](T v) { return v > T(0) ? std::pow(v, p) : T(0); },
      [p](T v, T y) { return v > T(0) ? p * y / v : T(0); });
}

// --- reductions -----------------------------------------------------------

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  Tensor<T> y = Tensor<T>::scalar(acc);
  check_finite(y, "sum");
  tape.record("sum", {x}, y, [x, y]() mutable {
    if (!wants_grad(x)) return;
    const T g = y.grad()[0];
    for (T& gx : x.grad_buffer()) gx += g;
  });
  return y;
}

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x) {
  if (x.numel() == 0) return Tensor<T>::scalar(T(0));
  const T n = static_cast<T>(x.numel());
  T acc = 0;
  for (T v : x.data()) acc += v;
  Tensor<T> y = Tensor<T>::scalar(acc / n);
  check_finite(y, "mean");
  tape.record("mean", {x}, y, [x, y, n]() mutable {
    if (!wants_grad(x)) return;
    const T g = y.grad()[0] / n;
    for (T& gx : x.grad_buffer()) gx += g;
  });
  return y;
}

template <typename T>
Tensor<T> l1_norm(Tape<T>& tape, const Tensor<T>& x) {
  return sum(tape, abs(tape, x));
}

template <typename T>
Tensor<T> l2_norm(Tape<T>& tape, const Tensor<T>& x) {
  return sqrt(tape, sum(tape, square(tape, x)));
}

template <typename T>
Tensor<T> sum_per_sample(Tape<T>& tape, const Tensor<T>& x) {
  if (x.rank() < 1) throw ShapeError("sum_per_sample: rank-0 input");
  const int n = x.dim(0);
  const std::size_t per = n == 0 ? 0 : x.numel() / n;
  Tensor<T> y(Shape{n});
  auto yd = y.mutable_data();
  auto xd = x.data();
  for (int s = 0; s < n; ++s) {
    T acc = 0;
    for (std::size_t i = 0; i < per; ++i) acc += xd[s * per + i];
    yd[s] = acc;
  }
  check_finite(y, "sum_per_sample");
  tape.record("sum_per_sample", {x}, y, [x, y, n, per]() mutable {
    if (!wants_grad(x)) return;
    auto gy = y.grad();
    auto gx = x.grad_buffer();
    for (int s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < per; ++i) gx[s * per + i] += gy[s];
    }
  });
  return y;
}

template <typename T>
Tensor<T> spatial_mean(Tape<T>& tape, const Tensor<T>& x) {
  require_rank(x, 4, "spatial_mean", "input");
  const int rows = x.dim(0) * x.dim(1);
  const std::size_t plane = std::size_t(x.dim(2)) * x.dim(3);
  Tensor<T> y(Shape{x.dim(0), x.dim(1)});
  auto yd = y.mutable_data();
  auto xd = x.data();
  for (int r = 0; r < rows; ++r) {
    T acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += xd[r * plane + i];
    yd[r] = acc / static_cast<T>(plane);
  }
  check_finite(y, "spatial_mean");
  tape.record("spatial_mean", {x}, y, [x, y, rows, plane]() mutable {
    if (!wants_grad(x)) return;
    auto gy = y.grad();
    auto gx = x.grad_buffer();
    for (int r = 0; r < rows; ++r) {
      const T g = gy[r] / static_cast<T>(plane);
      for (std::size_t i = 0; i < plane; ++i) gx[r * plane + i] += g;
    }
  });
  return y;
}

// --- filtering ------------------------------------------------------------

namespace {

// Valid 1-D correlation along rows (horizontal) or columns (vertical) of
// every plane. `out` must be zeroed or hold values to accumulate into.
template <typename T>
void filter_rows(const T* in, int h, int w, const std::vector<T>& k, T* out) {
  const int kw = static_cast<int>(k.size());
  const int ow = w - kw + 1;
  for (int y = 0; y < h; ++y) {
    const T* ir = in + std::size_t(y) * w;
    T* orow = out + std::size_t(y) * ow;
    for (int x = 0; x < ow; ++x) {
      T acc = 0;
      for (int t = 0; t < kw; ++t) acc += k[t] * ir[x + t];
      orow[x] += acc;
    }
  }
}

template <typename T>
void filter_cols(const T* in, int h, int w, const std::vector<T>& k, T* out) {
  const int kh = static_cast<int>(k.size());
  const int oh = h - kh + 1;
  for (int y = 0; y < oh; ++y) {
    T* orow = out + std::size_t(y) * w;
    for (int t = 0; t < kh; ++t) {
      const T kv = k[t];
      const T* ir = in + std::size_t(y + t) * w;
      for (int x = 0; x < w; ++x) orow[x] += kv * ir[x];
    }
  }
}

template <typename T>
void filter_rows_adjoint(const T* gout, int h, int w, const std::vector<T>& k,
                         T* gin) {
  const int kw = static_cast<int>(k.size());
  const int ow = w - kw + 1;
  for (int y = 0; y < h; ++y) {
    T* gr = gin + std::size_t(y) * w;
    const T* gor = gout + std::size_t(y) * ow;
    for (int x = 0; x < ow; ++x) {
      const T g = gor[x];
      for (int t = 0; t < kw; ++t) gr[x + t] += k[t] * g;
    }
  }
}

template <typename T>
void filter_cols_adjoint(const T* gout, int h, int w, const std::vector<T>& k,
                         T* gin) {
  const int kh = static_cast<int>(k.size());
  const int oh = h - kh + 1;
  for (int y = 0; y < oh; ++y) {
    const T* gor = gout + std::size_t(y) * w;
    for (int t = 0; t < kh; ++t) {
      const T kv = k[t];
      T* gr = gin + std::size_t(y + t) * w;
      for (int x = 0; x < w; ++x) gr[x] += kv * gor[x];
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> separable_filter(Tape<T>& tape, const Tensor<T>& x,
                           const std::vector<T>& kernel) {
  require_rank(x, 4, "separable_filter", "input");
  const int k = static_cast<int>(kernel.size());
  const int h = x.dim(2), w = x.dim(3);
  if (k == 0 || k > h || k > w) {
    throw ShapeError("separable_filter: kernel of size " + std::to_string(k) +
                     " does not fit input " + shape_str(x.shape()));
  }
  const int oh = h - k + 1, ow = w - k + 1;
  const int planes = x.dim(0) * x.dim(1);
  Tensor<T> y(Shape{x.dim(0), x.dim(1), oh, ow});
  std::vector<T> tmp(std::size_t(h) * ow);
  {
    auto xd = x.data();
    auto yd = y.mutable_data();
    for (int p = 0; p < planes; ++p) {
      std::fill(tmp.begin(), tmp.end(), T(0));
      filter_rows(xd.data() + std::size_t(p) * h * w, h, w, kernel, tmp.data());
      filter_cols(tmp.data(), h, ow, kernel, yd.data() + std::size_t(p) * oh * ow);
    }
  }
  check_finite(y, "separable_filter");
  tape.record("separable_filter", {x}, y,
              [x, y, kernel, h, w, oh, ow, planes]() mutable {
                if (!wants_grad(x)) return;
                auto gy = y.grad();
                auto gx = x.grad_buffer();
                std::vector<T> tmp(std::size_t(h) * ow);
                for (int p = 0; p < planes; ++p) {
                  std::fill(tmp.begin(), tmp.end(), T(0));
                  filter_cols_adjoint(gy.data() + std::size_t(p) * oh * ow, h, ow,
                                      kernel, tmp.data());
                  filter_rows_adjoint(tmp.data(), h, w, kernel,
                                      gx.data() + std::size_t(p) * h * w);
                }
              });
  return y;
}

template <typename T>
Tensor<T> avg_pool2(Tape<T>& tape, const Tensor<T>& x) {
  require_rank(x, 4, "avg_pool2", "input");
  const int h = x.dim(2), w = x.dim(3);
  const int oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) {
    throw ShapeError("avg_pool2: input too small " + shape_str(x.shape()));
  }
  const int planes = x.dim(0) * x.dim(1);
  Tensor<T> y(Shape{x.dim(0), x.dim(1), oh, ow});
  auto xd = x.data();
  auto yd = y.mutable_data();
  for (int p = 0; p < planes; ++p) {
    const T* in = xd.data() + std::size_t(p) * h * w;
    T* out = yd.data() + std::size_t(p) * oh * ow;
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        const T* a = in + std::size_t(2 * r) * w + 2 * c;
        out[r * ow + c] = (a[0] + a[1] + a[w] + a[w + 1]) * T(0.25);
      }
    }
  }
  check_finite(y, "avg_pool2");
  tape.record("avg_pool2", {x}, y, [x, y, h, w, oh, ow, planes]() mutable {
    if (!wants_grad(x)) return;
    auto gy = y.grad();
    auto gx = x.grad_buffer();
    for (int p = 0; p < planes; ++p) {
      T* gi = gx.data() + std::size_t(p) * h * w;
      const T* go = gy.data() + std::size_t(p) * oh * ow;
      for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
          const T g = go[r * ow + c] * T(0.25);
          T* a = gi + std::size_t(2 * r) * w + 2 * c;
          a[0] += g;
          a[1] += g;
          a[w] += g;
          a[w + 1] += g;
        }
      }
    }
  });
  return y;
}

#define NIC_INSTANTIATE(T)                                                        \
  template Tensor<T> conv2d<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&,      \
                               const Tensor<T>&, int, int);                       \
  template Tensor<T> conv2d_transpose<T>(Tape<T>&, const Tensor<T>&,              \
                                         const Tensor<T>&, const Tensor<T>&, int, \
                                         int);                                    \
  template Tensor<T> leaky_relu<T>(Tape<T>&, const Tensor<T>&, T);                \
  template Tensor<T> relu<T>(Tape<T>&, const Tensor<T>&);                         \
  template Tensor<T> sigmoid<T>(Tape<T>&, const Tensor<T>&);                      \
  template Tensor<T> ste_round<T>(Tape<T>&, const Tensor<T>&);                    \
  template Tensor<T> add<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> sub<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> mul<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> div<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> scale<T>(Tape<T>&, const Tensor<T>&, T);                     \
  template Tensor<T> add_scalar<T>(Tape<T>&, const Tensor<T>&, T);                \
  template Tensor<T> abs<T>(Tape<T>&, const Tensor<T>&);                          \
  template Tensor<T> square<T>(Tape<T>&, const Tensor<T>&);                       \
  template Tensor<T> sqrt<T>(Tape<T>&, const Tensor<T>&);                         \
  template Tensor<T> pow_scalar<T>(Tape<T>&, const Tensor<T>&, T);                \
  template Tensor<T> sum<T>(Tape<T>&, const Tensor<T>&);                          \
  template Tensor<T> mean<T>(Tape<T>&, const Tensor<T>&);                         \
  template Tensor<T> l1_norm<T>(Tape<T>&, const Tensor<T>&);                      \
  template Tensor<T> l2_norm<T>(Tape<T>&, const Tensor<T>&);                      \
  template Tensor<T> sum_per_sample<T>(Tape<T>&, const Tensor<T>&);               \
  template Tensor<T> spatial_mean<T>(Tape<T>&, const Tensor<T>&);                 \
  template Tensor<T> separable_filter<T>(Tape<T>&, const Tensor<T>&,              \
                                         const std::vector<T>&);                  \
  template Tensor<T> avg_pool2<T>(Tape<T>&, const Tensor<T>&);

NIC_INSTANTIATE(float)
NIC_INSTANTIATE(double)
#undef NIC_INSTANTIATE

}  // namespace nic::ops
