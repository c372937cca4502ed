#pragma once

#include <cstdint>
#include <vector>

#include "nic/tensor.h"

namespace nic {

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;  // one per parameter tensor
  std::vector<std::vector<T>> v;

  // Zero moments shaped like `params`.
  static AdamState zeros(const std::vector<Tensor<T>>& params);
};

// One bias-corrected Adam update of every tensor in `params` from its
// current gradient (a tensor without a gradient buffer counts as zero
// gradient). Throws ShapeError if `state` does not mirror `params`.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state, double lr);

}  // namespace nic
