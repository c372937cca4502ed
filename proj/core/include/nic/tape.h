#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nic/tensor.h"

namespace nic {

// Ordered record of differentiable ops executed in one forward pass.
// Entries are appended in execution order, so every entry's inputs were
// produced by earlier entries (or are leaves). backward() replays the
// record in reverse, visiting each entry at most once.
//
// A tape and the tensors recorded on it belong to one thread.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Entry {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Records an op if any input requires a gradient. The output is marked as
  // requiring a gradient in that case. Returns whether an entry was added.
  bool record(std::string op, std::vector<Tensor<T>> inputs, Tensor<T>& output,
              BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every tensor that requires
  // a gradient. Intermediate gradients are reset first; leaf gradients
  // accumulate across calls until zeroed by the caller.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  // With recording disabled every op runs forward only.
  void set_enabled(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }

 private:
  std::vector<Entry> entries_;
  bool enabled_ = true;
};

}  // namespace nic
