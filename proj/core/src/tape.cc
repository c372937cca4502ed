#include "nic/tape.h"

#include <algorithm>

#include "nic/errors.h"

namespace nic {

template <typename T>
bool Tape<T>::record(std::string op, std::vector<Tensor<T>> inputs,
                     Tensor<T>& output, BackwardFn backward) {
  if (!enabled_) return false;
  bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) {
    return t.defined() && t.requires_grad();
  });
  if (!any) return false;
  output.set_requires_grad(true);
  entries_.push_back(
      Entry{std::move(op), std::move(inputs), output, std::move(backward)});
  return true;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : "<undefined>"));
  }
  auto last = std::find_if(entries_.rbegin(), entries_.rend(), [&](const Entry& e) {
    return e.output.same_storage(loss);
  });
  Tensor<T> seed = loss;
  if (last == entries_.rend()) {
    if (!loss.requires_grad()) {
      throw ShapeError("backward(): loss was not produced on this tape");
    }
    seed.grad_buffer()[0] += T(1);
    return;
  }
  for (Entry& e : entries_) {
    // Drop stale gradients of intermediates; leaves keep accumulating.
    e.output.zero_grad();
  }
  seed.grad_buffer()[0] = T(1);
  for (auto it = last; it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace nic
