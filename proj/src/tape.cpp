#include "sgnet/tape.hpp"

#include "sgnet/errors.hpp"

namespace sgnet {

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

bool Tape::record(std::string op, std::vector<Tensor> inputs, Tensor& output,
                  BackwardFn backward) {
  if (!enabled_) return false;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return false;
  output.set_requires_grad(true);
  entries_.push_back(
      {std::move(op), std::move(inputs), output, std::move(backward)});
  return true;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got " +
                     (loss.defined() ? loss.shape().str() : "undefined"));
  }
  Tensor root = loss;
  if (!root.requires_grad()) {
    clear();
    return;
  }
  root.grad_buffer()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not reachable from loss
    it->backward(it->output.grad());
  }
  clear();
}

std::optional<std::string> Tape::first_nonfinite_op() const {
  for (const auto& e : entries_) {
    if (!all_finite(e.output.data())) return e.op;
  }
  return std::nullopt;
}

void backward(const Tensor& loss) { Tape::current().backward(loss); }

}  // namespace sgnet
