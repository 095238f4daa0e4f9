#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgnet/tensor.hpp"

namespace sgnet {

/// Define-by-run record of executed ops. One tape per thread; an op is
/// recorded only when recording is enabled and at least one of its inputs
/// requires grad. backward() consumes the tape.
class Tape {
 public:
  // Receives the gradient of the op output; accumulates into the inputs.
  using BackwardFn = std::function<void(std::span<const double> grad_out)>;

  struct Entry {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  static Tape& current();

  bool recording() const { return enabled_; }
  void set_recording(bool on) { enabled_ = on; }

  // Marks output as requiring grad and appends an entry when any input
  // requires grad. Returns true when recorded.
  bool record(std::string op, std::vector<Tensor> inputs, Tensor& output,
              BackwardFn backward);

  void backward(const Tensor& loss);
  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  // Name of the earliest recorded op whose output is non-finite.
  std::optional<std::string> first_nonfinite_op() const;

 private:
  std::vector<Entry> entries_;
  bool enabled_ = true;
};

/// Disables recording on the current thread's tape for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(Tape::current().recording()) {
    Tape::current().set_recording(false);
  }
  ~NoGradGuard() { Tape::current().set_recording(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Backpropagates d(loss)/d(t) into every requires_grad tensor reachable from
// loss, then clears the tape. loss must hold exactly one element.
void backward(const Tensor& loss);

}  // namespace sgnet
