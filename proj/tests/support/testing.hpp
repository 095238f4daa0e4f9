#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sgnet/network.hpp"
#include "sgnet/rng.hpp"
#include "sgnet/tensor.hpp"

namespace sgnet::testing {

Tensor random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false);

int random_int(Rng& rng, int lo, int hi);  // inclusive

struct GradCheckResult {
  double rel_error = 0.0;
  std::size_t checked = 0;  // number of input elements perturbed
};

// Compares the tape gradient of L = sum(W * f(inputs)), W random, against
// central differences with step h, for every element of every input.
// Returns |g_tape - g_fd| / max(|g_tape|, |g_fd|) over the concatenation of
// all input gradients.
GradCheckResult gradcheck(
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    std::vector<Tensor> inputs, Rng& rng, double h = 1e-5);

struct GradCase {
  std::string name;
  // One random instance; shape and configuration drawn from rng.
  std::function<GradCheckResult(Rng&)> run;
};

// Every differentiable op plus the composite blocks.
std::vector<GradCase> grad_cases();

// Sum of element counts over every declared trainable tensor.
std::int64_t enumerate_parameters(const Network& net);

NetworkConfig random_network_config(Rng& rng);

}  // namespace sgnet::testing
