#pragma once

#include "sgnet/network.hpp"
#include "sgnet/rng.hpp"

namespace sgnet {

// Conv weights and biases ~ U(-b, b) with b = 1/sqrt(fan_in); BN gamma = 1,
// beta = 0 and fresh running stats; learnable gate alphas = 0 exactly.
// Fixed gates keep their configured constant.
void init_network(Network& net, Rng& rng);
void init_network(Network& net, std::uint64_t seed);

}  // namespace sgnet
