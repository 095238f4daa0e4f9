#pragma once

#include <filesystem>

#include "sgnet/network.hpp"

namespace sgnet {

// Directory with config.cfg, weights.sgt (concatenated SGT1 records of every
// parameter and buffer) and manifest.txt ("name offset" per line).
void save_checkpoint(const std::filesystem::path& dir, const Network& net);

// Loads tensors into an existing network. Throws StructuralError listing
// every tensor the network needs that the checkpoint lacks or holds with a
// different shape.
void load_weights(Network& net, const std::filesystem::path& dir);

// Builds the network described by dir/config.cfg and loads its weights.
Network load_checkpoint(const std::filesystem::path& dir);

}  // namespace sgnet
