#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sgnet/tensor.hpp"

namespace sgnet::sgt1 {

// "SGT1" | u32 rank | rank x u32 dims | float64 payload, all little-endian.
// Tensors are written with the given rank (1..4) using their trailing
// extents; readers left-pad missing leading extents with 1.

void write(std::ostream& os, const Tensor& t, int rank = 4);
Tensor read(std::istream& is);

void save(const std::filesystem::path& path, const Tensor& t, int rank = 4);
Tensor load(const std::filesystem::path& path);

// Encoded size in bytes of a rank-r record of t.
std::size_t encoded_size(const Tensor& t, int rank = 4);

}  // namespace sgnet::sgt1
