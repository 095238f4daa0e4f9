#pragma once

#include <array>
#include <cstdint>

#include "sgnet/tensor.hpp"

namespace sgnet {

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  std::array<int, 2> kernel{1, 1};
  std::array<int, 2> stride{1, 1};
  std::array<int, 2> padding{0, 0};
  int groups = 1;
  // When false, (H + 2p - k) must be divisible by the stride. When true the
  // trailing partial window is dropped (floor rounding).
  bool floor_output = false;

  void validate() const;
  Shape weight_shape() const;
  std::int64_t weight_count() const;
};

enum class ConvAlgo { kIm2col, kDirect };

Shape conv_output_shape(const ConvSpec& spec, const Shape& input);

// b may be an undefined Tensor (no bias); otherwise shape (1,out,1,1).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
              const ConvSpec& spec, ConvAlgo algo = ConvAlgo::kIm2col);

// Per-thread tally of multiply-accumulates executed by conv2d forwards.
std::uint64_t& conv_mac_counter();

}  // namespace sgnet
