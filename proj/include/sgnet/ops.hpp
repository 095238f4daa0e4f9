#pragma once

#include <span>
#include <vector>

#include "sgnet/tensor.hpp"

namespace sgnet {

Tensor add(const Tensor& x, const Tensor& y);
Tensor mul(const Tensor& x, const Tensor& y);
// Multiplies channel c of x by alpha[c]. alpha has shape (1,C,1,1) or
// (1,1,1,1); the scalar form is broadcast over channels.
Tensor scale_channels(const Tensor& x, const Tensor& alpha);
Tensor relu(const Tensor& x);
// Logistic sigmoid clamped to the open interval (0,1).
Tensor sigmoid(const Tensor& x);
// 2x2 window, stride 2. Spatial dims must be even.
Tensor maxpool2x2(const Tensor& x);
Tensor upsample_nearest2x(const Tensor& x);
Tensor concat_channels(std::span<const Tensor> xs);
Tensor concat_channels(std::initializer_list<Tensor> xs);
// Channels [begin, end) of x.
Tensor slice_channels(const Tensor& x, int begin, int end);
// Scalar (1,1,1,1) sum of all elements.
Tensor sum(const Tensor& x);

}  // namespace sgnet
