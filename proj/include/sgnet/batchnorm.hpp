#pragma once

#include "sgnet/tensor.hpp"

namespace sgnet {

enum class Mode { kTrain, kEval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct BatchNormState {
  Tensor running_mean;  // (1,C,1,1)
  Tensor running_var;   // (1,C,1,1)

  static BatchNormState fresh(int channels);
};

// Train mode normalizes with biased batch statistics and folds the unbiased
// variance into running_var with momentum 0.1. Eval mode uses running stats.
Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, Mode mode);

}  // namespace sgnet
