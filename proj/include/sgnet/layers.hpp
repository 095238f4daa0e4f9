#pragma once

#include <string>
#include <vector>

#include "sgnet/batchnorm.hpp"
#include "sgnet/conv.hpp"
#include "sgnet/tensor.hpp"

namespace sgnet {

enum class ParamRole { kConvWeight, kConvBias, kBnGamma, kBnBeta, kGateAlpha };

struct NamedParam {
  std::string name;
  Tensor tensor;
  ParamRole role;
  int fan_in = 0;  // conv weights/biases only
};

struct NamedBuffer {
  std::string name;
  Tensor tensor;
};

// Trainable parameters and non-trainable buffers (BN running stats) in a
// stable declaration order.
struct ParamList {
  std::vector<NamedParam> params;
  std::vector<NamedBuffer> buffers;

  std::int64_t count() const;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const ConvSpec& spec, bool with_bias);

  Tensor forward(const Tensor& x) const;
  const ConvSpec& spec() const { return spec_; }
  int fan_in() const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor weight;
  Tensor bias;  // undefined when built without bias

 private:
  ConvSpec spec_;
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels);

  Tensor forward(const Tensor& x, Mode mode);
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor gamma;
  Tensor beta;
  BatchNormState state;
};

ConvSpec conv_spec(int in, int out, int kernel, int stride = 1,
                   int padding = 0, int groups = 1);

}  // namespace sgnet
