#include "sgnet/layers.hpp"

namespace sgnet {

std::int64_t ParamList::count() const {
  std::int64_t total = 0;
  for (const auto& p : params) total += static_cast<std::int64_t>(p.tensor.numel());
  return total;
}

ConvSpec conv_spec(int in, int out, int kernel, int stride, int padding,
                   int groups) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = {kernel, kernel};
  s.stride = {stride, stride};
  s.padding = {padding, padding};
  s.groups = groups;
  s.validate();
  return s;
}

Conv2d::Conv2d(const ConvSpec& spec, bool with_bias) : spec_(spec) {
  spec_.validate();
  weight = Tensor(spec_.weight_shape(), true);
  if (with_bias) bias = Tensor({1, spec_.out_channels, 1, 1}, true);
}

Tensor Conv2d::forward(const Tensor& x) const {
  return conv2d(x, weight, bias, spec_);
}

int Conv2d::fan_in() const {
  return spec_.in_channels / spec_.groups * spec_.kernel[0] * spec_.kernel[1];
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.params.push_back({prefix + ".weight", weight, ParamRole::kConvWeight,
                        fan_in()});
  if (bias.defined()) {
    out.params.push_back({prefix + ".bias", bias, ParamRole::kConvBias,
                          fan_in()});
  }
}

BatchNorm2d::BatchNorm2d(int channels)
    : gamma(Tensor::full({1, channels, 1, 1}, 1.0, true)),
      beta(Tensor::zeros({1, channels, 1, 1}, true)),
      state(BatchNormState::fresh(channels)) {}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode) {
  return batchnorm2d(x, gamma, beta, state, mode);
}

void BatchNorm2d::collect(const std::string& prefix, ParamList& out) const {
  out.params.push_back({prefix + ".gamma", gamma, ParamRole::kBnGamma});
  out.params.push_back({prefix + ".beta", beta, ParamRole::kBnBeta});
  out.buffers.push_back({prefix + ".running_mean", state.running_mean});
  out.buffers.push_back({prefix + ".running_var", state.running_var});
}

}  // namespace sgnet
