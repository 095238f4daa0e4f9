#include "sgnet/blocks.hpp"

#include <ostream>

#include "sgnet/errors.hpp"
#include "sgnet/format.hpp"
#include "sgnet/ops.hpp"

namespace sgnet {

GateSpec GateSpec::parse(std::string_view text) {
  if (text == "learnable_scalar") return {GateMode::kLearnableScalar, 0.0};
  if (text == "learnable_per_channel") {
    return {GateMode::kLearnablePerChannel, 0.0};
  }
  if (text == "hard_sigmoid") return {GateMode::kHardSigmoid, 0.0};
  constexpr std::string_view prefix = "fixed:";
  if (text.starts_with(prefix)) {
    double v;
    if (parse_double(text.substr(prefix.size()), v)) {
      return {GateMode::kFixed, v};
    }
  }
  throw ConfigError("unknown gate mode '" + std::string(text) +
                    "' (expected fixed:<value>, learnable_scalar, "
                    "learnable_per_channel or hard_sigmoid)");
}

std::string GateSpec::str() const {
  switch (mode) {
    case GateMode::kFixed:
      return "fixed:" + fmt_double(fixed_value);
    case GateMode::kLearnableScalar:
      return "learnable_scalar";
    case GateMode::kLearnablePerChannel:
      return "learnable_per_channel";
    case GateMode::kHardSigmoid:
      return "hard_sigmoid";
  }
  return {};
}

GateParam::GateParam(const GateSpec& spec, int channels) : spec_(spec) {
  switch (spec.mode) {
    case GateMode::kFixed:
      alpha = Tensor::full({1, 1, 1, 1}, spec.fixed_value, false);
      break;
    case GateMode::kLearnableScalar:
      alpha = Tensor::zeros({1, 1, 1, 1}, true);
      break;
    case GateMode::kLearnablePerChannel:
      alpha = Tensor::zeros({1, channels, 1, 1}, true);
      break;
    case GateMode::kHardSigmoid:
      gate_conv = Conv2d(conv_spec(channels, channels, 1), true);
      break;
  }
}

Tensor GateParam::apply(const Tensor& x) const {
  if (spec_.mode == GateMode::kHardSigmoid) {
    return mul(sigmoid(gate_conv.forward(x)), x);
  }
  return scale_channels(x, alpha);
}

std::vector<double> GateParam::alpha_values() const {
  if (!alpha.defined()) return {};
  return {alpha.data().begin(), alpha.data().end()};
}

std::int64_t GateParam::trainable_count() const {
  ParamList list;
  collect("", list);
  return list.count();
}

void GateParam::collect(const std::string& prefix, ParamList& out) const {
  switch (spec_.mode) {
    case GateMode::kFixed:
      break;
    case GateMode::kLearnableScalar:
    case GateMode::kLearnablePerChannel:
      out.params.push_back({prefix + ".alpha", alpha, ParamRole::kGateAlpha});
      break;
    case GateMode::kHardSigmoid:
      gate_conv.collect(prefix + ".conv", out);
      break;
  }
}

std::array<int, 3> HierarchicalBranch::stage_widths(int width) {
  return {width / 2, width / 4, width / 4};
}

HierarchicalBranch::HierarchicalBranch(int width) : width_(width) {
  if (width <= 0 || width % 4 != 0) {
    throw ConfigError("hierarchical branch width must be a positive multiple "
                      "of 4, got " + std::to_string(width));
  }
  const auto out = stage_widths(width);
  int in = width;
  for (int i = 0; i < 3; ++i) {
    norms[i] = BatchNorm2d(in);
    convs[i] = Conv2d(conv_spec(in, out[i], 3, 1, 1), false);
    in = out[i];
  }
}

Tensor HierarchicalBranch::forward(const Tensor& x, Mode mode) {
  if (x.shape().c != width_) {
    throw ConfigError("residual block expects " + std::to_string(width_) +
                      " channels, got " + std::to_string(x.shape().c));
  }
  std::array<Tensor, 3> stages;
  Tensor h = x;
  for (int i = 0; i < 3; ++i) {
    h = convs[i].forward(relu(norms[i].forward(h, mode)));
    stages[i] = h;
  }
  return concat_channels(stages);
}

void HierarchicalBranch::collect(const std::string& prefix,
                                 ParamList& out) const {
  for (int i = 0; i < 3; ++i) {
    norms[i].collect(prefix + ".bn" + std::to_string(i), out);
    convs[i].collect(prefix + ".conv" + std::to_string(i), out);
  }
}

ResidualBlock::ResidualBlock(int width, const GateSpec& gate_spec)
    : branch(width), gate(gate_spec, width) {}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode, BlockTrace* trace) {
  Tensor f = branch.forward(x, mode);
  Tensor skip = gate.apply(x);
  Tensor out = add(skip, f);
  if (trace != nullptr) *trace = {f, x, skip, out};
  return out;
}

void ResidualBlock::collect(const std::string& prefix, ParamList& out) const {
  branch.collect(prefix + ".branch", out);
  gate.collect(prefix + ".gate", out);
}

std::string BlockPosition::id() const {
  return "s" + std::to_string(stack) + "." + position + std::to_string(level);
}

void write_alpha_csv(std::ostream& os, std::span<const AlphaRecord> records) {
  os << "stack,position,level,channel,alpha\n";
  for (const auto& r : records) {
    for (std::size_t c = 0; c < r.alpha.size(); ++c) {
      os << r.where.stack << ',' << r.where.position << ',' << r.where.level
         << ',' << c << ',' << fmt_double(r.alpha[c]) << '\n';
    }
  }
}

}  // namespace sgnet
