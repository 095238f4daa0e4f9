#include "sgnet/network.hpp"

#include "sgnet/errors.hpp"
#include "sgnet/ops.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {

SkipTransform::SkipTransform(int width)
    : norm(width), conv(conv_spec(width, width, 1), true) {}

Tensor SkipTransform::forward(const Tensor& x, Mode mode) {
  return conv.forward(relu(norm.forward(x, mode)));
}

void SkipTransform::collect(const std::string& prefix, ParamList& out) const {
  norm.collect(prefix + ".bn", out);
  conv.collect(prefix + ".conv", out);
}

FeatureMerge::FeatureMerge(Aggregation mode, int width)
    : mode_(mode), width_(width) {
  if (mode == Aggregation::kSum) return;
  const int groups = mode == Aggregation::kConcatGrouped ? 2 : 1;
  conv = Conv2d(conv_spec(2 * width, width, 3, 1, 1, groups), false);
  norm = BatchNorm2d(width);
}

Tensor FeatureMerge::pre_activation(const Tensor& enc,
                                    const Tensor& dec) const {
  if (!(enc.shape() == dec.shape())) {
    throw ConfigError("merge_features: encoder " + enc.shape().str() +
                      " and decoder " + dec.shape().str() + " differ");
  }
  if (enc.shape().c != width_) {
    throw ConfigError("merge_features: expected " + std::to_string(width_) +
                      " channels, got " + std::to_string(enc.shape().c));
  }
  if (mode_ == Aggregation::kSum) return add(enc, dec);
  return conv.forward(concat_channels({enc, dec}));
}

Tensor FeatureMerge::forward(const Tensor& enc, const Tensor& dec, Mode mode) {
  Tensor y = pre_activation(enc, dec);
  if (mode_ == Aggregation::kSum) return y;
  return relu(norm.forward(y, mode));
}

void FeatureMerge::collect(const std::string& prefix, ParamList& out) const {
  if (mode_ == Aggregation::kSum) return;
  conv.collect(prefix + ".conv", out);
  norm.collect(prefix + ".bn", out);
}

Tensor merge_features(const Tensor& enc, const Tensor& dec,
                      FeatureMerge& layer, Mode mode) {
  return layer.forward(enc, dec, mode);
}

Stem::Stem(int width, const GateSpec& gate) {
  ConvSpec spec = conv_spec(3, width, 7, 2, 3);
  spec.floor_output = true;
  conv = Conv2d(spec, true);
  blocks = {ResidualBlock(width, gate), ResidualBlock(width, gate)};
}

Tensor Stem::forward(const Tensor& x, Mode mode,
                     std::vector<BlockTrace>* traces) {
  if (x.shape().c != 3) {
    throw ConfigError("stem expects 3 input channels, got " +
                      std::to_string(x.shape().c));
  }
  BlockTrace t0, t1;
  Tensor h = blocks[0].forward(conv.forward(x), mode, traces ? &t0 : nullptr);
  h = blocks[1].forward(maxpool2x2(h), mode, traces ? &t1 : nullptr);
  if (traces != nullptr) {
    traces->push_back(t0);
    traces->push_back(t1);
  }
  return h;
}

void Stem::collect(const std::string& prefix, ParamList& out) const {
  conv.collect(prefix + ".conv", out);
  blocks[0].collect(prefix + ".block0", out);
  blocks[1].collect(prefix + ".block1", out);
}

InterStackRemap::InterStackRemap(int width, int keypoints)
    : from_features(conv_spec(width, width, 1), true),
      from_heatmaps(conv_spec(keypoints, width, 1), true) {}

Tensor InterStackRemap::forward(const Tensor& features,
                                const Tensor& heatmaps) const {
  return add(add(features, from_features.forward(features)),
             from_heatmaps.forward(heatmaps));
}

void InterStackRemap::collect(const std::string& prefix,
                              ParamList& out) const {
  from_features.collect(prefix + ".features", out);
  from_heatmaps.collect(prefix + ".heatmaps", out);
}

Stack::Stack(const NetworkConfig& cfg, int index) : index_(index) {
  for (auto& s : skips) s = SkipTransform(cfg.width);
  for (auto& e : encoders) e = ResidualBlock(cfg.width, cfg.gate);
  bottleneck = ResidualBlock(cfg.width, cfg.gate);
  for (auto& m : merges) m = FeatureMerge(cfg.aggregation, cfg.width);
  head = Conv2d(conv_spec(cfg.width, cfg.keypoints, 1), true);
}

StackOutput Stack::forward(const Tensor& x, Mode mode, ForwardTrace* trace) {
  constexpr int L = NetworkConfig::kLevels;
  const bool capture = trace != nullptr && trace->capture_blocks;
  std::array<Tensor, L> lateral_src;
  std::array<Tensor, L> lateral;
  lateral_src[0] = x;
  for (int i = 1; i < L; ++i) {
    BlockTrace bt;
    lateral_src[i] = encoders[i - 1].forward(maxpool2x2(lateral_src[i - 1]),
                                             mode, capture ? &bt : nullptr);
    if (capture) trace->blocks.push_back({{index_, "encoder", i}, bt});
  }
  for (int i = 0; i < L; ++i) lateral[i] = skips[i].forward(lateral_src[i], mode);

  BlockTrace bt;
  Tensor h = bottleneck.forward(maxpool2x2(lateral_src[L - 1]), mode,
                                capture ? &bt : nullptr);
  if (capture) trace->blocks.push_back({{index_, "bottleneck", L}, bt});

  StackShapes shapes;
  for (int i = L - 1; i >= 0; --i) {
    Tensor up = upsample_nearest2x(h);
    shapes.encoder_out[i] = lateral_src[i].shape();
    shapes.merge_in[i] = up.shape();
    h = merges[i].forward(lateral[i], up, mode);
  }
  if (trace != nullptr) trace->stacks.push_back(shapes);
  return {h, head.forward(h)};
}

void Stack::collect(const std::string& prefix, ParamList& out) const {
  for (int i = 0; i < NetworkConfig::kLevels - 1; ++i) {
    encoders[i].collect(prefix + ".enc" + std::to_string(i + 1), out);
  }
  bottleneck.collect(prefix + ".bottleneck", out);
  for (int i = 0; i < NetworkConfig::kLevels; ++i) {
    skips[i].collect(prefix + ".skip" + std::to_string(i), out);
  }
  for (int i = 0; i < NetworkConfig::kLevels; ++i) {
    merges[i].collect(prefix + ".merge" + std::to_string(i), out);
  }
  head.collect(prefix + ".head", out);
}

Network::Network(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  stem = Stem(cfg_.width, cfg_.gate);
  for (int s = 0; s < cfg_.num_stacks; ++s) stacks.emplace_back(cfg_, s);
  for (int s = 0; s + 1 < cfg_.num_stacks; ++s) {
    remaps.emplace_back(cfg_.width, cfg_.keypoints);
  }
}

std::vector<Tensor> Network::forward(const Tensor& images, Mode mode,
                                     ForwardTrace* trace) {
  const Shape& s = images.shape();
  if (s.c != 3 || s.h != cfg_.input_size || s.w != cfg_.input_size) {
    throw ConfigError("network expects (N,3," + std::to_string(cfg_.input_size) +
                      "," + std::to_string(cfg_.input_size) + ") input, got " +
                      s.str());
  }
  const bool capture = trace != nullptr && trace->capture_blocks;
  std::vector<BlockTrace> stem_traces;
  Tensor x = stem.forward(images, mode, capture ? &stem_traces : nullptr);
  if (capture) {
    for (int i = 0; i < 2; ++i) {
      trace->blocks.push_back({{0, "stem", i}, stem_traces[i]});
    }
  }
  std::vector<Tensor> heatmaps;
  for (int i = 0; i < cfg_.num_stacks; ++i) {
    StackOutput out = stacks[i].forward(x, mode, trace);
    heatmaps.push_back(out.heatmaps);
    if (i + 1 < cfg_.num_stacks) x = remaps[i].forward(out.features, out.heatmaps);
  }
  return heatmaps;
}

ParamList Network::parameters() const {
  ParamList list;
  stem.collect("stem", list);
  for (int i = 0; i < cfg_.num_stacks; ++i) {
    stacks[i].collect("stack" + std::to_string(i), list);
  }
  for (std::size_t i = 0; i < remaps.size(); ++i) {
    remaps[i].collect("remap" + std::to_string(i), list);
  }
  return list;
}

void Network::zero_grad() const {
  for (auto& p : parameters().params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

std::vector<std::pair<BlockPosition, ResidualBlock*>> Network::blocks() {
  std::vector<std::pair<BlockPosition, ResidualBlock*>> out;
  out.push_back({{0, "stem", 0}, &stem.blocks[0]});
  out.push_back({{0, "stem", 1}, &stem.blocks[1]});
  for (int s = 0; s < cfg_.num_stacks; ++s) {
    for (int i = 0; i < NetworkConfig::kLevels - 1; ++i) {
      out.push_back({{s, "encoder", i + 1}, &stacks[s].encoders[i]});
    }
    out.push_back({{s, "bottleneck", NetworkConfig::kLevels},
                   &stacks[s].bottleneck});
  }
  return out;
}

Network build(const NetworkConfig& cfg) { return Network(cfg); }

std::vector<AlphaRecord> alpha_snapshot(Network& net) {
  std::vector<AlphaRecord> out;
  for (auto& [where, block] : net.blocks()) {
    auto values = block->gate.alpha_values();
    if (values.empty()) continue;
    out.push_back({where, std::move(values)});
  }
  return out;
}

}  // namespace sgnet
