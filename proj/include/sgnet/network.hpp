#pragma once

#include <array>
#include <functional>
#include <vector>

#include "sgnet/blocks.hpp"
#include "sgnet/config.hpp"

namespace sgnet {

/// Big-skip transform on an encoder->decoder lateral: BN -> ReLU -> 1x1 conv.
class SkipTransform {
 public:
  SkipTransform() = default;
  explicit SkipTransform(int width);
  Tensor forward(const Tensor& x, Mode mode);
  void collect(const std::string& prefix, ParamList& out) const;

  BatchNorm2d norm;
  Conv2d conv;
};

/// Decoder-side fusion of an encoder lateral with the upsampled decoder
/// stream. sum adds them; the concat modes concatenate (encoder first) to 2N
/// channels and reduce back to N with a 3x3 conv (groups 1 or 2) followed by
/// BN -> ReLU.
class FeatureMerge {
 public:
  FeatureMerge() = default;
  FeatureMerge(Aggregation mode, int width);

  Tensor forward(const Tensor& enc, const Tensor& dec, Mode mode);
  // Output before BN/ReLU (the plain sum in sum mode).
  Tensor pre_activation(const Tensor& enc, const Tensor& dec) const;
  Aggregation mode() const { return mode_; }
  void collect(const std::string& prefix, ParamList& out) const;

  Conv2d conv;
  BatchNorm2d norm;

 private:
  Aggregation mode_ = Aggregation::kSum;
  int width_ = 0;
};

Tensor merge_features(const Tensor& enc, const Tensor& dec,
                      FeatureMerge& layer, Mode mode);

/// 7x7 stride-2 conv -> residual block -> maxpool -> residual block.
class Stem {
 public:
  Stem() = default;
  Stem(int width, const GateSpec& gate);
  Tensor forward(const Tensor& x, Mode mode, std::vector<BlockTrace>* traces);
  void collect(const std::string& prefix, ParamList& out) const;

  Conv2d conv;
  std::array<ResidualBlock, 2> blocks;
};

/// next stack input = features + 1x1(features) + 1x1(heatmaps)
class InterStackRemap {
 public:
  InterStackRemap() = default;
  InterStackRemap(int width, int keypoints);
  Tensor forward(const Tensor& features, const Tensor& heatmaps) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Conv2d from_features;
  Conv2d from_heatmaps;
};

// Spatial shapes seen by one stack, for encoder/decoder symmetry checks.
struct StackShapes {
  std::array<Shape, NetworkConfig::kLevels> encoder_out;  // lateral sources
  std::array<Shape, NetworkConfig::kLevels> merge_in;     // upsampled inputs
};

struct ForwardTrace {
  bool capture_blocks = false;
  std::vector<StackShapes> stacks;
  std::vector<std::pair<BlockPosition, BlockTrace>> blocks;
};

struct StackOutput {
  Tensor features;
  Tensor heatmaps;
};

/// One encoder-decoder unit. Lateral level i sits at heatmap_size / 2^i:
/// level 0 is the stack input, levels 1..3 are maxpool -> residual block.
/// The bottleneck is a single block one level below level 3. The decoder
/// upsamples and merges with each lateral on the way back up, and a 1x1 head
/// emits the K heatmaps.
class Stack {
 public:
  Stack() = default;
  Stack(const NetworkConfig& cfg, int index);
  StackOutput forward(const Tensor& x, Mode mode, ForwardTrace* trace);
  void collect(const std::string& prefix, ParamList& out) const;

  std::array<SkipTransform, NetworkConfig::kLevels> skips;
  std::array<ResidualBlock, NetworkConfig::kLevels - 1> encoders;  // 1..3
  ResidualBlock bottleneck;
  std::array<FeatureMerge, NetworkConfig::kLevels> merges;
  Conv2d head;

 private:
  int index_ = 0;
};

class Network {
 public:
  explicit Network(const NetworkConfig& cfg);

  // One (N, K, heatmap, heatmap) tensor per stack.
  std::vector<Tensor> forward(const Tensor& images, Mode mode,
                              ForwardTrace* trace = nullptr);

  const NetworkConfig& config() const { return cfg_; }
  ParamList parameters() const;
  std::int64_t parameter_count() const { return parameters().count(); }
  void zero_grad() const;

  // Residual blocks in stable order: stem, then per stack encoders 1..3 and
  // the bottleneck.
  std::vector<std::pair<BlockPosition, ResidualBlock*>> blocks();

  Stem stem;
  std::vector<Stack> stacks;
  std::vector<InterStackRemap> remaps;

 private:
  NetworkConfig cfg_;
};

Network build(const NetworkConfig& cfg);

// Gate alphas of every block, tagged with position. Hard-sigmoid gates have
// no alpha and are omitted.
std::vector<AlphaRecord> alpha_snapshot(Network& net);

}  // namespace sgnet
