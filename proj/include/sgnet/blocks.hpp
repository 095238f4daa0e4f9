#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgnet/layers.hpp"

namespace sgnet {

enum class GateMode {
  kFixed,                // alpha is a constant, excluded from training
  kLearnableScalar,      // one alpha shared by all channels
  kLearnablePerChannel,  // one alpha per channel
  kHardSigmoid,          // data-dependent sigmoid(1x1 conv(x))
};

struct GateSpec {
  GateMode mode = GateMode::kLearnablePerChannel;
  double fixed_value = 0.0;  // kFixed only

  // "fixed:<v>", "learnable_scalar", "learnable_per_channel", "hard_sigmoid"
  static GateSpec parse(std::string_view text);
  std::string str() const;
  bool operator==(const GateSpec&) const = default;
};

/// Shortcut gate of a residual block: returns the gated skip term added to
/// the branch output.
class GateParam {
 public:
  GateParam() = default;
  GateParam(const GateSpec& spec, int channels);

  Tensor apply(const Tensor& x) const;
  const GateSpec& spec() const { return spec_; }
  bool learnable() const { return spec_.mode != GateMode::kFixed; }
  // Current alpha values; empty for hard_sigmoid.
  std::vector<double> alpha_values() const;
  // Trainable gate parameter count.
  std::int64_t trainable_count() const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor alpha;       // (1,1,1,1) or (1,C,1,1); undefined for hard_sigmoid
  Conv2d gate_conv;   // hard_sigmoid only

 private:
  GateSpec spec_;
};

/// Residual function: three serially chained BN -> ReLU -> 3x3 conv stages
/// of widths N/2, N/4, N/4 whose outputs are concatenated back to N.
class HierarchicalBranch {
 public:
  HierarchicalBranch() = default;
  explicit HierarchicalBranch(int width);

  Tensor forward(const Tensor& x, Mode mode);
  int width() const { return width_; }
  static std::array<int, 3> stage_widths(int width);
  void collect(const std::string& prefix, ParamList& out) const;

  std::array<BatchNorm2d, 3> norms;
  std::array<Conv2d, 3> convs;

 private:
  int width_ = 0;
};

// Intermediate tensors of one block forward, for distribution analysis.
struct BlockTrace {
  Tensor branch;     // F(x): features after the in-block concatenation
  Tensor skip_pre;   // x on the shortcut, before gating
  Tensor skip_post;  // gated shortcut
  Tensor out;        // skip_post + branch
};

/// x_{l+1} = gate(x_l) + F(x_l). Shape preserving.
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(int width, const GateSpec& gate);

  Tensor forward(const Tensor& x, Mode mode, BlockTrace* trace = nullptr);
  int width() const { return branch.width(); }
  void collect(const std::string& prefix, ParamList& out) const;

  HierarchicalBranch branch;
  GateParam gate;
};

struct BlockPosition {
  int stack = 0;
  std::string position;  // "stem", "encoder" or "bottleneck"
  int level = 0;         // resolution level, 0 = finest within the unit

  std::string id() const;
  bool operator==(const BlockPosition&) const = default;
};

struct AlphaRecord {
  BlockPosition where;
  std::vector<double> alpha;
};

// Columns: stack,position,level,channel,alpha. A scalar gate reports
// channel 0 only.
void write_alpha_csv(std::ostream& os, std::span<const AlphaRecord> records);

}  // namespace sgnet
