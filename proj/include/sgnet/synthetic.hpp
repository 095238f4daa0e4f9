#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "sgnet/heatmap.hpp"

namespace sgnet {

// Joint layout of the stick figure: 0 = head tip, 1 = neck (root); the rest
// come in (left, right) pairs forming two limb chains hanging off the neck.
// Left limbs point toward the image left, right limbs toward the right.
inline constexpr int kHeadJoint = 0;
inline constexpr int kNeckJoint = 1;

struct SyntheticSceneSpec {
  int num_samples = 200;
  int image_size = 64;
  int keypoints = 4;  // even, 4..16
  double noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

int parent_joint(int joint);
std::vector<std::pair<int, int>> flip_pairs(int keypoints);

// Distance between head tip and neck: the PCKh normalizer of a sample.
double head_segment_length(const KeypointSet& keypoints);

// Limb color (RGB) of the segment ending at `joint`.
std::array<double, 3> limb_color(int joint);

// Sample `index` of the scene; depends only on (spec, index).
Sample generate_sample(const SyntheticSceneSpec& spec, int index);
std::vector<Sample> generate_samples(const SyntheticSceneSpec& spec);

// Heatmap coordinate -> image pixel coordinate (pixel centers aligned).
inline double heatmap_to_image(double v, int stride) {
  return (v + 0.5) * stride - 0.5;
}

}  // namespace sgnet
