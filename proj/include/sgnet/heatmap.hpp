#pragma once

#include <vector>

#include "sgnet/tensor.hpp"

namespace sgnet {

// Heatmap-pixel coordinates: x is the column, y the row; integer values sit
// on pixel centers.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  bool visible = true;
  bool operator==(const Keypoint&) const = default;
};

using KeypointSet = std::vector<Keypoint>;

struct Sample {
  Tensor image;  // (1,3,S,S), values in [0,1]
  KeypointSet keypoints;
};

inline constexpr double kHeatmapSigma = 1.0;

// (1,K,size,size): an unnormalized Gaussian with peak 1 per visible
// keypoint; invisible keypoints give all-zero maps.
Tensor render_gt_heatmaps(const KeypointSet& keypoints, int size,
                          double sigma = kHeatmapSigma);

// Squared error summed over pixels, averaged over keypoint maps (and over
// the batch). Scalar, differentiable in both arguments.
Tensor mse_heatmap_loss(const Tensor& pred, const Tensor& gt);

bool in_bounds(const Keypoint& kp, int size);

}  // namespace sgnet
