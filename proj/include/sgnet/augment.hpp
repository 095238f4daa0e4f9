#pragma once

#include <array>
#include <utility>
#include <vector>

#include "sgnet/heatmap.hpp"
#include "sgnet/rng.hpp"

namespace sgnet {

struct AugmentConfig {
  double max_rotation_deg = 30.0;
  double min_scale = 0.75;
  double max_scale = 1.25;
  double flip_probability = 0.5;
  // Per-channel multiplicative factor drawn from [1-s, 1+s].
  double color_jitter = 0.2;
  // Keypoint index pairs exchanged on horizontal flip.
  std::vector<std::pair<int, int>> flip_pairs;
};

// One concrete draw.
struct AugmentParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  bool flip = false;
  std::array<double, 3> color{1.0, 1.0, 1.0};

  static AugmentParams identity() { return {}; }
};

// Forward map about the image center: p' = R(theta) * s * F * (p - c) + c,
// with F the optional horizontal mirror. Works in any pixel-center frame
// whose center is (size-1)/2.
struct Affine2D {
  double a = 1, b = 0, c = 0, d = 1;  // linear part [[a b] [c d]]
  double center = 0.0;

  static Affine2D from(const AugmentParams& p, int size);
  std::pair<double, double> apply(double x, double y) const;
  std::pair<double, double> inverse(double x, double y) const;
};

AugmentParams draw_augment(const AugmentConfig& cfg, Rng& rng);

// Warps image and keypoints with the same transform. Keypoints leaving the
// heatmap bounds become invisible (coordinates are not clamped).
Sample augment_with(const Sample& sample, const AugmentParams& params,
                    const AugmentConfig& cfg, int heatmap_size);
Sample augment(const Sample& sample, Rng& rng, const AugmentConfig& cfg,
               int heatmap_size);

// Bilinear warp of every channel of a (1,C,S,S) tensor; samples outside the
// source read as zero.
Tensor warp_bilinear(const Tensor& src, const Affine2D& map);

}  // namespace sgnet
