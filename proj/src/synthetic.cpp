#include "sgnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sgnet/errors.hpp"
#include "sgnet/rng.hpp"

namespace sgnet {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kLimbHalfWidth = 1.0;   // image pixels
constexpr double kJointRadius = 1.5;     // image pixels
constexpr std::array<double, 3> kJointColor{1.0, 1.0, 1.0};
constexpr int kMaxPoseDraws = 100000;

double segment_distance(double px, double py, double ax, double ay, double bx,
                        double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Coverage of a pixel center at distance d from a shape edge of the given
// half width, with a one-pixel linear ramp.
double coverage(double d, double half_width) {
  return std::clamp(half_width + 0.5 - d, 0.0, 1.0);
}

bool pose_fits(const KeypointSet& kps, int hm) {
  for (const auto& kp : kps) {
    if (kp.x < 1.0 || kp.y < 1.0 || kp.x > hm - 2.0 || kp.y > hm - 2.0) {
      return false;
    }
  }
  return true;
}

KeypointSet draw_pose(const SyntheticSceneSpec& spec, Rng& rng) {
  const double hm = spec.image_size / 4.0;
  const double c = (hm - 1.0) / 2.0;
  KeypointSet kps(spec.keypoints);
  std::vector<double> angle(spec.keypoints, 0.0);
  kps[kNeckJoint] = {c + uniform(rng, -0.2, 0.2) * hm,
                     c + uniform(rng, -0.1, 0.25) * hm, true};
  const double ha = (-90.0 + uniform(rng, -25.0, 25.0)) * kDeg;
  const double hl = uniform(rng, 0.19, 0.28) * hm;
  kps[kHeadJoint] = {kps[kNeckJoint].x + hl * std::cos(ha),
                     kps[kNeckJoint].y + hl * std::sin(ha), true};
  // Long chains get shorter segments so the whole figure can fit the frame.
  const int deeper = (spec.keypoints - 2) / 2 - 1;
  const double shrink = deeper > 2 ? 2.0 / deeper : 1.0;
  for (int j = 2; j < spec.keypoints; ++j) {
    const bool left = j % 2 == 0;
    const int p = parent_joint(j);
    double a, len;
    if (p == kNeckJoint) {
      a = ((left ? 180.0 : 0.0) + uniform(rng, -30.0, 30.0)) * kDeg;
      len = uniform(rng, 0.19, 0.31) * hm;
    } else {
      a = angle[p] + uniform(rng, -40.0, 40.0) * kDeg;
      len = uniform(rng, 0.15, 0.25) * hm * shrink;
    }
    angle[j] = a;
    kps[j] = {kps[p].x + len * std::cos(a), kps[p].y + len * std::sin(a), true};
  }
  return kps;
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (num_samples < 0) throw ConfigError("num_samples must be >= 0");
  if (image_size < 64 || image_size % 64 != 0) {
    throw ConfigError("image_size must be a positive multiple of 64");
  }
  if (keypoints < 4 || keypoints > 16 || keypoints % 2 != 0) {
    throw ConfigError("keypoints must be even and within 4..16, got " +
                      std::to_string(keypoints));
  }
  if (noise < 0.0 || noise > 0.5) throw ConfigError("noise must be in [0, 0.5]");
}

int parent_joint(int joint) {
  if (joint == kHeadJoint) return kNeckJoint;
  if (joint == kNeckJoint) return -1;
  return joint < 4 ? kNeckJoint : joint - 2;
}

std::vector<std::pair<int, int>> flip_pairs(int keypoints) {
  std::vector<std::pair<int, int>> out;
  for (int j = 2; j + 1 < keypoints; j += 2) out.push_back({j, j + 1});
  return out;
}

double head_segment_length(const KeypointSet& kps) {
  const double dx = kps[kHeadJoint].x - kps[kNeckJoint].x;
  const double dy = kps[kHeadJoint].y - kps[kNeckJoint].y;
  return std::sqrt(dx * dx + dy * dy);
}

std::array<double, 3> limb_color(int joint) {
  if (joint == kHeadJoint) return {1.0, 0.25, 0.25};
  return {0.25, 0.9, 0.35};
}

Sample generate_sample(const SyntheticSceneSpec& spec, int index) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(index)}));
  const int hm = spec.image_size / 4;
  KeypointSet kps = draw_pose(spec, rng);
  for (int tries = 1; !pose_fits(kps, hm); ++tries) {
    if (tries == kMaxPoseDraws) {
      throw ConfigError("synthetic pose for sample " + std::to_string(index) +
                           " did not fit the frame");
    }
    kps = draw_pose(spec, rng);
  }

  const int S = spec.image_size;
  Tensor image(Shape{1, 3, S, S});
  auto d = image.mutable_data();
  std::array<double, 3> bg;
  for (double& b : bg) b = uniform(rng, 0.0, 0.3);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < S * S; ++i) {
      d[c * S * S + i] =
          std::clamp(bg[c] + uniform(rng, -spec.noise, spec.noise), 0.0, 1.0);
    }
  }

  auto blend = [&](int i, int j, double a, const std::array<double, 3>& col) {
    if (a <= 0.0) return;
    for (int c = 0; c < 3; ++c) {
      double& v = d[(c * S + i) * S + j];
      v = v * (1.0 - a) + col[c] * a;
    }
  };
  for (int j = 0; j < spec.keypoints; ++j) {
    const int p = parent_joint(j);
    if (p < 0) continue;
    const double ax = heatmap_to_image(kps[p].x, 4);
    const double ay = heatmap_to_image(kps[p].y, 4);
    const double bx = heatmap_to_image(kps[j].x, 4);
    const double by = heatmap_to_image(kps[j].y, 4);
    const auto col = limb_color(j);
    for (int i = 0; i < S; ++i) {
      for (int k = 0; k < S; ++k) {
        blend(i, k, coverage(segment_distance(k, i, ax, ay, bx, by),
                             kLimbHalfWidth), col);
      }
    }
  }
  for (const auto& kp : kps) {
    const double x = heatmap_to_image(kp.x, 4);
    const double y = heatmap_to_image(kp.y, 4);
    for (int i = 0; i < S; ++i) {
      for (int k = 0; k < S; ++k) {
        const double r = std::hypot(k - x, i - y);
        blend(i, k, coverage(r, kJointRadius), kJointColor);
      }
    }
  }
  return {image, kps};
}

std::vector<Sample> generate_samples(const SyntheticSceneSpec& spec) {
  spec.validate();
  std::vector<Sample> out;
  out.reserve(spec.num_samples);
  for (int i = 0; i < spec.num_samples; ++i) {
    out.push_back(generate_sample(spec, i));
  }
  return out;
}

}  // namespace sgnet
