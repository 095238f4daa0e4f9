#include "sgnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sgnet {

Affine2D Affine2D::from(const AugmentParams& p, int size) {
  const double t = p.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(t) * p.scale;
  const double sn = std::sin(t) * p.scale;
  const double f = p.flip ? -1.0 : 1.0;
  // R * s * diag(f, 1)
  return {cs * f, -sn, sn * f, cs, (size - 1) / 2.0};
}

std::pair<double, double> Affine2D::apply(double x, double y) const {
  const double u = x - center, v = y - center;
  return {a * u + b * v + center, c * u + d * v + center};
}

std::pair<double, double> Affine2D::inverse(double x, double y) const {
  const double det = a * d - b * c;
  const double u = x - center, v = y - center;
  return {(d * u - b * v) / det + center, (-c * u + a * v) / det + center};
}

AugmentParams draw_augment(const AugmentConfig& cfg, Rng& rng) {
  AugmentParams p;
  p.rotation_deg = uniform(rng, -cfg.max_rotation_deg, cfg.max_rotation_deg);
  p.scale = uniform(rng, cfg.min_scale, cfg.max_scale);
  p.flip = uniform01(rng) < cfg.flip_probability;
  for (double& c : p.color) {
    c = uniform(rng, 1.0 - cfg.color_jitter, 1.0 + cfg.color_jitter);
  }
  return p;
}

Tensor warp_bilinear(const Tensor& src, const Affine2D& map) {
  const Shape s = src.shape();
  Tensor out(s);
  auto in = src.data();
  auto o = out.mutable_data();
  for (int i = 0; i < s.h; ++i) {
    for (int j = 0; j < s.w; ++j) {
      const auto [sx, sy] = map.inverse(j, i);
      const double fx = std::floor(sx), fy = std::floor(sy);
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double tx = sx - fx, ty = sy - fy;
      const double wts[4] = {(1 - tx) * (1 - ty), tx * (1 - ty),
                             (1 - tx) * ty, tx * ty};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          double acc = 0.0;
          for (int k = 0; k < 4; ++k) {
            if (wts[k] == 0.0) continue;
            if (xs[k] < 0 || ys[k] < 0 || xs[k] >= s.w || ys[k] >= s.h) continue;
            acc += wts[k] * in[offset(s, n, c, ys[k], xs[k])];
          }
          o[offset(s, n, c, i, j)] = acc;
        }
      }
    }
  }
  return out;
}

Sample augment_with(const Sample& sample, const AugmentParams& params,
                    const AugmentConfig& cfg, int heatmap_size) {
  const int image_size = sample.image.shape().h;
  Sample out;
  out.image = warp_bilinear(sample.image, Affine2D::from(params, image_size));
  const bool jitter = params.color != std::array<double, 3>{1.0, 1.0, 1.0};
  if (jitter) {
    auto d = out.image.mutable_data();
    const Shape s = out.image.shape();
    for (int c = 0; c < s.c; ++c) {
      const double k = params.color[c % 3];
      for (int i = 0; i < s.h; ++i) {
        for (int j = 0; j < s.w; ++j) {
          double& v = d[offset(s, 0, c, i, j)];
          v = std::clamp(v * k, 0.0, 1.0);
        }
      }
    }
  }

  const Affine2D kp_map = Affine2D::from(params, heatmap_size);
  out.keypoints = sample.keypoints;
  for (auto& kp : out.keypoints) {
    const auto [x, y] = kp_map.apply(kp.x, kp.y);
    kp.x = x;
    kp.y = y;
    if (!in_bounds(kp, heatmap_size)) kp.visible = false;
  }
  if (params.flip) {
    for (const auto& [l, r] : cfg.flip_pairs) {
      std::swap(out.keypoints[l], out.keypoints[r]);
    }
  }
  return out;
}

Sample augment(const Sample& sample, Rng& rng, const AugmentConfig& cfg,
               int heatmap_size) {
  return augment_with(sample, draw_augment(cfg, rng), cfg, heatmap_size);
}

}  // namespace sgnet
