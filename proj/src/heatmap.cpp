#include "sgnet/heatmap.hpp"

#include <cmath>

#include "sgnet/errors.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {

bool in_bounds(const Keypoint& kp, int size) {
  return kp.x >= 0.0 && kp.y >= 0.0 && kp.x <= size - 1 && kp.y <= size - 1;
}

Tensor render_gt_heatmaps(const KeypointSet& keypoints, int size,
                          double sigma) {
  const int k = static_cast<int>(keypoints.size());
  Tensor out(Shape{1, k, size, size});
  auto d = out.mutable_data();
  const double denom = 2.0 * sigma * sigma;
  for (int n = 0; n < k; ++n) {
    const Keypoint& kp = keypoints[n];
    if (!kp.visible) continue;
    for (int i = 0; i < size; ++i) {
      const double dy = i - kp.y;
      for (int j = 0; j < size; ++j) {
        const double dx = j - kp.x;
        d[offset(out.shape(), 0, n, i, j)] = std::exp(-(dx * dx + dy * dy) / denom);
      }
    }
  }
  return out;
}

Tensor mse_heatmap_loss(const Tensor& pred, const Tensor& gt) {
  if (!(pred.shape() == gt.shape())) {
    throw UsageError("mse_heatmap_loss: prediction " + pred.shape().str() +
                     " vs target " + gt.shape().str());
  }
  const double maps = static_cast<double>(pred.shape().n) * pred.shape().c;
  auto p = pred.data();
  auto g = gt.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - g[i];
    acc += d * d;
  }
  Tensor out = Tensor::scalar(acc / maps);
  Tape::current().record(
      "mse_heatmap_loss", {pred, gt}, out,
      [pred, gt, maps](std::span<const double> grad) {
        const double k = 2.0 * grad[0] / maps;
        auto p = pred.data();
        auto g = gt.data();
        if (Tensor ps = pred; ps.requires_grad()) {
          auto dp = ps.grad_buffer();
          for (std::size_t i = 0; i < p.size(); ++i) dp[i] += k * (p[i] - g[i]);
        }
        if (Tensor gs = gt; gs.requires_grad()) {
          auto dg = gs.grad_buffer();
          for (std::size_t i = 0; i < p.size(); ++i) dg[i] -= k * (p[i] - g[i]);
        }
      });
  return out;
}

}  // namespace sgnet
