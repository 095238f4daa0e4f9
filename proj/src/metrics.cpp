#include "sgnet/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "sgnet/dataset.hpp"
#include "sgnet/errors.hpp"
#include "sgnet/format.hpp"
#include "sgnet/network.hpp"
#include "sgnet/synthetic.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {

KeypointSet decode_heatmaps(const Tensor& heatmaps, int n,
                            const DecodeOptions& opt) {
  const Shape s = heatmaps.shape();
  if (n < 0 || n >= s.n) throw UsageError("decode_heatmaps: sample out of range");
  const auto d = heatmaps.data();
  KeypointSet out(s.c);
  for (int k = 0; k < s.c; ++k) {
    const double* m = d.data() + offset(s, n, k, 0, 0);
    int bi = 0, bj = 0;
    double best = m[0];
    for (int i = 0; i < s.h; ++i) {
      for (int j = 0; j < s.w; ++j) {
        if (m[i * s.w + j] > best) {
          best = m[i * s.w + j];
          bi = i;
          bj = j;
        }
      }
    }
    double x = bj, y = bi;
    if (opt.quarter_offset) {
      if (bj > 0 && bj + 1 < s.w) {
        const double l = m[bi * s.w + bj - 1], r = m[bi * s.w + bj + 1];
        if (r > l) x += 0.25;
        if (l > r) x -= 0.25;
      }
      if (bi > 0 && bi + 1 < s.h) {
        const double u = m[(bi - 1) * s.w + bj], dn = m[(bi + 1) * s.w + bj];
        if (dn > u) y += 0.25;
        if (u > dn) y -= 0.25;
      }
    }
    out[k] = {x, y, true};
  }
  return out;
}

std::vector<KeypointSet> decode_batch(const Tensor& heatmaps,
                                      const DecodeOptions& opt) {
  std::vector<KeypointSet> out;
  for (int n = 0; n < heatmaps.shape().n; ++n) {
    out.push_back(decode_heatmaps(heatmaps, n, opt));
  }
  return out;
}

int MetricReport::total_visible() const {
  int t = 0;
  for (int v : visible) t += v;
  return t;
}

MetricReport pckh(std::span<const KeypointSet> pred,
                  std::span<const KeypointSet> gt,
                  std::span<const double> normalizer, double tau) {
  if (pred.size() != gt.size() || gt.size() != normalizer.size()) {
    throw UsageError("pckh: prediction, ground truth and normalizer counts differ");
  }
  if (!(tau > 0.0)) throw UsageError("pckh: threshold must be positive");
  MetricReport r;
  r.threshold = tau;
  const std::size_t K = gt.empty() ? 0 : gt.front().size();
  r.visible.assign(K, 0);
  r.correct.assign(K, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(normalizer[i] > 0.0) || !std::isfinite(normalizer[i])) {
      throw UsageError("pckh: normalizer of sample " + std::to_string(i) +
                       " must be positive, got " + fmt_double(normalizer[i]));
    }
    if (gt[i].size() != K || pred[i].size() != K) {
      throw UsageError("pckh: keypoint count mismatch at sample " +
                       std::to_string(i));
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (!gt[i][k].visible) continue;
      ++r.visible[k];
      const double dx = pred[i][k].x - gt[i][k].x;
      const double dy = pred[i][k].y - gt[i][k].y;
      if (std::sqrt(dx * dx + dy * dy) <= tau * normalizer[i]) ++r.correct[k];
    }
  }
  int vis = 0, cor = 0;
  for (std::size_t k = 0; k < K; ++k) {
    r.per_keypoint.push_back(
        r.visible[k] ? static_cast<double>(r.correct[k]) / r.visible[k]
                     : std::numeric_limits<double>::quiet_NaN());
    vis += r.visible[k];
    cor += r.correct[k];
  }
  r.mean = vis ? static_cast<double>(cor) / vis : 0.0;
  return r;
}

MetricReport evaluate(Network& net, std::span<const Sample> samples, double tau,
                      int batch_size, const DecodeOptions& opt) {
  NoGradGuard guard;
  std::vector<KeypointSet> pred, gt;
  std::vector<double> norm;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const Sample*> batch;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      batch.push_back(&samples[i]);
      gt.push_back(samples[i].keypoints);
      norm.push_back(head_segment_length(samples[i].keypoints));
    }
    const auto out = net.forward(stack_images(batch), Mode::kEval);
    for (auto& kp : decode_batch(out.back(), opt)) pred.push_back(std::move(kp));
  }
  return pckh(pred, gt, norm, tau);
}

void write_metric_csv(std::ostream& os, const MetricReport& r) {
  os << "keypoint,visible,correct,pckh\n";
  for (std::size_t k = 0; k < r.per_keypoint.size(); ++k) {
    os << k << ',' << r.visible[k] << ',' << r.correct[k] << ','
       << fmt_double(r.per_keypoint[k]) << '\n';
  }
  int cor = 0;
  for (int c : r.correct) cor += c;
  os << "mean," << r.total_visible() << ',' << cor << ',' << fmt_double(r.mean)
     << '\n';
}

}  // namespace sgnet
