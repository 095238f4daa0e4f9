#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sgnet/heatmap.hpp"

namespace sgnet {

class Network;

struct DecodeOptions {
  // Shift a quarter pixel toward the larger of the two neighbors per axis.
  bool quarter_offset = true;
};

// Argmax per keypoint map of sample `n` in an (N,K,H,W) tensor. Ties go to
// the smallest row, then column. Decoded keypoints are marked visible.
KeypointSet decode_heatmaps(const Tensor& heatmaps, int n,
                            const DecodeOptions& opt = {});
std::vector<KeypointSet> decode_batch(const Tensor& heatmaps,
                                      const DecodeOptions& opt = {});

inline constexpr double kPckhThreshold = 0.5;

struct MetricReport {
  double threshold = kPckhThreshold;
  std::vector<double> per_keypoint;  // NaN where no keypoint was visible
  std::vector<int> visible;
  std::vector<int> correct;
  double mean = 0.0;  // correct / visible over all keypoints
  int total_visible() const;
};

// A visible keypoint is correct iff |pred - gt| <= tau * normalizer.
MetricReport pckh(std::span<const KeypointSet> pred,
                  std::span<const KeypointSet> gt,
                  std::span<const double> normalizer,
                  double tau = kPckhThreshold);

// Eval-mode inference on the last stack, with the head segment of each
// sample as normalizer.
MetricReport evaluate(Network& net, std::span<const Sample> samples,
                      double tau = kPckhThreshold, int batch_size = 16,
                      const DecodeOptions& opt = {});

// Columns: keypoint,visible,correct,pckh; a final "mean" row.
void write_metric_csv(std::ostream& os, const MetricReport& report);

}  // namespace sgnet
