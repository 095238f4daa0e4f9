#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sgnet/network.hpp"

namespace sgnet {

inline constexpr int kHistogramBins = 64;

// Equal-width bins over [-range, range]. Values beyond the range fall into
// the edge bins, so counts always sum to the number of values.
struct Histogram {
  std::string id;
  double range = 1.0;
  std::vector<std::int64_t> counts;

  double bin_low(int i) const;
  double bin_high(int i) const;
  std::int64_t total() const;
  // Count in bins lying entirely inside [-band, band].
  std::int64_t mass_within(double band) const;
};

Histogram make_histogram(std::string id, std::span<const double> values,
                         double range, int bins = kHistogramBins);
// Range = largest |value| (1 when every value is zero).
double symmetric_range(std::span<const double> values);

double fraction_within(std::span<const double> values, double band);

struct BlockFeatureStats {
  BlockPosition where;
  // branch, skip_pre, skip_post, out; one shared range per block.
  Histogram branch, skip_pre, skip_post, out;
  double pre_within = 0.0;   // fraction of |skip_pre| <= band
  double post_within = 0.0;  // fraction of |skip_post| <= band
};

// Runs the probe batch through the network (eval mode, no tape) and
// histograms the four block probes of every residual block.
std::vector<BlockFeatureStats> feature_stats(Network& net,
                                             const Tensor& probe_batch,
                                             double band = 0.1,
                                             int bins = kHistogramBins);

// Columns: block_id,bin_low,bin_high,count. Ids are "<block>/<probe>".
void write_histogram_csv(std::ostream& os, std::span<const Histogram> hists);
std::vector<Histogram> flatten(std::span<const BlockFeatureStats> stats);

std::vector<double> all_alphas(std::span<const AlphaRecord> records);
Histogram alpha_histogram(std::span<const AlphaRecord> records,
                          int bins = kHistogramBins);

}  // namespace sgnet
