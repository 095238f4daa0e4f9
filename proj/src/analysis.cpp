#include "sgnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sgnet/errors.hpp"
#include "sgnet/format.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {

double Histogram::bin_low(int i) const {
  return -range + 2.0 * range * i / static_cast<double>(counts.size());
}

double Histogram::bin_high(int i) const { return bin_low(i + 1); }

std::int64_t Histogram::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::int64_t Histogram::mass_within(double band) const {
  std::int64_t t = 0;
  for (int i = 0; i < static_cast<int>(counts.size()); ++i) {
    if (bin_low(i) >= -band && bin_high(i) <= band) t += counts[i];
  }
  return t;
}

double symmetric_range(std::span<const double> values) {
  double r = 0.0;
  for (double v : values) r = std::max(r, std::abs(v));
  return r > 0.0 ? r : 1.0;
}

Histogram make_histogram(std::string id, std::span<const double> values,
                         double range, int bins) {
  if (bins < 1) throw UsageError("histogram needs at least one bin");
  if (!(range > 0.0)) throw UsageError("histogram range must be positive");
  Histogram h{std::move(id), range, std::vector<std::int64_t>(bins, 0)};
  for (double v : values) {
    int i = static_cast<int>(std::floor((v + range) / (2.0 * range) * bins));
    h.counts[std::clamp(i, 0, bins - 1)]++;
  }
  return h;
}

double fraction_within(std::span<const double> values, double band) {
  if (values.empty()) return 0.0;
  std::size_t n = 0;
  for (double v : values) n += std::abs(v) <= band;
  return static_cast<double>(n) / values.size();
}

std::vector<BlockFeatureStats> feature_stats(Network& net,
                                             const Tensor& probe_batch,
                                             double band, int bins) {
  NoGradGuard guard;
  ForwardTrace trace;
  trace.capture_blocks = true;
  net.forward(probe_batch, Mode::kEval, &trace);
  std::vector<BlockFeatureStats> out;
  for (const auto& [where, bt] : trace.blocks) {
    double range = 0.0;
    for (const Tensor* t : {&bt.branch, &bt.skip_pre, &bt.skip_post, &bt.out}) {
      range = std::max(range, symmetric_range(t->data()));
    }
    const std::string id = where.id();
    BlockFeatureStats s;
    s.where = where;
    s.branch = make_histogram(id + "/branch", bt.branch.data(), range, bins);
    s.skip_pre = make_histogram(id + "/skip_pre", bt.skip_pre.data(), range, bins);
    s.skip_post = make_histogram(id + "/skip_post", bt.skip_post.data(), range, bins);
    s.out = make_histogram(id + "/out", bt.out.data(), range, bins);
    s.pre_within = fraction_within(bt.skip_pre.data(), band);
    s.post_within = fraction_within(bt.skip_post.data(), band);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Histogram> flatten(std::span<const BlockFeatureStats> stats) {
  std::vector<Histogram> out;
  for (const auto& s : stats) {
    out.push_back(s.branch);
    out.push_back(s.skip_pre);
    out.push_back(s.skip_post);
    out.push_back(s.out);
  }
  return out;
}

void write_histogram_csv(std::ostream& os, std::span<const Histogram> hists) {
  os << "block_id,bin_low,bin_high,count\n";
  for (const auto& h : hists) {
    for (int i = 0; i < static_cast<int>(h.counts.size()); ++i) {
      os << h.id << ',' << fmt_double(h.bin_low(i)) << ','
         << fmt_double(h.bin_high(i)) << ',' << h.counts[i] << '\n';
    }
  }
}

std::vector<double> all_alphas(std::span<const AlphaRecord> records) {
  std::vector<double> v;
  for (const auto& r : records) v.insert(v.end(), r.alpha.begin(), r.alpha.end());
  return v;
}

Histogram alpha_histogram(std::span<const AlphaRecord> records, int bins) {
  const auto v = all_alphas(records);
  return make_histogram("alpha", v, symmetric_range(v), bins);
}

}  // namespace sgnet
