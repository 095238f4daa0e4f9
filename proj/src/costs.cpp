#include "sgnet/costs.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "sgnet/blocks.hpp"
#include "sgnet/errors.hpp"

namespace sgnet {
namespace {

struct Tally {
  std::int64_t params = 0;
  std::int64_t macs = 0;

  void conv(std::int64_t in, std::int64_t out, int k, int groups, bool bias,
            std::int64_t out_hw, int batch) {
    const std::int64_t w = out * (in / groups) * k * k;
    params += w + (bias ? out : 0);
    macs += w * out_hw * batch;
  }
  void bn(std::int64_t c) { params += 2 * c; }
};

void block(Tally& t, int n, const GateSpec& gate, std::int64_t hw, int batch) {
  const auto widths = HierarchicalBranch::stage_widths(n);
  int in = n;
  for (int w : widths) {
    t.bn(in);
    t.conv(in, w, 3, 1, false, hw, batch);
    in = w;
  }
  switch (gate.mode) {
    case GateMode::kFixed: break;
    case GateMode::kLearnableScalar: t.params += 1; break;
    case GateMode::kLearnablePerChannel: t.params += n; break;
    case GateMode::kHardSigmoid: t.conv(n, n, 1, 1, true, hw, batch); break;
  }
}

}  // namespace

std::int64_t CostReport::total_params() const {
  std::int64_t s = 0;
  for (const auto& m : modules) s += m.params;
  return s;
}

std::int64_t CostReport::total_macs() const {
  std::int64_t s = 0;
  for (const auto& m : modules) s += m.macs;
  return s;
}

std::int64_t CostReport::flops(const ModuleCost& m, FlopConvention c) {
  return c == FlopConvention::kMacIsOne ? m.macs : 2 * m.macs;
}

std::int64_t CostReport::flops(FlopConvention c) const {
  std::int64_t s = 0;
  for (const auto& m : modules) s += flops(m, c);
  return s;
}

CostReport count_costs(const NetworkConfig& cfg_in, int batch,
                       std::optional<int> input_size) {
  NetworkConfig cfg = cfg_in;
  if (input_size) cfg.input_size = *input_size;
  cfg.validate();
  if (batch < 1) throw UsageError("count_costs: batch must be >= 1");
  CostReport r;
  r.config = cfg;
  r.input_size = cfg.input_size;
  r.batch = batch;
  const int n = cfg.width;
  auto emit = [&](std::string name, const Tally& t) {
    r.modules.push_back({std::move(name), t.params, t.macs});
  };
  auto area = [](std::int64_t side) { return side * side; };

  const std::int64_t half = (cfg.input_size + 2 * 3 - 7) / 2 + 1;
  {
    Tally t;
    t.conv(3, n, 7, 1, true, area(half), batch);
    emit("stem.conv", t);
  }
  {
    Tally t;
    block(t, n, cfg.gate, area(half), batch);
    emit("stem.block0", t);
  }
  {
    Tally t;
    block(t, n, cfg.gate, area(half / 2), batch);
    emit("stem.block1", t);
  }
  const std::int64_t hm = cfg.heatmap_size();
  const int L = NetworkConfig::kLevels;
  const int groups = cfg.aggregation == Aggregation::kConcatGrouped ? 2 : 1;
  for (int s = 0; s < cfg.num_stacks; ++s) {
    const std::string p = "stack" + std::to_string(s);
    for (int i = 1; i < L; ++i) {
      Tally t;
      block(t, n, cfg.gate, area(hm >> i), batch);
      emit(p + ".encoder" + std::to_string(i), t);
    }
    {
      Tally t;
      block(t, n, cfg.gate, area(hm >> L), batch);
      emit(p + ".bottleneck", t);
    }
    for (int i = 0; i < L; ++i) {
      Tally t;
      t.bn(n);
      t.conv(n, n, 1, 1, true, area(hm >> i), batch);
      emit(p + ".skip" + std::to_string(i), t);
    }
    for (int i = 0; i < L; ++i) {
      Tally t;
      if (cfg.aggregation != Aggregation::kSum) {
        t.conv(2 * n, n, 3, groups, false, area(hm >> i), batch);
        t.bn(n);
      }
      emit(p + ".merge" + std::to_string(i), t);
    }
    {
      Tally t;
      t.conv(n, cfg.keypoints, 1, 1, true, area(hm), batch);
      emit(p + ".head", t);
    }
    if (s + 1 < cfg.num_stacks) {
      Tally t;
      t.conv(n, n, 1, 1, true, area(hm), batch);
      t.conv(cfg.keypoints, n, 1, 1, true, area(hm), batch);
      emit("remap" + std::to_string(s), t);
    }
  }
  return r;
}

void write_cost_csv(std::ostream& os, const CostReport& r) {
  os << "module,params,flops_mac1,flops_mac2\n";
  for (const auto& m : r.modules) {
    os << m.module << ',' << m.params << ','
       << CostReport::flops(m, FlopConvention::kMacIsOne) << ','
       << CostReport::flops(m, FlopConvention::kMacIsTwo) << '\n';
  }
  os << "total," << r.total_params() << ','
     << r.flops(FlopConvention::kMacIsOne) << ','
     << r.flops(FlopConvention::kMacIsTwo) << '\n';
}

std::string format_cost_table(std::span<const CostRow> rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%14s  %8s  %6s  %16s  %16s  %6s\n",
                "# parameters", "# stacks", "width", "GFLOPs (MAC=1)",
                "GFLOPs (MAC=2)", "PCKh");
  out += buf;
  for (const auto& row : rows) {
    const auto& r = row.report;
    char pckh[16] = "-";
    if (row.pckh) std::snprintf(pckh, sizeof pckh, "%.2f", *row.pckh * 100.0);
    std::snprintf(buf, sizeof buf, "%14lld  %8d  %6d  %16.3f  %16.3f  %6s\n",
                  static_cast<long long>(r.total_params()), r.config.num_stacks,
                  r.config.width,
                  r.flops(FlopConvention::kMacIsOne) / 1e9,
                  r.flops(FlopConvention::kMacIsTwo) / 1e9, pckh);
    out += buf;
  }
  return out;
}

std::vector<CostRow> sweep_costs(const NetworkConfig& base,
                                 std::span<const int> widths,
                                 std::span<const int> stacks, int input_size) {
  std::vector<CostRow> rows;
  for (int s : stacks) {
    for (int w : widths) {
      NetworkConfig c = base;
      c.width = w;
      c.num_stacks = s;
      rows.push_back({count_costs(c, 1, input_size), std::nullopt});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CostRow& a, const CostRow& b) {
    const auto pa = a.report.total_params(), pb = b.report.total_params();
    if (pa != pb) return pa < pb;
    return a.report.total_macs() < b.report.total_macs();
  });
  return rows;
}

}  // namespace sgnet
