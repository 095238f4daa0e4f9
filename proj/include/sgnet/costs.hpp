#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgnet/config.hpp"

namespace sgnet {

struct ModuleCost {
  std::string module;
  std::int64_t params = 0;
  std::int64_t macs = 0;  // conv multiply-accumulates for the whole batch
};

enum class FlopConvention { kMacIsOne, kMacIsTwo };

struct CostReport {
  NetworkConfig config;
  int input_size = 0;
  int batch = 1;
  std::vector<ModuleCost> modules;

  std::int64_t total_params() const;
  std::int64_t total_macs() const;
  std::int64_t flops(FlopConvention conv) const;
  static std::int64_t flops(const ModuleCost& m, FlopConvention conv);
};

// Closed-form tally from the config alone (no network is built). FLOPs count
// convolutions only: params_without_bias * out_h * out_w * batch MACs.
CostReport count_costs(const NetworkConfig& cfg, int batch = 1,
                       std::optional<int> input_size = std::nullopt);

// Columns: module,params,flops_mac1,flops_mac2; last row "total".
void write_cost_csv(std::ostream& os, const CostReport& report);

struct CostRow {
  CostReport report;
  std::optional<double> pckh;
};

// Aligned text table: # parameters, # stacks, width, FLOPs under both
// conventions (x1e9) and a PCKh column ("-" when not measured).
std::string format_cost_table(std::span<const CostRow> rows);

// Builds every (width, stacks) pair and sorts rows by parameter count (then
// FLOPs).
std::vector<CostRow> sweep_costs(const NetworkConfig& base,
                                 std::span<const int> widths,
                                 std::span<const int> stacks, int input_size);

}  // namespace sgnet
