#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgnet/blocks.hpp"

namespace sgnet {

/// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
/// Keys are tracked as they are read so callers can reject unknown keys.
class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::optional<std::string> take(const std::string& key);
  int line_of(const std::string& key) const;

  std::string take_string(const std::string& key, std::string fallback);
  int take_int(const std::string& key, int fallback);
  std::uint64_t take_u64(const std::string& key, std::uint64_t fallback);
  double take_double(const std::string& key, double fallback);
  std::vector<int> take_int_list(const std::string& key,
                                 std::vector<int> fallback);

  // Throws ParseError naming the first key no reader consumed.
  void require_all_consumed() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, bool> consumed_;
};

enum class Aggregation { kSum, kConcatConv, kConcatGrouped };

Aggregation parse_aggregation(const std::string& text);
std::string to_string(Aggregation a);

struct NetworkConfig {
  int num_stacks = 2;
  int width = 32;
  int keypoints = 4;
  Aggregation aggregation = Aggregation::kConcatConv;
  GateSpec gate{GateMode::kLearnablePerChannel, 0.0};
  int input_size = 64;
  std::uint64_t seed = 0;

  // Four 2x reductions below the heatmap resolution must stay integral.
  static constexpr int kLevels = 4;

  int heatmap_size() const { return input_size / 4; }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

NetworkConfig read_network_config(KeyValueFile& kv);
std::string format_network_config(const NetworkConfig& cfg);

}  // namespace sgnet
