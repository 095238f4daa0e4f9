#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sgnet {

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::vector<std::string> config_paths;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  std::string version;
  int threads = 1;
  std::string status = "ok";

  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

std::string utc_timestamp();
std::string version_string();

}  // namespace sgnet
