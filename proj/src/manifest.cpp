#include "sgnet/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "sgnet/errors.hpp"

#ifndef SGNET_GIT_DESCRIBE
#define SGNET_GIT_DESCRIBE "unknown"
#endif

namespace sgnet {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string version_string() { return "sgnet " SGNET_GIT_DESCRIBE; }

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config_paths"] = config_paths;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["version"] = version;
  j["threads"] = threads;
  j["status"] = status;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(is);
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.config_paths = j.at("config_paths").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.out_dir = j.at("out_dir").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.threads = j.at("threads").get<int>();
    m.status = j.at("status").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return m;
}

}  // namespace sgnet
