#include "sgnet/config.hpp"

#include <fstream>
#include <sstream>

#include "sgnet/errors.hpp"
#include "sgnet/format.hpp"

namespace sgnet {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile kv;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line) +
                       ": expected key=value, got '" + body + "'", line);
    }
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty()) {
      throw ParseError("line " + std::to_string(line) + ": empty key", line);
    }
    if (kv.consumed_.count(e.key)) {
      throw ParseError("line " + std::to_string(line) + ": duplicate key '" +
                       e.key + "'", line);
    }
    kv.consumed_[e.key] = false;
    kv.entries_.push_back(std::move(e));
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

bool KeyValueFile::has(const std::string& key) const {
  return consumed_.count(key) > 0;
}

int KeyValueFile::line_of(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return e.line;
  }
  return 0;
}

std::optional<std::string> KeyValueFile::take(const std::string& key) {
  for (const auto& e : entries_) {
    if (e.key == key) {
      consumed_[key] = true;
      return e.value;
    }
  }
  return std::nullopt;
}

namespace {
[[noreturn]] void bad_value(const KeyValueFile& kv, const std::string& key,
                            const std::string& value, const char* expected) {
  const int line = kv.line_of(key);
  throw ParseError("line " + std::to_string(line) + ": " + key + "='" +
                   value + "' is not " + expected, line);
}
}  // namespace

std::string KeyValueFile::take_string(const std::string& key,
                                      std::string fallback) {
  auto v = take(key);
  return v ? *v : std::move(fallback);
}

int KeyValueFile::take_int(const std::string& key, int fallback) {
  auto v = take(key);
  if (!v) return fallback;
  int out;
  if (!parse_int(*v, out)) bad_value(*this, key, *v, "an integer");
  return out;
}

std::uint64_t KeyValueFile::take_u64(const std::string& key,
                                     std::uint64_t fallback) {
  auto v = take(key);
  if (!v) return fallback;
  std::uint64_t out;
  if (!parse_int(*v, out)) bad_value(*this, key, *v, "an unsigned integer");
  return out;
}

double KeyValueFile::take_double(const std::string& key, double fallback) {
  auto v = take(key);
  if (!v) return fallback;
  double out;
  if (!parse_double(*v, out)) bad_value(*this, key, *v, "a number");
  return out;
}

std::vector<int> KeyValueFile::take_int_list(const std::string& key,
                                             std::vector<int> fallback) {
  auto v = take(key);
  if (!v) return fallback;
  std::vector<int> out;
  if (v->empty()) return out;
  std::istringstream is(*v);
  std::string item;
  while (std::getline(is, item, ',')) {
    int x;
    if (!parse_int(trim(item), x)) {
      bad_value(*this, key, *v, "a comma-separated integer list");
    }
    out.push_back(x);
  }
  return out;
}

void KeyValueFile::require_all_consumed() const {
  for (const auto& e : entries_) {
    if (!consumed_.at(e.key)) {
      throw ParseError("line " + std::to_string(e.line) + ": unknown key '" +
                       e.key + "'", e.line);
    }
  }
}

Aggregation parse_aggregation(const std::string& text) {
  if (text == "sum") return Aggregation::kSum;
  if (text == "concat_conv") return Aggregation::kConcatConv;
  if (text == "concat_grouped") return Aggregation::kConcatGrouped;
  throw ConfigError("unknown aggregation '" + text +
                    "' (expected sum, concat_conv or concat_grouped)");
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kSum:
      return "sum";
    case Aggregation::kConcatConv:
      return "concat_conv";
    case Aggregation::kConcatGrouped:
      return "concat_grouped";
  }
  return {};
}

void NetworkConfig::validate() const {
  if (num_stacks < 1) {
    throw ConfigError("num_stacks must be >= 1, got " +
                      std::to_string(num_stacks));
  }
  if (width < 4 || width % 4 != 0) {
    throw ConfigError("width must be a positive multiple of 4, got " +
                      std::to_string(width));
  }
  if (keypoints < 1) {
    throw ConfigError("keypoints must be >= 1, got " +
                      std::to_string(keypoints));
  }
  if (input_size < 64 || input_size % 64 != 0) {
    throw ConfigError("input_size must be a positive multiple of 64 "
                      "(heatmap_size = input_size/4 must halve 4 times), got " +
                      std::to_string(input_size));
  }
}

NetworkConfig read_network_config(KeyValueFile& kv) {
  NetworkConfig cfg;
  cfg.num_stacks = kv.take_int("num_stacks", cfg.num_stacks);
  cfg.width = kv.take_int("width", cfg.width);
  cfg.keypoints = kv.take_int("keypoints", cfg.keypoints);
  if (auto a = kv.take("aggregation")) {
    try {
      cfg.aggregation = parse_aggregation(*a);
    } catch (const ConfigError& e) {
      const int line = kv.line_of("aggregation");
      throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
    }
  }
  if (auto g = kv.take("gate_mode")) {
    try {
      cfg.gate = GateSpec::parse(*g);
    } catch (const ConfigError& e) {
      const int line = kv.line_of("gate_mode");
      throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
    }
  }
  cfg.input_size = kv.take_int("input_size", cfg.input_size);
  cfg.seed = kv.take_u64("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string format_network_config(const NetworkConfig& cfg) {
  std::ostringstream os;
  os << "num_stacks=" << cfg.num_stacks << '\n'
     << "width=" << cfg.width << '\n'
     << "keypoints=" << cfg.keypoints << '\n'
     << "aggregation=" << to_string(cfg.aggregation) << '\n'
     << "gate_mode=" << cfg.gate.str() << '\n'
     << "input_size=" << cfg.input_size << '\n'
     << "seed=" << cfg.seed << '\n';
  return os.str();
}

}  // namespace sgnet
