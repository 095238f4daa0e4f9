#include "sgnet/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "sgnet/errors.hpp"
#include "sgnet/sgt1.hpp"

namespace fs = std::filesystem;

namespace sgnet {
namespace {

std::vector<std::pair<std::string, Tensor>> named_tensors(const Network& net) {
  const ParamList pl = net.parameters();
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& p : pl.params) out.push_back({p.name, p.tensor});
  for (const auto& b : pl.buffers) out.push_back({b.name, b.tensor});
  return out;
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Network& net) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  {
    std::ofstream cfg(dir / "config.cfg", std::ios::binary);
    if (!cfg) throw IoError("cannot write " + (dir / "config.cfg").string());
    cfg << format_network_config(net.config());
  }
  std::ofstream weights(dir / "weights.sgt", std::ios::binary);
  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!weights || !manifest) throw IoError("cannot write into " + dir.string());
  std::size_t offset = 0;
  for (const auto& [name, t] : named_tensors(net)) {
    manifest << name << ' ' << offset << '\n';
    sgt1::write(weights, t, 4);
    offset += sgt1::encoded_size(t, 4);
  }
  if (!weights || !manifest) throw IoError("write failed in " + dir.string());
}

void load_weights(Network& net, const fs::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot read " + (dir / "manifest.txt").string());
  std::map<std::string, std::size_t> offsets;
  std::string line;
  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    std::size_t off = 0;
    if (!(ls >> name >> off)) {
      throw ParseError((dir / "manifest.txt").string() + ": line " +
                           std::to_string(lineno) + ": expected 'name offset'",
                       lineno);
    }
    offsets[name] = off;
  }
  std::ifstream weights(dir / "weights.sgt", std::ios::binary);
  if (!weights) throw IoError("cannot read " + (dir / "weights.sgt").string());

  std::vector<std::string> missing;
  std::vector<std::pair<Tensor, Tensor>> loads;
  for (const auto& [name, t] : named_tensors(net)) {
    auto it = offsets.find(name);
    if (it == offsets.end()) {
      missing.push_back(name);
      continue;
    }
    weights.clear();
    weights.seekg(static_cast<std::streamoff>(it->second));
    Tensor src = sgt1::read(weights);
    if (src.shape() != t.shape()) {
      missing.push_back(name + " (shape " + src.shape().str() + ", expected " +
                        t.shape().str() + ")");
      continue;
    }
    loads.push_back({t, src});
  }
  if (!missing.empty()) {
    std::string msg = "checkpoint " + dir.string() + " does not match network; missing tensors:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw StructuralError(msg);
  }
  for (auto& [dst, src] : loads) {
    auto d = dst.mutable_data();
    const auto s = src.data();
    std::copy(s.begin(), s.end(), d.begin());
  }
}

Network load_checkpoint(const fs::path& dir) {
  auto kv = KeyValueFile::load(dir / "config.cfg");
  const NetworkConfig cfg = read_network_config(kv);
  kv.require_all_consumed();
  Network net(cfg);
  load_weights(net, dir);
  return net;
}

}  // namespace sgnet
