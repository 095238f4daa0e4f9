#include "sgnet/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "sgnet/errors.hpp"
#include "sgnet/sgt1.hpp"

namespace fs = std::filesystem;

namespace sgnet {

void write_dataset(const fs::path& dir, const std::vector<Sample>& samples) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string());
  std::ofstream ann(dir / "annotations.jsonl", std::ios::binary);
  if (!ann) throw IoError("cannot write " + (dir / "annotations.jsonl").string());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "images/%06zu.sgt", i);
    sgt1::save(dir / name, samples[i].image, 3);
    nlohmann::json rec;
    rec["image"] = name;
    auto kps = nlohmann::json::array();
    for (const auto& kp : samples[i].keypoints) {
      kps.push_back({kp.x, kp.y, kp.visible ? 1 : 0});
    }
    rec["keypoints"] = kps;
    ann << rec.dump() << '\n';
  }
  if (!ann) throw IoError("write failed: " + (dir / "annotations.jsonl").string());
}

std::vector<Sample> read_dataset(const fs::path& dir) {
  const auto path = dir / "annotations.jsonl";
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Sample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Sample s;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto image = rec.at("image").get<std::string>();
      for (const auto& kp : rec.at("keypoints")) {
        if (kp.size() != 3) throw ParseError("keypoint needs [x,y,v]", lineno);
        s.keypoints.push_back({kp[0].get<double>(), kp[1].get<double>(),
                               kp[2].get<int>() != 0});
      }
      s.image = sgt1::load(dir / image);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) +
                           ": " + e.what(),
                       lineno);
    }
    const auto& sh = s.image.shape();
    if (sh.n != 1 || sh.c != 3 || sh.h != sh.w) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) +
                           ": image must be (3,S,S), got " + sh.str(),
                       lineno);
    }
    if (!out.empty() && (sh != out.front().image.shape() ||
                         s.keypoints.size() != out.front().keypoints.size())) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) +
                           ": inconsistent image size or keypoint count",
                       lineno);
    }
    out.push_back(std::move(s));
  }
  return out;
}

Tensor stack_images(const std::vector<const Sample*>& samples) {
  if (samples.empty()) throw UsageError("stack_images: empty batch");
  const Shape one = samples.front()->image.shape();
  Tensor out(Shape{static_cast<int>(samples.size()), one.c, one.h, one.w});
  auto d = out.mutable_data();
  const std::size_t n = one.numel();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto src = samples[i]->image.data();
    if (src.size() != n) throw UsageError("stack_images: mixed image sizes");
    std::copy(src.begin(), src.end(), d.begin() + i * n);
  }
  return out;
}

}  // namespace sgnet
