#pragma once

#include <filesystem>
#include <vector>

#include "sgnet/heatmap.hpp"

namespace sgnet {

// Directory layout: annotations.jsonl (one {"image", "keypoints"} record per
// line, image paths relative to the directory) and images/NNNNNN.sgt holding
// rank-3 (3,S,S) SGT1 tensors.
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<Sample>& samples);
std::vector<Sample> read_dataset(const std::filesystem::path& dir);

// Stacks images into (N,3,S,S).
Tensor stack_images(const std::vector<const Sample*>& samples);

}  // namespace sgnet
