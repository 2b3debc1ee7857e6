#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acim/tensor.hpp"

namespace acim {

struct Dataset {
  Tensor features;  // [N, F]
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_dim() const { return features.dim(1); }
  Dataset slice(std::size_t begin, std::size_t end) const;
};

// Isotropic Gaussian blobs around class centers drawn from N(0, separation²).
struct BlobSpec {
  int classes = 4;
  int dim = 16;
  int per_class = 100;
  double separation = 1.0;
  double spread = 1.0;
  std::uint64_t seed = 1;         // class centers
  std::uint64_t sample_seed = 0;  // draws around the centers (train/test splits)
};

Dataset make_blobs(const BlobSpec& spec);

// Reads an IDX3 unsigned-byte image file and its IDX1 label file. Pixels are
// scaled to [0,1] and flattened row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace acim
