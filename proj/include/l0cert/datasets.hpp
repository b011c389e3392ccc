#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "l0cert/ablation.hpp"

namespace l0cert {

enum class Split { kTrain, kTest };

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  Split split = Split::kTrain;
  int num_classes = 10;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  void validate() const;
};

/// Reads an IDX image/label file pair (MNIST layout). Files ending in ".gz"
/// are decompressed on the fly. Bytes are scaled to [0, 1] by 1/255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split = Split::kTrain,
                 int num_classes = 10);

/// Writes single-channel 8-bit IDX files; pixel values are rounded to /255.
void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

Dataset first_n(const Dataset& dataset, std::size_t n);
Dataset random_n(const Dataset& dataset, std::size_t n, std::uint64_t seed);

/// Per-channel mean intensity over every pixel of every image.
std::vector<float> mean_pixel(const Dataset& dataset);

/// Labels an image given as symbols in [0, s_size).
using LabelRule = std::function<int(std::span<const int> symbols)>;

/// Sum of symbols modulo 2.
LabelRule parity_rule();

/// All s_size^d images over a 1 x d grid (symbol s encoded as s / (s_size - 1)),
/// labelled by `rule`, in lexicographic order. When `size` is given, a seeded
/// random subset of that many distinct images is returned instead.
Dataset synthetic_lookup_dataset(int d, int s_size, const LabelRule& rule, int num_classes,
                                 std::optional<std::size_t> size = std::nullopt,
                                 std::uint64_t seed = 0);

}  // namespace l0cert
