#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace l0cert {

/// A d-pixel image with `channels` intensities per pixel in [0, 1], stored
/// pixel-major: values[p * channels + c].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> values;

  Image() = default;
  Image(int width, int height, int channels);
  Image(int width, int height, int channels, std::vector<float> values);

  int pixel_count() const { return width * height; }
  std::span<const float> pixel(int index) const;
  std::span<float> pixel(int index);
  void validate() const;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Number of pixel positions at which two same-shape images differ in any channel.
int l0_distance(const Image& a, const Image& b);

/// k distinct pixel indices, 0-based and sorted ascending.
struct IndexSet {
  std::vector<int> indices;

  std::size_t size() const { return indices.size(); }
  friend bool operator==(const IndexSet&, const IndexSet&) = default;
};

/// Draws a uniformly random k-subset of [0, d). The result depends only on
/// (seed, draw_counter).
IndexSet sample_index_set(int d, int k, std::uint64_t seed, std::uint64_t draw_counter);

/// An image in which every pixel outside `retained` is the NULL symbol.
/// NULL pixels hold zeros in `values`; use is_null() to tell them apart.
struct AblatedImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> values;
  std::vector<std::uint8_t> present;
  IndexSet retained;

  int pixel_count() const { return width * height; }
  bool is_null(int index) const { return present[static_cast<std::size_t>(index)] == 0; }
  /// nullopt for NULL pixels.
  std::optional<std::span<const float>> pixel(int index) const;
};

AblatedImage ablate(const Image& image, const IndexSet& retained);

enum class EncodingScheme {
  kMultichannel,  ///< s -> (s, 1 - s), NULL -> all zeros; doubles the channels
  kMean,          ///< NULL -> training-set mean pixel; channels unchanged
};

std::string_view to_string(EncodingScheme scheme);
EncodingScheme parse_encoding(std::string_view name);

/// Classifier-ready tensor. Entries of pixels outside `retained` all equal
/// the scheme's NULL encoding, which consumers may exploit for sparsity.
struct EncodedTensor {
  EncodingScheme scheme = EncodingScheme::kMultichannel;
  int pixel_count = 0;
  int channels = 0;  ///< encoded channels per pixel
  std::vector<double> values;
  IndexSet retained;
};

/// Channels per encoded pixel for a source with `channels` channels.
int encoded_channels(EncodingScheme scheme, int channels);

/// The encoded representation of a NULL pixel.
std::vector<double> null_encoding(EncodingScheme scheme, int channels,
                                  std::span<const float> mean_pixel = {});

/// `mean_pixel` is required (one value per source channel) for kMean.
EncodedTensor encode(const AblatedImage& ablated, EncodingScheme scheme,
                     std::span<const float> mean_pixel = {});

}  // namespace l0cert
