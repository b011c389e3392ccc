#include "l0cert/ablation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "l0cert/errors.hpp"
#include "l0cert/random.hpp"

namespace l0cert {

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<float>(static_cast<std::size_t>(width) * height * channels, 0.0f)) {}

Image::Image(int width, int height, int channels, std::vector<float> values)
    : width(width), height(height), channels(channels), values(std::move(values)) {
  validate();
}

std::span<const float> Image::pixel(int index) const {
  return std::span<const float>(values).subspan(static_cast<std::size_t>(index) * channels,
                                                static_cast<std::size_t>(channels));
}

std::span<float> Image::pixel(int index) {
  return std::span<float>(values).subspan(static_cast<std::size_t>(index) * channels,
                                          static_cast<std::size_t>(channels));
}

void Image::validate() const {
  if (width < 1 || height < 1 || channels < 1) throw InvalidParams("image dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ShapeMismatch("image buffer does not match width * height * channels");
  }
  for (float v : values) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InvalidParams("pixel intensity outside [0, 1]");
  }
}

int l0_distance(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw ShapeMismatch("l0_distance on images of different shape");
  }
  int distance = 0;
  for (int p = 0; p < a.pixel_count(); ++p) {
    const auto x = a.pixel(p);
    const auto y = b.pixel(p);
    if (!std::equal(x.begin(), x.end(), y.begin())) ++distance;
  }
  return distance;
}

IndexSet sample_index_set(int d, int k, std::uint64_t seed, std::uint64_t draw_counter) {
  if (d < 1 || k < 1 || k > d) throw InvalidParams("sample_index_set requires 1 <= k <= d");
  thread_local std::vector<int> pool;
  pool.resize(static_cast<std::size_t>(d));
  std::iota(pool.begin(), pool.end(), 0);
  CounterRng rng(seed, draw_counter);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  IndexSet set{std::vector<int>(pool.begin(), pool.begin() + k)};
  std::sort(set.indices.begin(), set.indices.end());
  return set;
}

std::optional<std::span<const float>> AblatedImage::pixel(int index) const {
  if (is_null(index)) return std::nullopt;
  return std::span<const float>(values).subspan(static_cast<std::size_t>(index) * channels,
                                                static_cast<std::size_t>(channels));
}

AblatedImage ablate(const Image& image, const IndexSet& retained) {
  const int d = image.pixel_count();
  const auto ch = static_cast<std::size_t>(image.channels);
  AblatedImage out;
  out.width = image.width;
  out.height = image.height;
  out.channels = image.channels;
  out.values.assign(image.values.size(), 0.0f);
  out.present.assign(static_cast<std::size_t>(d), 0);
  for (int index : retained.indices) {
    if (index < 0 || index >= d) {
      throw std::out_of_range("retained index " + std::to_string(index) + " outside [0, " +
                              std::to_string(d) + ")");
    }
    auto& flag = out.present[static_cast<std::size_t>(index)];
    if (flag) throw InvalidParams("retained indices must be distinct");
    flag = 1;
    const auto offset = static_cast<std::size_t>(index) * ch;
    std::copy_n(image.values.begin() + static_cast<std::ptrdiff_t>(offset), ch,
                out.values.begin() + static_cast<std::ptrdiff_t>(offset));
  }
  out.retained = retained;
  return out;
}

std::string_view to_string(EncodingScheme scheme) {
  return scheme == EncodingScheme::kMultichannel ? "multichannel" : "mean";
}

EncodingScheme parse_encoding(std::string_view name) {
  if (name == "multichannel") return EncodingScheme::kMultichannel;
  if (name == "mean") return EncodingScheme::kMean;
  throw InvalidParams("unknown encoding '" + std::string(name) + "'");
}

int encoded_channels(EncodingScheme scheme, int channels) {
  return scheme == EncodingScheme::kMultichannel ? 2 * channels : channels;
}

std::vector<double> null_encoding(EncodingScheme scheme, int channels,
                                  std::span<const float> mean_pixel) {
  if (scheme == EncodingScheme::kMultichannel) {
    return std::vector<double>(static_cast<std::size_t>(2 * channels), 0.0);
  }
  if (mean_pixel.size() != static_cast<std::size_t>(channels)) {
    throw InvalidParams("mean encoding needs one mean value per channel");
  }
  return std::vector<double>(mean_pixel.begin(), mean_pixel.end());
}

EncodedTensor encode(const AblatedImage& ablated, EncodingScheme scheme,
                     std::span<const float> mean_pixel) {
  const int ch = ablated.channels;
  const int width = encoded_channels(scheme, ch);
  const auto null_pixel = null_encoding(scheme, ch, mean_pixel);

  EncodedTensor out;
  out.scheme = scheme;
  out.pixel_count = ablated.pixel_count();
  out.channels = width;
  out.retained = ablated.retained;
  out.values.resize(static_cast<std::size_t>(out.pixel_count) * width);
  for (int p = 0; p < out.pixel_count; ++p) {
    double* dst = out.values.data() + static_cast<std::size_t>(p) * width;
    if (ablated.is_null(p)) {
      std::copy(null_pixel.begin(), null_pixel.end(), dst);
      continue;
    }
    const float* src = ablated.values.data() + static_cast<std::size_t>(p) * ch;
    for (int c = 0; c < ch; ++c) {
      dst[c] = src[c];
      if (scheme == EncodingScheme::kMultichannel) dst[ch + c] = 1.0 - static_cast<double>(src[c]);
    }
  }
  return out;
}

}  // namespace l0cert
