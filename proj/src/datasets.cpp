#include "l0cert/datasets.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>

#include "l0cert/errors.hpp"
#include "l0cert/random.hpp"

namespace l0cert {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

bool is_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::filesystem::filesystem_error("no such file", path,
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  }
  std::vector<std::uint8_t> bytes;
  if (is_gzip(path)) {
    std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    std::array<std::uint8_t, 1 << 16> chunk;
    int got = 0;
    while ((got = gzread(file.get(), chunk.data(), chunk.size())) > 0) {
      bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + got);
    }
    if (got < 0) throw FormatError(FormatError::Kind::kTruncated, "corrupt gzip stream in " + path.string());
    return bytes;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return bytes;
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (is_gzip(path)) {
    std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "wb"), &gzclose);
    if (!file || gzwrite(file.get(), bytes.data(), static_cast<unsigned>(bytes.size())) !=
                     static_cast<int>(bytes.size())) {
      throw std::runtime_error("cannot write " + path.string());
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw FormatError(FormatError::Kind::kTruncated, "truncated IDX header in " + path.string());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> picks) {
  Dataset out;
  out.split = dataset.split;
  out.num_classes = dataset.num_classes;
  for (auto i : picks) {
    out.images.push_back(dataset.images[i]);
    out.labels.push_back(dataset.labels[i]);
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (images.size() != labels.size()) throw InvalidParams("dataset images/labels length differ");
  for (int label : labels) {
    if (label < 0 || label >= num_classes) throw InvalidParams("label out of range");
  }
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split, int num_classes) {
  const auto image_bytes = read_all(images_path);
  const auto label_bytes = read_all(labels_path);

  if (read_be32(image_bytes, 0, images_path) != kImageMagic) {
    throw FormatError(FormatError::Kind::kBadMagic, "bad image magic in " + images_path.string());
  }
  if (read_be32(label_bytes, 0, labels_path) != kLabelMagic) {
    throw FormatError(FormatError::Kind::kBadMagic, "bad label magic in " + labels_path.string());
  }
  const std::size_t count = read_be32(image_bytes, 4, images_path);
  const auto rows = static_cast<int>(read_be32(image_bytes, 8, images_path));
  const auto cols = static_cast<int>(read_be32(image_bytes, 12, images_path));
  const std::size_t label_count = read_be32(label_bytes, 4, labels_path);
  if (count != label_count) {
    throw FormatError(FormatError::Kind::kCountMismatch,
                      "image count " + std::to_string(count) + " != label count " +
                          std::to_string(label_count));
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (image_bytes.size() < 16 + count * pixels) {
    throw FormatError(FormatError::Kind::kTruncated, "truncated image payload in " + images_path.string());
  }
  if (label_bytes.size() < 8 + count) {
    throw FormatError(FormatError::Kind::kTruncated, "truncated label payload in " + labels_path.string());
  }

  Dataset dataset;
  dataset.split = split;
  dataset.num_classes = num_classes;
  dataset.images.reserve(count);
  dataset.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> values(pixels);
    const auto* src = image_bytes.data() + 16 + i * pixels;
    std::transform(src, src + pixels, values.begin(),
                   [](std::uint8_t b) { return static_cast<float>(b) / 255.0f; });
    dataset.images.emplace_back(cols, rows, 1, std::move(values));
    dataset.labels.push_back(label_bytes[8 + i]);
  }
  dataset.validate();
  return dataset;
}

void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  dataset.validate();
  if (dataset.empty()) throw InvalidParams("cannot write an empty dataset");
  const auto& first = dataset.images.front();
  std::vector<std::uint8_t> images;
  append_be32(images, kImageMagic);
  append_be32(images, static_cast<std::uint32_t>(dataset.size()));
  append_be32(images, static_cast<std::uint32_t>(first.height));
  append_be32(images, static_cast<std::uint32_t>(first.width));
  for (const auto& image : dataset.images) {
    if (image.channels != 1 || image.width != first.width || image.height != first.height) {
      throw ShapeMismatch("IDX export needs equally sized single-channel images");
    }
    for (float v : image.values) images.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
  }
  std::vector<std::uint8_t> labels;
  append_be32(labels, kLabelMagic);
  append_be32(labels, static_cast<std::uint32_t>(dataset.size()));
  for (int label : dataset.labels) labels.push_back(static_cast<std::uint8_t>(label));
  write_all(images_path, images);
  write_all(labels_path, labels);
}

Dataset first_n(const Dataset& dataset, std::size_t n) {
  std::vector<std::size_t> picks(std::min(n, dataset.size()));
  std::iota(picks.begin(), picks.end(), 0);
  return subset(dataset, picks);
}

Dataset random_n(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, 0);
  const std::size_t take = std::min(n, order.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(order[i], order[i + rng.below(order.size() - i)]);
  }
  order.resize(take);
  return subset(dataset, order);
}

std::vector<float> mean_pixel(const Dataset& dataset) {
  if (dataset.empty()) throw EmptyResults("mean_pixel of an empty dataset");
  const int ch = dataset.images.front().channels;
  std::vector<double> sum(static_cast<std::size_t>(ch), 0.0);
  std::size_t count = 0;
  for (const auto& image : dataset.images) {
    for (int p = 0; p < image.pixel_count(); ++p) {
      const auto px = image.pixel(p);
      for (int c = 0; c < ch; ++c) sum[static_cast<std::size_t>(c)] += px[static_cast<std::size_t>(c)];
    }
    count += static_cast<std::size_t>(image.pixel_count());
  }
  std::vector<float> mean(sum.size());
  std::transform(sum.begin(), sum.end(), mean.begin(),
                 [&](double s) { return static_cast<float>(s / static_cast<double>(count)); });
  return mean;
}

LabelRule parity_rule() {
  return [](std::span<const int> symbols) {
    return std::accumulate(symbols.begin(), symbols.end(), 0) % 2;
  };
}

Dataset synthetic_lookup_dataset(int d, int s_size, const LabelRule& rule, int num_classes,
                                 std::optional<std::size_t> size, std::uint64_t seed) {
  if (d < 1 || s_size < 2 || num_classes < 1) throw InvalidParams("synthetic dataset needs d >= 1, |S| >= 2");
  const double total = std::pow(static_cast<double>(s_size), d);
  if (total > 1e7) throw InstanceTooLarge("|S|^d exceeds 1e7 images");

  Dataset all;
  all.num_classes = num_classes;
  std::vector<int> symbols(static_cast<std::size_t>(d), 0);
  for (std::size_t n = 0; n < static_cast<std::size_t>(total); ++n) {
    std::size_t code = n;
    // Most significant symbol first, so enumeration order is lexicographic.
    for (int p = d - 1; p >= 0; --p) {
      symbols[static_cast<std::size_t>(p)] = static_cast<int>(code % static_cast<std::size_t>(s_size));
      code /= static_cast<std::size_t>(s_size);
    }
    std::vector<float> values(symbols.size());
    std::transform(symbols.begin(), symbols.end(), values.begin(), [&](int s) {
      return static_cast<float>(s) / static_cast<float>(s_size - 1);
    });
    all.images.emplace_back(d, 1, 1, std::move(values));
    all.labels.push_back(rule(symbols));
  }
  all.validate();
  if (!size) return all;
  if (*size > all.size()) throw InvalidParams("subset larger than the enumerated dataset");
  auto picked = random_n(all, *size, seed);
  return picked;
}

}  // namespace l0cert
