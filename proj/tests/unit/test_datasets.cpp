#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <zlib.h>

#include "l0cert/datasets.hpp"
#include "l0cert/errors.hpp"

using namespace l0cert;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("l0cert-datasets-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string image_file(std::uint32_t count, std::uint32_t rows, std::uint32_t cols, const std::string& payload) {
  std::string out;
  put_u32(out, 0x803);
  put_u32(out, count);
  put_u32(out, rows);
  put_u32(out, cols);
  return out + payload;
}

std::string label_file(std::uint32_t count, const std::string& payload) {
  std::string out;
  put_u32(out, 0x801);
  put_u32(out, count);
  return out + payload;
}

FormatError::Kind load_error(const fs::path& images, const fs::path& labels) {
  try {
    load_idx(images, labels);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("expected a FormatError");
  return FormatError::Kind::kMalformed;
}

}  // namespace

TEST_CASE("hand-built one-image IDX pair") {
  TempDir dir;
  write_bytes(dir.path / "img", image_file(1, 28, 28, std::string(784, '\0')));
  write_bytes(dir.path / "lbl", label_file(1, std::string(1, '\7')));
  const auto data = load_idx(dir.path / "img", dir.path / "lbl", Split::kTest);
  REQUIRE(data.size() == 1);
  CHECK(data.labels[0] == 7);
  CHECK(data.split == Split::kTest);
  CHECK(data.images[0].width == 28);
  CHECK(data.images[0].height == 28);
  CHECK(std::all_of(data.images[0].values.begin(), data.images[0].values.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("byte 255 scales to 1") {
  TempDir dir;
  write_bytes(dir.path / "img", image_file(1, 1, 2, std::string("\xff\x80", 2)));
  write_bytes(dir.path / "lbl", label_file(1, std::string(1, '\1')));
  const auto data = load_idx(dir.path / "img", dir.path / "lbl");
  CHECK(data.images[0].values[0] == 1.0f);
  CHECK(data.images[0].values[1] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("IDX error kinds") {
  TempDir dir;
  const auto good_img = image_file(2, 2, 2, std::string(8, '\0'));
  const auto good_lbl = label_file(2, std::string(2, '\0'));
  write_bytes(dir.path / "img", good_img);
  write_bytes(dir.path / "lbl", good_lbl);
  CHECK(load_idx(dir.path / "img", dir.path / "lbl").size() == 2);

  write_bytes(dir.path / "short", image_file(2, 2, 2, std::string(7, '\0')));
  CHECK(load_error(dir.path / "short", dir.path / "lbl") == FormatError::Kind::kTruncated);

  write_bytes(dir.path / "header", std::string("\0\0\x08", 3));
  CHECK(load_error(dir.path / "header", dir.path / "lbl") == FormatError::Kind::kTruncated);

  auto magic = good_img;
  magic[3] = 0x04;
  write_bytes(dir.path / "magic", magic);
  CHECK(load_error(dir.path / "magic", dir.path / "lbl") == FormatError::Kind::kBadMagic);
  CHECK(load_error(dir.path / "lbl", dir.path / "lbl") == FormatError::Kind::kBadMagic);

  write_bytes(dir.path / "three", label_file(3, std::string(3, '\0')));
  CHECK(load_error(dir.path / "img", dir.path / "three") == FormatError::Kind::kCountMismatch);

  write_bytes(dir.path / "biglabel", label_file(2, std::string("\0\x0b", 2)));
  CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "biglabel"), InvalidParams);

  CHECK_THROWS_AS(load_idx(dir.path / "missing", dir.path / "lbl"), fs::filesystem_error);
}

TEST_CASE("gzip input is detected by extension") {
  TempDir dir;
  const auto bytes = image_file(1, 1, 3, std::string("\x00\x7f\xff", 3));
  gzFile gz = gzopen((dir.path / "img.gz").c_str(), "wb");
  gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(gz);
  write_bytes(dir.path / "lbl", label_file(1, std::string(1, '\3')));
  const auto data = load_idx(dir.path / "img.gz", dir.path / "lbl");
  CHECK(data.images[0].values[2] == 1.0f);
  CHECK(data.labels[0] == 3);
}

TEST_CASE("write and reload round-trip") {
  TempDir dir;
  Dataset data;
  for (int i = 0; i < 5; ++i) {
    Image image(3, 2, 1);
    for (std::size_t j = 0; j < image.values.size(); ++j) image.values[j] = static_cast<float>((i * 37 + j * 11) % 256) / 255.0f;
    data.images.push_back(image);
    data.labels.push_back(i % 10);
  }
  write_idx(data, dir.path / "i.gz", dir.path / "l");
  const auto back = load_idx(dir.path / "i.gz", dir.path / "l");
  CHECK(back.labels == data.labels);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(back.images[i] == data.images[i]);
}

TEST_CASE("subsetting") {
  const auto all = synthetic_lookup_dataset(4, 2, parity_rule(), 2);
  CHECK(first_n(all, 3).size() == 3);
  CHECK(first_n(all, 3).images[2] == all.images[2]);
  CHECK(first_n(all, 100).size() == 16);
  const auto a = random_n(all, 5, 9);
  const auto b = random_n(all, 5, 9);
  CHECK(a.labels == b.labels);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.images[i] == b.images[i]);
  CHECK(random_n(all, 16, 1).size() == 16);
}

TEST_CASE("mean pixel") {
  Dataset data;
  data.images = {Image(1, 1, 2, {0.0f, 1.0f}), Image(1, 1, 2, {0.5f, 0.0f})};
  data.labels = {0, 1};
  const auto mean = mean_pixel(data);
  CHECK(mean.size() == 2);
  CHECK(mean[0] == doctest::Approx(0.25));
  CHECK(mean[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(mean_pixel(Dataset{}), EmptyResults);
}

TEST_CASE("synthetic parity dataset") {
  const auto data = synthetic_lookup_dataset(6, 2, parity_rule(), 2);
  REQUIRE(data.size() == 64);
  for (std::size_t i = 0; i < data.size(); ++i) {
    int ones = 0;
    for (float v : data.images[i].values) ones += v == 1.0f;
    CHECK(data.labels[i] == ones % 2);
    CHECK(data.images[i].width == 6);
    CHECK(data.images[i].height == 1);
  }
  const auto sub = synthetic_lookup_dataset(6, 2, parity_rule(), 2, 10, 4);
  REQUIRE(sub.size() == 10);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    int ones = 0;
    for (float v : sub.images[i].values) ones += v == 1.0f;
    CHECK(sub.labels[i] == ones % 2);
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(sub.images[i] == sub.images[j]);
  }
  const auto again = synthetic_lookup_dataset(6, 2, parity_rule(), 2, 10, 4);
  CHECK(again.labels == sub.labels);
  CHECK_THROWS_AS(synthetic_lookup_dataset(6, 1, parity_rule(), 2), InvalidParams);
  CHECK_THROWS_AS(synthetic_lookup_dataset(6, 2, parity_rule(), 2, 65), InvalidParams);
}

TEST_CASE("three-symbol alphabet") {
  const auto data = synthetic_lookup_dataset(2, 3, [](std::span<const int> s) { return s[0]; }, 3);
  REQUIRE(data.size() == 9);
  CHECK(data.images[1].values[1] == doctest::Approx(0.5));
  CHECK(data.images[8].values[0] == 1.0f);
}
