#include "doctest.h"

#include <map>
#include <random>
#include <set>

#include "l0cert/ablation.hpp"
#include "l0cert/errors.hpp"

using namespace l0cert;

namespace {

Image random_image(int w, int h, int ch, std::mt19937_64& gen) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image image(w, h, ch);
  for (auto& v : image.values) v = u(gen);
  return image;
}

}  // namespace

TEST_CASE("sample_index_set basics") {
  const auto full = sample_index_set(6, 6, 1, 2);
  CHECK(full.indices == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(sample_index_set(5, 3, 9, 4) == sample_index_set(5, 3, 9, 4));
  CHECK_THROWS_AS(sample_index_set(5, 0, 0, 0), InvalidParams);
  CHECK_THROWS_AS(sample_index_set(5, 6, 0, 0), InvalidParams);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto set = sample_index_set(784, 45, 3, t);
    REQUIRE(set.size() == 45);
    CHECK(std::is_sorted(set.indices.begin(), set.indices.end()));
    CHECK(std::adjacent_find(set.indices.begin(), set.indices.end()) == set.indices.end());
    CHECK(set.indices.front() >= 0);
    CHECK(set.indices.back() < 784);
  }
}

TEST_CASE("sample_index_set depends on seed and counter only") {
  // Interleaving other draws must not change a given (seed, counter) result.
  const auto first = sample_index_set(100, 10, 5, 77);
  for (int i = 0; i < 10; ++i) sample_index_set(100, 10, 6, static_cast<std::uint64_t>(i));
  CHECK(sample_index_set(100, 10, 5, 77) == first);
  CHECK_FALSE(sample_index_set(100, 10, 5, 78) == first);
  CHECK_FALSE(sample_index_set(100, 10, 6, 77) == first);
}

TEST_CASE("inclusion frequencies are uniform") {
  const int draws = 100000;
  std::vector<int> single(10, 0);
  std::vector<std::vector<int>> pair(10, std::vector<int>(10, 0));
  for (int t = 0; t < draws; ++t) {
    const auto set = sample_index_set(10, 3, 42, static_cast<std::uint64_t>(t));
    for (int a : set.indices) {
      ++single[static_cast<std::size_t>(a)];
      for (int b : set.indices) {
        if (a < b) ++pair[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      }
    }
  }
  for (int count : single) CHECK(count / static_cast<double>(draws) == doctest::Approx(0.3).epsilon(0.01 / 0.3));
  for (int a = 0; a < 10; ++a) {
    for (int b = a + 1; b < 10; ++b) {
      CHECK(std::abs(pair[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] / static_cast<double>(draws) -
                     1.0 / 15.0) <= 0.01);
    }
  }
}

TEST_CASE("all ten 2-subsets of 5 are equally likely") {
  const int draws = 100000;
  std::map<std::vector<int>, int> counts;
  for (int t = 0; t < draws; ++t) ++counts[sample_index_set(5, 2, 1234, static_cast<std::uint64_t>(t)).indices];
  CHECK(counts.size() == 10);
  for (const auto& [set, count] : counts) CHECK(std::abs(count / static_cast<double>(draws) - 0.1) <= 0.01);
}

TEST_CASE("ablate worked example") {
  // [0,1,1,0,1] keeping 1-based {2,4,5} gives [NULL,1,NULL,0,1].
  const Image x(5, 1, 1, {0, 1, 1, 0, 1});
  const auto a = ablate(x, IndexSet{{1, 3, 4}});
  CHECK(a.is_null(0));
  CHECK(a.is_null(2));
  CHECK_FALSE(a.pixel(0).has_value());
  REQUIRE(a.pixel(1).has_value());
  CHECK((*a.pixel(1))[0] == 1.0f);
  CHECK((*a.pixel(3))[0] == 0.0f);
  CHECK((*a.pixel(4))[0] == 1.0f);
  CHECK_FALSE(a.is_null(3));
}

TEST_CASE("ablate with every index keeps the image") {
  std::mt19937_64 gen(1);
  const auto x = random_image(4, 3, 3, gen);
  IndexSet all;
  for (int i = 0; i < 12; ++i) all.indices.push_back(i);
  const auto a = ablate(x, all);
  CHECK(a.values == x.values);
  for (int i = 0; i < 12; ++i) CHECK_FALSE(a.is_null(i));
}

TEST_CASE("re-ablating with the same set changes nothing") {
  std::mt19937_64 gen(2);
  const auto x = random_image(5, 5, 1, gen);
  const auto set = sample_index_set(25, 7, 0, 0);
  const auto once = ablate(x, set);
  Image as_image(5, 5, 1, once.values);
  const auto twice = ablate(as_image, set);
  CHECK(twice.values == once.values);
  CHECK(twice.present == once.present);
}

TEST_CASE("ablate rejects bad index sets") {
  const Image x(5, 1, 1, {0, 1, 1, 0, 1});
  CHECK_THROWS_AS(ablate(x, IndexSet{{0, 5}}), std::out_of_range);
  CHECK_THROWS_AS(ablate(x, IndexSet{{-1}}), std::out_of_range);
  CHECK_THROWS_AS(ablate(x, IndexSet{{2, 2}}), InvalidParams);
}

TEST_CASE("image validation and L0 distance") {
  CHECK_THROWS_AS(Image(2, 2, 1, {0.0f, 1.5f, 0.0f, 0.0f}), InvalidParams);
  Image bad(2, 2, 1);
  bad.values[1] = -0.5f;
  CHECK_THROWS_AS(bad.validate(), InvalidParams);
  CHECK_THROWS_AS(Image(2, 2, 1, {0.0f}), ShapeMismatch);
  Image a(2, 1, 3, {0, 0, 0, 1, 1, 1});
  Image b = a;
  CHECK(l0_distance(a, b) == 0);
  b.values[4] = 0.5f;
  CHECK(l0_distance(a, b) == 1);
  b.values[0] = 0.5f;
  b.values[1] = 0.5f;
  CHECK(l0_distance(a, b) == 2);
  CHECK_THROWS_AS(l0_distance(a, Image(3, 1, 3)), ShapeMismatch);
}

TEST_CASE("multichannel encoding examples") {
  const Image gray(2, 1, 1, {0.3f, 0.9f});
  const auto e = encode(ablate(gray, IndexSet{{0}}), EncodingScheme::kMultichannel);
  CHECK(e.channels == 2);
  CHECK(e.values[0] == doctest::Approx(0.3));
  CHECK(e.values[1] == doctest::Approx(0.7));
  CHECK(e.values[2] == 0.0);
  CHECK(e.values[3] == 0.0);

  const Image white(1, 1, 3, {1, 1, 1});
  const auto c = encode(ablate(white, IndexSet{{0}}), EncodingScheme::kMultichannel);
  CHECK(c.values == std::vector<double>{1, 1, 1, 0, 0, 0});
  CHECK(null_encoding(EncodingScheme::kMultichannel, 3) == std::vector<double>(6, 0.0));
}

TEST_CASE("mean encoding") {
  const Image gray(3, 1, 1, {0.2f, 0.4f, 0.6f});
  const std::vector<float> mean{0.25f};
  const auto e = encode(ablate(gray, IndexSet{{1}}), EncodingScheme::kMean, mean);
  CHECK(e.channels == 1);
  CHECK(e.values[0] == doctest::Approx(0.25));
  CHECK(e.values[1] == doctest::Approx(0.4));
  CHECK(e.values[2] == doctest::Approx(0.25));
  CHECK_THROWS_AS(encode(ablate(gray, IndexSet{{1}}), EncodingScheme::kMean), InvalidParams);
  CHECK(encoded_channels(EncodingScheme::kMean, 3) == 3);
  CHECK(encoded_channels(EncodingScheme::kMultichannel, 3) == 6);
}

TEST_CASE("encoding names round-trip") {
  for (auto scheme : {EncodingScheme::kMultichannel, EncodingScheme::kMean}) {
    CHECK(parse_encoding(to_string(scheme)) == scheme);
  }
  CHECK_THROWS_AS(parse_encoding("zeros"), InvalidParams);
}

TEST_CASE("multichannel channel sums and decodability") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int ch = trial % 2 == 0 ? 1 : 3;
    const auto x = random_image(6, 5, ch, gen);
    const auto set = sample_index_set(30, 1 + trial % 30, 8, static_cast<std::uint64_t>(trial));
    const auto e = encode(ablate(x, set), EncodingScheme::kMultichannel);
    std::set<int> retained(set.indices.begin(), set.indices.end());
    for (int p = 0; p < 30; ++p) {
      double sum = 0.0;
      for (int c = 0; c < 2 * ch; ++c) sum += e.values[static_cast<std::size_t>(p * 2 * ch + c)];
      const bool kept = retained.count(p) > 0;
      CHECK(sum == doctest::Approx(kept ? ch : 0.0).epsilon(1e-12));
      // Zero-sum pixels are exactly the NULL ones; the first ch channels hold the value.
      CHECK((sum != 0.0) == kept);
      if (kept) {
        for (int c = 0; c < ch; ++c) {
          CHECK(e.values[static_cast<std::size_t>(p * 2 * ch + c)] ==
                doctest::Approx(x.values[static_cast<std::size_t>(p * ch + c)]));
        }
      }
    }
  }
}
