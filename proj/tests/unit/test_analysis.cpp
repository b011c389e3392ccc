#include "doctest.h"

#include <cmath>
#include <sstream>

#include "l0cert/analysis.hpp"
#include "l0cert/combinatorics.hpp"
#include "l0cert/errors.hpp"

using namespace l0cert;

TEST_CASE("ablation information examples") {
  CHECK(mutual_info_ablate(0, 256) == 0.0);
  CHECK(mutual_info_ablate(14521, 256) == 116168.0);
  CHECK(mutual_info_ablate(1, 2) == 1.0);
  CHECK_THROWS_AS(mutual_info_ablate(-1, 2), InvalidParams);
  CHECK_THROWS_AS(mutual_info_ablate(3, 1), InvalidParams);
}

TEST_CASE("substitution information examples") {
  const double d = 3.0 * 224 * 224;
  CHECK(std::abs(mutual_info_substitution(d, 256, 0.1) - 50590.4) <= 0.1);
  CHECK(mutual_info_substitution(d, 256, 1.0) == doctest::Approx(d * 8.0));
  CHECK(mutual_info_substitution(100, 4, 0.0) == doctest::Approx(100 * (2.0 - std::log2(3.0))));
  CHECK_THROWS_AS(mutual_info_substitution(d, 256, 1.5), InvalidParams);
  CHECK_THROWS_AS(mutual_info_substitution(d, 256, -0.1), InvalidParams);
  CHECK_THROWS_AS(mutual_info_substitution(d, 1, 0.5), InvalidParams);
}

TEST_CASE("full retention matches ablation of every pixel") {
  for (int s : {2, 3, 16, 256}) {
    for (double d : {1.0, 10.0, 784.0}) {
      CHECK(mutual_info_substitution(d, s, 1.0) == doctest::Approx(mutual_info_ablate(d, s)));
    }
  }
}

TEST_CASE("substitution information is never negative") {
  for (int s : {2, 3, 10, 256}) {
    for (int step = 0; step <= 100; ++step) {
      const double kappa = step / 100.0;
      CHECK(mutual_info_substitution(50, s, kappa) >= -1e-9);
    }
  }
  // Zero exactly when the kept value is as likely as each substitute.
  CHECK(std::abs(mutual_info_substitution(50, 4, 0.25)) <= 1e-9);
}

TEST_CASE("ablation carries over twice the substitution information") {
  const double ablate = mutual_info_ablate(14521, 256);
  const double substitute = mutual_info_substitution(3.0 * 224 * 224, 256, 0.1);
  CHECK(ablate / substitute > 2.0);
}

TEST_CASE("delta curve") {
  const std::vector<int> ks{5, 10, 20, 45, 100};
  const auto curve = delta_curve(784, ks, 0, 30);
  REQUIRE(curve.rhos.size() == 31);
  REQUIRE(curve.values.size() == 31);
  for (std::size_t j = 0; j < ks.size(); ++j) CHECK(curve.values[0][j] == 0.0);
  for (std::size_t i = 0; i < curve.rhos.size(); ++i) {
    CHECK(curve.values[i][3] == delta({784, 45, curve.rhos[i]}));
    for (std::size_t j = 0; j + 1 < ks.size(); ++j) {
      if (curve.rhos[i] >= 1) CHECK(curve.values[i][j + 1] > curve.values[i][j]);
    }
    if (i > 0) {
      for (std::size_t j = 0; j < ks.size(); ++j) CHECK(curve.values[i][j] >= curve.values[i - 1][j]);
    }
  }
  std::istringstream csv(curve.to_csv());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "rho,k=5,k=10,k=20,k=45,k=100");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 31);
  CHECK_THROWS_AS(delta_curve(784, ks, 5, 4), InvalidParams);
  CHECK_THROWS_AS(delta_curve(784, {800}, 0, 3), InvalidParams);
}
