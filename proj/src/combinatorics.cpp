#include "l0cert/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l0cert/errors.hpp"

namespace l0cert {
namespace {

// Margins closer than this to the threshold are treated as ties, and ties
// never certify. Covers the rounding error of delta() (well below 1e-13).
constexpr double kTieTolerance = 1e-12;

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

void check_dk(int d, int k) {
  if (d < 1 || k < 1 || k > d) {
    throw InvalidParams("require 1 <= k <= d, got d=" + std::to_string(d) +
                        " k=" + std::to_string(k));
  }
}

template <typename Condition>
std::optional<int> largest_radius(int d, int k, Condition certifies) {
  // delta is nondecreasing in rho, so the certified set is a prefix of [0, d].
  std::optional<int> radius;
  for (int rho = 0; rho <= d; ++rho) {
    if (!certifies(delta({d, k, rho}))) break;
    radius = rho;
  }
  return radius;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidParams(std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

void DeltaParams::validate() const {
  check_dk(d, k);
  if (rho < 0 || rho > d) {
    throw InvalidParams("require 0 <= rho <= d, got rho=" + std::to_string(rho));
  }
}

double delta(const DeltaParams& params) {
  params.validate();
  const auto [d, k, rho] = params;
  if (rho == 0) return 0.0;
  if (rho > d - k) return 1.0;

  // C(d-rho, k) / C(d, k) = prod_{i<rho} (d-k-i)/(d-i) = prod_{i<k} (d-rho-i)/(d-i).
  // Each factor is 1 - m/(d-i) with m the length of the other product.
  const int length = std::min(k, rho);
  const double removed = static_cast<double>(length == rho ? k : rho);
  CompensatedSum log_ratio;
  for (int i = 0; i < length; ++i) {
    log_ratio.add(std::log1p(-removed / static_cast<double>(d - i)));
  }
  return -std::expm1(log_ratio.value());
}

std::optional<int> max_certified_radius(double p_lower, int d, int k) {
  check_dk(d, k);
  check_probability(p_lower, "p_lower");
  return largest_radius(d, k, [&](double bound) {
    return (p_lower - bound) - 0.5 > kTieTolerance;
  });
}

std::optional<int> max_certified_radius_pairwise(double p_top_lower, double p_runner_up_upper,
                                                 int d, int k) {
  check_dk(d, k);
  check_probability(p_top_lower, "p_top_lower");
  check_probability(p_runner_up_upper, "p_runner_up_upper");
  return largest_radius(d, k, [&](double bound) {
    return (p_top_lower - bound) - (p_runner_up_upper + bound) > kTieTolerance;
  });
}

}  // namespace l0cert
