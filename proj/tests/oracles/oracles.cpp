#include "oracles.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "l0cert/errors.hpp"

namespace oracles {

Integer binomial_exact(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  Integer result = 1;
  for (int i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

Rational delta_exact(int d, int k, int rho) {
  if (d > 10000) throw l0cert::InstanceTooLarge("delta_exact is limited to d <= 10^4");
  if (k < 1 || k > d || rho < 0 || rho > d) throw l0cert::InvalidParams("delta_exact domain");
  return Rational(1) - Rational(binomial_exact(d - rho, k), binomial_exact(d, k));
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

LookupTableClassifier::LookupTableClassifier(int d, int num_classes, std::uint64_t seed)
    : d_(d), classes_(num_classes) {
  std::size_t size = 1;
  for (int i = 0; i < d; ++i) size *= 3;
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> pick(0, num_classes - 1);
  table_.resize(size);
  for (auto& entry : table_) entry = pick(gen);
}

LookupTableClassifier::LookupTableClassifier(int d, int num_classes, std::vector<int> table)
    : d_(d), classes_(num_classes), table_(std::move(table)) {}

std::size_t LookupTableClassifier::pattern(const l0cert::AblatedImage& ablated) {
  std::size_t index = 0;
  for (int p = ablated.pixel_count() - 1; p >= 0; --p) {
    std::size_t digit = 0;
    if (!ablated.is_null(p)) digit = ablated.values[static_cast<std::size_t>(p)] < 0.5f ? 1 : 2;
    index = index * 3 + digit;
  }
  return index;
}

int LookupTableClassifier::classify(const l0cert::AblatedImage& ablated) const {
  if (ablated.pixel_count() != d_) throw l0cert::ShapeMismatch("lookup table width");
  return table_.at(pattern(ablated));
}

std::vector<Rational> enumerate_p(const l0cert::Image& image, const l0cert::BaseClassifier& classifier,
                                  int k) {
  const int d = image.pixel_count();
  if (binomial_exact(d, k) > 1000000) throw l0cert::InstanceTooLarge("enumerate_p limit");
  std::vector<Integer> counts(static_cast<std::size_t>(classifier.num_classes()), 0);
  Integer total = 0;
  // Walk all d-bit masks with exactly k bits set.
  std::vector<bool> chosen(static_cast<std::size_t>(d), false);
  std::fill(chosen.end() - k, chosen.end(), true);
  do {
    l0cert::IndexSet set;
    for (int i = 0; i < d; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) set.indices.push_back(i);
    }
    ++counts.at(static_cast<std::size_t>(classifier.classify(l0cert::ablate(image, set))));
    ++total;
  } while (std::next_permutation(chosen.begin(), chosen.end()));
  std::vector<Rational> p;
  for (const auto& c : counts) p.emplace_back(c, total);
  return p;
}

l0cert::Image binary_image(int d, std::uint32_t bits) {
  l0cert::Image image(d, 1, 1);
  for (int i = 0; i < d; ++i) image.values[static_cast<std::size_t>(i)] = (bits >> i) & 1u ? 1.0f : 0.0f;
  return image;
}

long double binom_tail_exact(std::int64_t n, std::int64_t s, long double p) {
  if (n < 0 || s < 0 || p < 0 || p > 1) throw l0cert::InvalidParams("binom_tail_exact domain");
  if (s == 0) return 1.0L;
  if (s > n) return 0.0L;
  if (p == 0) return 0.0L;
  if (p == 1) return 1.0L;
  const long double log_ratio = std::log(p) - std::log1p(-p);
  long double log_term = static_cast<long double>(n) * std::log1p(-p);  // j = 0
  long double sum = 0.0L;
  for (std::int64_t j = 0; j < n; ++j) {
    if (j >= s) sum += std::exp(log_term);
    log_term += std::log(static_cast<long double>(n - j)) - std::log(static_cast<long double>(j + 1)) + log_ratio;
  }
  sum += std::exp(log_term);  // j = n
  return sum;
}

double loss_reference(const l0cert::Mlp& model, std::span<const double> input, int label) {
  std::vector<double> activation(input.begin(), input.end());
  for (int l = 0; l < model.layer_count(); ++l) {
    const auto& w = model.weight(l);
    const auto& b = model.bias(l);
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double z = b(r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) z += w(r, c) * activation[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = (l + 1 < model.layer_count() && z < 0.0) ? 0.0 : z;
    }
    activation = std::move(next);
  }
  double peak = activation[0];
  for (double z : activation) peak = std::max(peak, z);
  double total = 0.0;
  for (double z : activation) total += std::exp(z - peak);
  return -(activation[static_cast<std::size_t>(label)] - peak) + std::log(total);
}

std::vector<double> numeric_gradient(const l0cert::Mlp& model, std::span<const double> input, int label,
                                     double step) {
  l0cert::Mlp copy = model;
  std::vector<double> gradient;
  const auto probe = [&](double& parameter) {
    const double saved = parameter;
    parameter = saved + step;
    const double up = loss_reference(copy, input, label);
    parameter = saved - step;
    const double down = loss_reference(copy, input, label);
    parameter = saved;
    gradient.push_back((up - down) / (2.0 * step));
  };
  for (int l = 0; l < copy.layer_count(); ++l) {
    auto& w = copy.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) probe(w(r, c));
    }
    auto& b = copy.bias(l);
    for (Eigen::Index r = 0; r < b.size(); ++r) probe(b(r));
  }
  return gradient;
}

}  // namespace oracles
