#include "l0cert/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "l0cert/errors.hpp"

namespace l0cert {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kBisectionSteps = 200;
constexpr double kBisectionWidth = 1e-15;

void check_counts(std::int64_t successes, std::int64_t trials) {
  if (trials < 1 || successes < 0 || successes > trials) {
    throw InvalidParams("require 0 <= successes <= trials and trials >= 1, got " +
                        std::to_string(successes) + "/" + std::to_string(trials));
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParams("alpha must lie in (0, 1)");
}

double log_choose(std::int64_t n, std::int64_t j) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(static_cast<double>(n - j) + 1.0);
}

// log sum_{j=first}^{last} C(n,j) p^j (1-p)^(n-j), for 0 < p < 1, via the
// term ratio C(n,j+1)/C(n,j) * p/(1-p).
double log_binomial_range(std::int64_t n, std::int64_t first, std::int64_t last, double p) {
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_odds = log_p - log_q;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(last - first + 1));
  double term = log_choose(n, first) + static_cast<double>(first) * log_p +
                static_cast<double>(n - first) * log_q;
  double peak = term;
  for (std::int64_t j = first;; ++j) {
    terms.push_back(term);
    peak = std::max(peak, term);
    if (j == last) break;
    term += std::log(static_cast<double>(n - j) / static_cast<double>(j + 1)) + log_odds;
  }
  double scaled = 0.0;
  for (double t : terms) scaled += std::exp(t - peak);
  return peak + std::log(scaled);
}

template <typename Increasing>
double bisect(Increasing above_target) {
  double lo = 0.0;
  double hi = 1.0;
  for (int step = 0; step < kBisectionSteps && hi - lo > kBisectionWidth; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (above_target(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void SampleCounts::validate() const {
  if (total < 1) throw InvalidParams("sample total must be positive");
  std::int64_t sum = 0;
  for (auto c : per_class) {
    if (c < 0) throw InvalidParams("negative class count");
    sum += c;
  }
  if (sum != total) throw InvalidParams("class counts do not sum to total");
}

double binomial_upper_tail(std::int64_t trials, std::int64_t successes, double p) {
  if (trials < 0 || !(p >= 0.0 && p <= 1.0)) throw InvalidParams("bad binomial parameters");
  if (successes <= 0) return 1.0;
  if (successes > trials) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  return std::min(1.0, std::exp(log_binomial_range(trials, successes, trials, p)));
}

double binomial_lower_tail(std::int64_t trials, std::int64_t successes, double p) {
  if (trials < 0 || !(p >= 0.0 && p <= 1.0)) throw InvalidParams("bad binomial parameters");
  if (successes >= trials) return 1.0;
  if (successes < 0) return 0.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  return std::min(1.0, std::exp(log_binomial_range(trials, 0, successes, p)));
}

double lower_conf_bound(std::int64_t successes, std::int64_t trials, double alpha) {
  check_counts(successes, trials);
  check_alpha(alpha);
  if (successes == 0) return 0.0;
  if (successes == trials) return std::pow(alpha, 1.0 / static_cast<double>(trials));
  // P(X >= s; p) is increasing in p.
  return bisect([&](double p) { return binomial_upper_tail(trials, successes, p) > alpha; });
}

double upper_conf_bound(std::int64_t successes, std::int64_t trials, double alpha) {
  check_counts(successes, trials);
  check_alpha(alpha);
  if (successes == trials) return 1.0;
  if (successes == 0) return 1.0 - std::pow(alpha, 1.0 / static_cast<double>(trials));
  // P(X <= s; p) is decreasing in p.
  return bisect([&](double p) { return binomial_lower_tail(trials, successes, p) < alpha; });
}

double abstention_p_value(std::int64_t top_count, std::int64_t second_count) {
  if (top_count < 0 || second_count < 0) throw InvalidParams("counts must be nonnegative");
  const std::int64_t n = top_count + second_count;
  if (n == 0) return 1.0;
  // At rate 1/2 the smaller tail is always the upper tail of the larger count.
  return std::min(1.0, 2.0 * binomial_upper_tail(n, std::max(top_count, second_count), 0.5));
}

AbstentionDecision abstention_test(std::int64_t top_count, std::int64_t second_count,
                                   double alpha) {
  check_alpha(alpha);
  return abstention_p_value(top_count, second_count) <= alpha ? AbstentionDecision::kReturnTop
                                                              : AbstentionDecision::kAbstain;
}

std::vector<ConfidenceInterval> simultaneous_bounds(const SampleCounts& counts, double alpha) {
  counts.validate();
  check_alpha(alpha);
  if (counts.per_class.empty()) throw InvalidParams("no classes");
  const double level = alpha / static_cast<double>(counts.per_class.size());
  std::vector<ConfidenceInterval> bounds;
  bounds.reserve(counts.per_class.size());
  for (auto c : counts.per_class) {
    bounds.push_back({lower_conf_bound(c, counts.total, level),
                      upper_conf_bound(c, counts.total, level)});
  }
  return bounds;
}

}  // namespace l0cert
