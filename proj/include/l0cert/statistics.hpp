#pragma once

#include <cstdint>
#include <vector>

namespace l0cert {

/// Per-class vote counts from n sampled base classifications.
struct SampleCounts {
  std::vector<std::int64_t> per_class;  ///< indexed by class id
  std::int64_t total = 0;

  void validate() const;
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
};

enum class AbstentionDecision { kReturnTop, kAbstain };

/// One-sided Clopper-Pearson lower bound on a binomial rate: the smallest p
/// under which observing >= `successes` of `trials` has probability >= alpha.
double lower_conf_bound(std::int64_t successes, std::int64_t trials, double alpha);

/// One-sided Clopper-Pearson upper bound (mirror of lower_conf_bound).
double upper_conf_bound(std::int64_t successes, std::int64_t trials, double alpha);

/// Upper tail P(X >= successes) and lower tail P(X <= successes) for
/// X ~ Binomial(trials, p), summed in log space.
double binomial_upper_tail(std::int64_t trials, std::int64_t successes, double p);
double binomial_lower_tail(std::int64_t trials, std::int64_t successes, double p);

/// Exact two-sided binomial test of top vs. runner-up against rate 1/2.
/// p-value is 2 * min(tail) capped at 1.
double abstention_p_value(std::int64_t top_count, std::int64_t second_count);
AbstentionDecision abstention_test(std::int64_t top_count, std::int64_t second_count,
                                   double alpha);

/// Clopper-Pearson bounds for every class at level alpha / c (Bonferroni).
/// Any combination of one lower bound and c - 1 upper bounds then holds
/// jointly with probability at least 1 - alpha.
std::vector<ConfidenceInterval> simultaneous_bounds(const SampleCounts& counts, double alpha);

}  // namespace l0cert
