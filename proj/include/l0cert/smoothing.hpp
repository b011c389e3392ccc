#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "l0cert/ablation.hpp"
#include "l0cert/classifier.hpp"
#include "l0cert/statistics.hpp"

namespace l0cert {

enum class CertificateMode {
  kSingleClass,  ///< p_lower - delta > 1/2
  kPairwise,  ///< p_lower - delta > max other p_upper + delta, Bonferroni bounds
};

std::string_view to_string(CertificateMode mode);
CertificateMode parse_certificate_mode(std::string_view name);

struct SmoothingConfig {
  int d = 784;
  int k = 45;
  int c = 10;
  double alpha = 0.05;
  std::int64_t n0 = 1000;   ///< samples used to select the top class
  std::int64_t n = 10000;   ///< samples used to bound its probability
  std::uint64_t seed = 0;
  EncodingScheme encoding = EncodingScheme::kMultichannel;
  CertificateMode mode = CertificateMode::kSingleClass;
  int batch_size = 256;     ///< ablations materialized per classify_batch call

  void validate() const;
  std::string canonical() const;
};

/// Votes of the base classifier over ablations drawn with counters
/// [first_counter, first_counter + count).
SampleCounts count_votes(const Image& image, const BaseClassifier& classifier,
                         const SmoothingConfig& config, std::uint64_t first_counter,
                         std::int64_t count);

struct Prediction {
  std::optional<int> label;  ///< nullopt = abstain
  int top = 0;
  std::int64_t top_count = 0;
  std::int64_t second_count = 0;

  bool abstained() const { return !label.has_value(); }
};

/// Top class of `votes` and the two-sided abstention test at level alpha.
Prediction prediction_from_votes(const SampleCounts& votes, double alpha);

/// Smoothed prediction from n0 samples (counters [0, n0)) with the
/// two-sided abstention test at level alpha.
Prediction predict(const Image& image, const BaseClassifier& classifier,
                   const SmoothingConfig& config);

struct CertificationResult {
  std::string id;
  int label = 0;
  std::optional<int> predicted;  ///< smoothed prediction; nullopt = abstain
  int selected = 0;              ///< class whose probability was bounded
  double p_lower = 0.0;
  double p_runner_up_upper = 0.0;  ///< pairwise mode only
  std::optional<int> radius;       ///< nullopt = N/A (not certified, or selected != label)
  std::int64_t n0 = 0;
  std::int64_t n = 0;
  std::int64_t top_hits = 0;  ///< estimation-step votes for the selected class

  bool abstained() const { return !predicted.has_value(); }
  bool correct() const { return predicted && *predicted == label; }
  bool certified() const { return radius.has_value(); }
  friend bool operator==(const CertificationResult&, const CertificationResult&) = default;
};

/// Turns probability bounds for the selected class into a result. The radius
/// is N/A when nothing certifies or the selected class is wrong; the
/// prediction is the selected class.
CertificationResult certificate_from_bounds(int selected, int label, double p_lower,
                                            double p_runner_up_upper, int d, int k,
                                            CertificateMode mode);

/// Two-step Monte Carlo certification: n0 samples pick the class, n fresh
/// samples (counters [n0, n0 + n)) bound its probability. The recorded
/// prediction is what predict() returns, decided on the same n0 samples.
CertificationResult certify(const Image& image, int label, const BaseClassifier& classifier,
                            const SmoothingConfig& config, std::string id = {});

struct ExactSmoothing {
  std::vector<std::int64_t> counts;  ///< index sets classified as each class
  std::int64_t total = 0;            ///< C(d, k)
  std::vector<double> p;
  int top = 0;  ///< argmax, lowest index on ties
};

/// Enumerates every k-subset of the pixels. Throws InstanceTooLarge when
/// C(d, k) exceeds 1e6.
ExactSmoothing exact_smooth(const Image& image, const BaseClassifier& classifier, int k);

}  // namespace l0cert
