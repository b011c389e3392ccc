#include "l0cert/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "l0cert/combinatorics.hpp"
#include "l0cert/errors.hpp"

namespace l0cert {
namespace {

constexpr double kMaxEnumeration = 1e6;

std::pair<int, int> top_two(const std::vector<std::int64_t>& counts) {
  int first = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[static_cast<std::size_t>(first)]) first = static_cast<int>(i);
  }
  if (counts.size() < 2) return {first, first};
  int second = first == 0 ? 1 : 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (static_cast<int>(i) == first) continue;
    if (counts[i] > counts[static_cast<std::size_t>(second)]) second = static_cast<int>(i);
  }
  return {first, second};
}

void check_image(const Image& image, const BaseClassifier& classifier, const SmoothingConfig& config) {
  if (image.pixel_count() != config.d) {
    throw ShapeMismatch("image has " + std::to_string(image.pixel_count()) + " pixels, config d=" +
                        std::to_string(config.d));
  }
  if (classifier.num_classes() != config.c) {
    throw ShapeMismatch("classifier has " + std::to_string(classifier.num_classes()) +
                        " classes, config c=" + std::to_string(config.c));
  }
}

double binomial_count(int d, int k) {
  return std::exp(std::lgamma(d + 1.0) - std::lgamma(k + 1.0) - std::lgamma(d - k + 1.0));
}

}  // namespace

std::string_view to_string(CertificateMode mode) {
  return mode == CertificateMode::kSingleClass ? "cor1" : "cor2";
}

CertificateMode parse_certificate_mode(std::string_view name) {
  if (name == "cor1") return CertificateMode::kSingleClass;
  if (name == "cor2") return CertificateMode::kPairwise;
  throw InvalidParams("unknown certificate mode '" + std::string(name) + "'");
}

void SmoothingConfig::validate() const {
  if (d < 1 || k < 1 || k > d) throw InvalidParams("smoothing config needs 1 <= k <= d");
  if (c < 2) throw InvalidParams("smoothing config needs at least two classes");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParams("alpha must lie in (0, 1)");
  if (n0 < 1 || n < 1) throw InvalidParams("n0 and n must be positive");
  if (batch_size < 1) throw InvalidParams("batch size must be positive");
}

std::string SmoothingConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "d=" << d << ";k=" << k << ";c=" << c << ";alpha=" << alpha << ";n0=" << n0
      << ";n=" << n << ";seed=" << seed << ";encoding=" << to_string(encoding)
      << ";mode=" << to_string(mode);
  return out.str();
}

SampleCounts count_votes(const Image& image, const BaseClassifier& classifier,
                         const SmoothingConfig& config, std::uint64_t first_counter,
                         std::int64_t count) {
  config.validate();
  check_image(image, classifier, config);
  SampleCounts votes;
  votes.per_class.assign(static_cast<std::size_t>(config.c), 0);
  votes.total = count;

  std::vector<AblatedImage> batch;
  std::vector<int> predictions;
  for (std::int64_t begin = 0; begin < count; begin += config.batch_size) {
    const std::int64_t end = std::min(count, begin + config.batch_size);
    batch.clear();
    for (std::int64_t t = begin; t < end; ++t) {
      const auto set = sample_index_set(config.d, config.k, config.seed,
                                        first_counter + static_cast<std::uint64_t>(t));
      batch.push_back(ablate(image, set));
    }
    predictions.assign(batch.size(), 0);
    classifier.classify_batch(batch, predictions);
    for (int label : predictions) {
      if (label < 0 || label >= config.c) throw ShapeMismatch("base classifier returned an invalid class");
      ++votes.per_class[static_cast<std::size_t>(label)];
    }
  }
  return votes;
}

Prediction prediction_from_votes(const SampleCounts& votes, double alpha) {
  if (votes.per_class.empty()) throw InvalidParams("no classes to vote for");
  const auto [first, second] = top_two(votes.per_class);
  Prediction prediction;
  prediction.top = first;
  prediction.top_count = votes.per_class[static_cast<std::size_t>(first)];
  prediction.second_count = votes.per_class[static_cast<std::size_t>(second)];
  if (abstention_test(prediction.top_count, prediction.second_count, alpha) ==
      AbstentionDecision::kReturnTop) {
    prediction.label = first;
  }
  return prediction;
}

Prediction predict(const Image& image, const BaseClassifier& classifier,
                   const SmoothingConfig& config) {
  return prediction_from_votes(count_votes(image, classifier, config, 0, config.n0), config.alpha);
}

CertificationResult certificate_from_bounds(int selected, int label, double p_lower,
                                            double p_runner_up_upper, int d, int k,
                                            CertificateMode mode) {
  CertificationResult result;
  result.label = label;
  result.p_lower = p_lower;
  result.p_runner_up_upper = p_runner_up_upper;
  const auto radius = mode == CertificateMode::kSingleClass
                          ? max_certified_radius(p_lower, d, k)
                          : max_certified_radius_pairwise(p_lower, p_runner_up_upper, d, k);
  result.selected = selected;
  result.predicted = selected;
  if (radius && selected == label) result.radius = radius;
  return result;
}

CertificationResult certify(const Image& image, int label, const BaseClassifier& classifier,
                            const SmoothingConfig& config, std::string id) {
  const auto selection = count_votes(image, classifier, config, 0, config.n0);
  const auto [selected, second] = top_two(selection.per_class);
  const auto estimate =
      count_votes(image, classifier, config, static_cast<std::uint64_t>(config.n0), config.n);
  const auto hits = estimate.per_class[static_cast<std::size_t>(selected)];

  double p_lower = 0.0;
  double runner_up = 0.0;
  if (config.mode == CertificateMode::kSingleClass) {
    p_lower = lower_conf_bound(hits, config.n, config.alpha);
  } else {
    const auto bounds = simultaneous_bounds(estimate, config.alpha);
    p_lower = bounds[static_cast<std::size_t>(selected)].lower;
    for (std::size_t j = 0; j < bounds.size(); ++j) {
      if (static_cast<int>(j) != selected) runner_up = std::max(runner_up, bounds[j].upper);
    }
  }
  auto result = certificate_from_bounds(selected, label, p_lower, runner_up, config.d, config.k, config.mode);
  if (abstention_test(selection.per_class[static_cast<std::size_t>(selected)],
                      selection.per_class[static_cast<std::size_t>(second)],
                      config.alpha) == AbstentionDecision::kAbstain) {
    result.predicted.reset();
  }
  result.id = std::move(id);
  result.n0 = config.n0;
  result.n = config.n;
  result.top_hits = hits;
  return result;
}

ExactSmoothing exact_smooth(const Image& image, const BaseClassifier& classifier, int k) {
  const int d = image.pixel_count();
  if (k < 1 || k > d) throw InvalidParams("exact_smooth needs 1 <= k <= d");
  if (binomial_count(d, k) > kMaxEnumeration + 0.5) {
    throw InstanceTooLarge("C(" + std::to_string(d) + ", " + std::to_string(k) + ") exceeds 1e6");
  }
  ExactSmoothing exact;
  exact.counts.assign(static_cast<std::size_t>(classifier.num_classes()), 0);

  IndexSet set;
  set.indices.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) set.indices[static_cast<std::size_t>(i)] = i;
  while (true) {
    const int label = classifier.classify(ablate(image, set));
    if (label < 0 || label >= classifier.num_classes()) throw ShapeMismatch("invalid class from classifier");
    ++exact.counts[static_cast<std::size_t>(label)];
    ++exact.total;
    // Next combination in lexicographic order.
    int i = k - 1;
    while (i >= 0 && set.indices[static_cast<std::size_t>(i)] == d - k + i) --i;
    if (i < 0) break;
    ++set.indices[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      set.indices[static_cast<std::size_t>(j)] = set.indices[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  exact.p.resize(exact.counts.size());
  for (std::size_t i = 0; i < exact.counts.size(); ++i) {
    exact.p[i] = static_cast<double>(exact.counts[i]) / static_cast<double>(exact.total);
  }
  exact.top = top_two(exact.counts).first;
  return exact;
}

}  // namespace l0cert
