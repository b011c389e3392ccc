#include "l0cert/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "l0cert/errors.hpp"
#include "l0cert/random.hpp"

namespace l0cert {
namespace {

// Smoothed prediction with the n0 index sets fixed across queries. Between
// queries only samples retaining a changed pixel are re-classified, which
// gives the same votes as predict() at a fraction of the cost.
class SmoothedOracle {
 public:
  SmoothedOracle(const BaseClassifier& classifier, SmoothingConfig config, int label)
      : classifier_(classifier), config_(std::move(config)), label_(label) {
    config_.validate();
    if (classifier_.num_classes() != config_.c) {
      throw ShapeMismatch("classifier has " + std::to_string(classifier_.num_classes()) +
                          " classes, config c=" + std::to_string(config_.c));
    }
    const auto n = static_cast<std::size_t>(config_.n0);
    sets_.reserve(n);
    samples_by_pixel_.resize(static_cast<std::size_t>(config_.d));
    for (std::size_t t = 0; t < n; ++t) {
      sets_.push_back(sample_index_set(config_.d, config_.k, config_.seed, t));
      for (int p : sets_.back().indices) samples_by_pixel_[static_cast<std::size_t>(p)].push_back(t);
    }
    labels_.assign(n, -1);
    stamp_.assign(n, 0);
    votes_.per_class.assign(static_cast<std::size_t>(config_.c), 0);
    votes_.total = config_.n0;
  }

  /// The reason `image` is adversarial, or nullopt when it is still
  /// classified as the true label.
  std::optional<AttackOutcome> adversarial(const Image& image) {
    ++queries_;
    update(image);
    const auto prediction = prediction_from_votes(votes_, config_.alpha);
    if (prediction.abstained()) return AttackOutcome::kAbstained;
    if (*prediction.label != label_) return AttackOutcome::kMisclassified;
    return std::nullopt;
  }

  std::int64_t queries() const { return queries_; }

 private:
  void update(const Image& image) {
    if (image.pixel_count() != config_.d) {
      throw ShapeMismatch("image has " + std::to_string(image.pixel_count()) + " pixels, config d=" +
                          std::to_string(config_.d));
    }
    dirty_.clear();
    if (!cached_) {
      dirty_.resize(sets_.size());
      std::iota(dirty_.begin(), dirty_.end(), std::size_t{0});
    } else {
      ++epoch_;
      for (int p = 0; p < config_.d; ++p) {
        const auto a = image.pixel(p);
        if (std::equal(a.begin(), a.end(), cached_->pixel(p).begin())) continue;
        for (std::size_t t : samples_by_pixel_[static_cast<std::size_t>(p)]) {
          if (stamp_[t] == epoch_) continue;
          stamp_[t] = epoch_;
          dirty_.push_back(t);
        }
      }
    }
    cached_ = image;

    const auto batch_size = static_cast<std::size_t>(config_.batch_size);
    for (std::size_t begin = 0; begin < dirty_.size(); begin += batch_size) {
      const std::size_t end = std::min(dirty_.size(), begin + batch_size);
      batch_.clear();
      for (std::size_t i = begin; i < end; ++i) batch_.push_back(ablate(image, sets_[dirty_[i]]));
      predictions_.assign(batch_.size(), 0);
      classifier_.classify_batch(batch_, predictions_);
      for (std::size_t i = begin; i < end; ++i) {
        const int fresh = predictions_[i - begin];
        if (fresh < 0 || fresh >= config_.c) throw ShapeMismatch("base classifier returned an invalid class");
        int& old = labels_[dirty_[i]];
        if (old >= 0) --votes_.per_class[static_cast<std::size_t>(old)];
        ++votes_.per_class[static_cast<std::size_t>(fresh)];
        old = fresh;
      }
    }
  }

  const BaseClassifier& classifier_;
  SmoothingConfig config_;
  int label_;
  std::int64_t queries_ = 0;
  std::vector<IndexSet> sets_;
  std::vector<std::vector<std::size_t>> samples_by_pixel_;
  std::vector<int> labels_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> dirty_;
  std::optional<Image> cached_;
  SampleCounts votes_;
  std::vector<AblatedImage> batch_;
  std::vector<int> predictions_;
};

void restore_pixel(Image& target, const Image& source, int p) {
  const auto from = source.pixel(p);
  std::copy(from.begin(), from.end(), target.pixel(p).begin());
}

}  // namespace

void AttackConfig::validate() const {
  if (restarts < 1) throw InvalidParams("attack needs at least one restart");
  if (samples < 1) throw InvalidParams("attack needs a positive sample count");
  if (densities.empty()) throw InvalidParams("empty salt-and-pepper schedule");
  for (double density : densities) {
    if (!(density > 0.0 && density <= 1.0)) throw InvalidParams("densities must lie in (0, 1]");
  }
  if (max_sweeps < 1) throw InvalidParams("max_sweeps must be positive");
}

std::string_view to_string(AttackOutcome outcome) {
  switch (outcome) {
    case AttackOutcome::kMisclassified: return "misclassified";
    case AttackOutcome::kAbstained: return "abstained";
    case AttackOutcome::kBudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

AttackOutcome parse_attack_outcome(std::string_view name) {
  if (name == "misclassified") return AttackOutcome::kMisclassified;
  if (name == "abstained") return AttackOutcome::kAbstained;
  if (name == "budget_exhausted") return AttackOutcome::kBudgetExhausted;
  throw InvalidParams("unknown attack outcome '" + std::string(name) + "'");
}

AttackResult pointwise_attack(const Image& image, int label, const BaseClassifier& classifier,
                              const SmoothingConfig& smoothing, const AttackConfig& config,
                              std::string id) {
  config.validate();
  SmoothingConfig oracle_config = smoothing;
  oracle_config.n0 = config.samples;
  SmoothedOracle oracle(classifier, oracle_config, label);

  AttackResult best;
  best.id = std::move(id);
  best.label = label;
  best.adversarial = image;

  if (const auto clean = oracle.adversarial(image)) {
    best.success = true;
    best.magnitude = 0;
    best.outcome = *clean;
    best.queries = oracle.queries();
    return best;
  }

  const int d = image.pixel_count();
  std::vector<int> pixels(static_cast<std::size_t>(d));
  for (int restart = 0; restart < config.restarts; ++restart) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(restart));

    Image current;
    std::optional<AttackOutcome> outcome;
    for (double density : config.densities) {
      const int count = std::clamp(static_cast<int>(std::ceil(density * d)), 1, d);
      current = image;
      std::iota(pixels.begin(), pixels.end(), 0);
      for (int i = 0; i < count; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - i)));
        std::swap(pixels[static_cast<std::size_t>(i)], pixels[static_cast<std::size_t>(j)]);
        const float extreme = (rng() & 1) ? 1.0f : 0.0f;
        auto px = current.pixel(pixels[static_cast<std::size_t>(i)]);
        std::fill(px.begin(), px.end(), extreme);
      }
      outcome = oracle.adversarial(current);
      if (outcome) break;
    }
    if (!outcome) continue;

    std::vector<int> corrupted;
    for (int p = 0; p < d; ++p) {
      const auto a = current.pixel(p);
      if (!std::equal(a.begin(), a.end(), image.pixel(p).begin())) corrupted.push_back(p);
    }
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
      for (std::size_t i = corrupted.size(); i > 1; --i) {
        std::swap(corrupted[i - 1], corrupted[rng.below(i)]);
      }
      std::vector<int> kept;
      for (int p : corrupted) {
        const auto saved = std::vector<float>(current.pixel(p).begin(), current.pixel(p).end());
        restore_pixel(current, image, p);
        if (const auto still = oracle.adversarial(current)) {
          outcome = still;
        } else {
          std::copy(saved.begin(), saved.end(), current.pixel(p).begin());
          kept.push_back(p);
        }
      }
      const bool restored_any = kept.size() < corrupted.size();
      corrupted = std::move(kept);
      if (!restored_any) break;
    }

    const int magnitude = l0_distance(current, image);
    if (!best.magnitude || magnitude < *best.magnitude) {
      best.success = true;
      best.magnitude = magnitude;
      best.outcome = *outcome;
      best.adversarial = std::move(current);
    }
  }
  best.queries = oracle.queries();
  return best;
}

double median_attack_magnitude(std::span<const AttackResult> results) {
  if (results.empty()) throw EmptyResults("no attack results");
  std::vector<double> magnitudes;
  magnitudes.reserve(results.size());
  for (const auto& r : results) {
    magnitudes.push_back(r.success && r.magnitude ? static_cast<double>(*r.magnitude)
                                                  : std::numeric_limits<double>::infinity());
  }
  std::sort(magnitudes.begin(), magnitudes.end());
  const std::size_t n = magnitudes.size();
  if (n % 2 == 1) return magnitudes[n / 2];
  return 0.5 * (magnitudes[n / 2 - 1] + magnitudes[n / 2]);
}

}  // namespace l0cert
