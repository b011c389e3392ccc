#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l0cert/smoothing.hpp"

namespace l0cert {

struct AttackConfig {
  int restarts = 10;
  std::int64_t samples = 10000;  ///< ablated samples per smoothed-model query
  /// Salt-and-pepper fractions tried in order until the image is adversarial.
  std::vector<double> densities = {0.01, 0.02, 0.05, 0.10, 0.20, 0.50, 1.0};
  int max_sweeps = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class AttackOutcome { kMisclassified, kAbstained, kBudgetExhausted };

std::string_view to_string(AttackOutcome outcome);
AttackOutcome parse_attack_outcome(std::string_view name);

struct AttackResult {
  std::string id;
  int label = 0;
  bool success = false;
  Image adversarial;
  std::optional<int> magnitude;  ///< L0 distance; nullopt = no adversarial found
  AttackOutcome outcome = AttackOutcome::kBudgetExhausted;
  std::int64_t queries = 0;  ///< smoothed-model evaluations spent
};

/// Black-box Pointwise L0 attack on the smoothed classifier. An abstention
/// counts as adversarial. Each restart r draws from stream (seed, r): it adds
/// salt-and-pepper noise at increasing densities until the prediction breaks,
/// then restores corrupted pixels one at a time, keeping every restoration that
/// leaves the image adversarial, until a full sweep restores nothing. The
/// smallest adversarial image over all restarts is returned. A failed attack
/// (no density breaks the prediction) has outcome kBudgetExhausted.
AttackResult pointwise_attack(const Image& image, int label, const BaseClassifier& classifier,
                              const SmoothingConfig& smoothing, const AttackConfig& config,
                              std::string id = {});

/// Median magnitude with failed attacks counted as +infinity.
double median_attack_magnitude(std::span<const AttackResult> results);

}  // namespace l0cert
