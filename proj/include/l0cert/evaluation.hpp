#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l0cert/smoothing.hpp"

namespace l0cert {

/// Fraction of results that are correct with radius >= rho (N/A never counts).
double certified_accuracy_at(std::span<const CertificationResult> results, int rho);

/// Median radius with N/A ranked as -infinity: the largest rho whose
/// certified accuracy is at least one half. nullopt when that element is N/A.
std::optional<int> median_certified_robustness(std::span<const CertificationResult> results);

struct EvaluationReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  std::size_t wrong = 0;
  std::size_t not_applicable = 0;  ///< results whose radius is N/A
  double accuracy = 0.0;
  double abstain_rate = 0.0;
  double error_rate = 0.0;
  int rho_min = 0;
  std::vector<double> certified_accuracy;  ///< index i -> rho_min + i
  std::optional<int> median_radius;
  std::string config_hash;
  double wall_clock_seconds = 0.0;

  /// Human-readable table.
  std::string to_text() const;
};

EvaluationReport summarize(std::span<const CertificationResult> results, int rho_min, int rho_max);

}  // namespace l0cert
