#include "l0cert/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "l0cert/errors.hpp"

namespace l0cert {
namespace {

void require_nonempty(std::span<const CertificationResult> results) {
  if (results.empty()) throw EmptyResults("no certification results");
}

}  // namespace

double certified_accuracy_at(std::span<const CertificationResult> results, int rho) {
  require_nonempty(results);
  const auto certified = std::count_if(results.begin(), results.end(), [&](const auto& r) {
    return r.radius && *r.radius >= rho;
  });
  return static_cast<double>(certified) / static_cast<double>(results.size());
}

std::optional<int> median_certified_robustness(std::span<const CertificationResult> results) {
  require_nonempty(results);
  constexpr int kNotApplicable = std::numeric_limits<int>::min();
  std::vector<int> radii;
  radii.reserve(results.size());
  for (const auto& r : results) radii.push_back(r.radius ? *r.radius : kNotApplicable);
  // Ascending order; element floor(n/2) is the largest value that at least
  // half of the results reach.
  const auto middle = radii.begin() + static_cast<std::ptrdiff_t>(radii.size() / 2);
  std::nth_element(radii.begin(), middle, radii.end());
  if (*middle == kNotApplicable) return std::nullopt;
  return *middle;
}

EvaluationReport summarize(std::span<const CertificationResult> results, int rho_min, int rho_max) {
  require_nonempty(results);
  if (rho_min < 0 || rho_max < rho_min) throw InvalidParams("invalid rho range");
  EvaluationReport report;
  report.total = results.size();
  for (const auto& r : results) {
    if (r.abstained()) {
      ++report.abstained;
    } else if (r.correct()) {
      ++report.correct;
    } else {
      ++report.wrong;
    }
    if (!r.radius) ++report.not_applicable;
  }
  const auto n = static_cast<double>(report.total);
  report.accuracy = static_cast<double>(report.correct) / n;
  report.abstain_rate = static_cast<double>(report.abstained) / n;
  report.error_rate = static_cast<double>(report.wrong) / n;
  report.rho_min = rho_min;
  for (int rho = rho_min; rho <= rho_max; ++rho) {
    report.certified_accuracy.push_back(certified_accuracy_at(results, rho));
  }
  report.median_radius = median_certified_robustness(results);
  return report;
}

std::string EvaluationReport::to_text() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "images                      %zu\n", total);
  out << line;
  std::snprintf(line, sizeof line, "classification accuracy     %.2f%% (%.2f%% abstained)\n",
                100.0 * accuracy, 100.0 * abstain_rate);
  out << line;
  std::snprintf(line, sizeof line, "misclassified               %.2f%%\n", 100.0 * error_rate);
  out << line;
  out << "median certified robustness " << (median_radius ? std::to_string(*median_radius) : "N/A") << '\n';
  out << "certified accuracy:\n  rho  accuracy\n";
  for (std::size_t i = 0; i < certified_accuracy.size(); ++i) {
    std::snprintf(line, sizeof line, "  %3d  %.4f\n", rho_min + static_cast<int>(i), certified_accuracy[i]);
    out << line;
  }
  if (!config_hash.empty()) out << "config hash " << config_hash << '\n';
  std::snprintf(line, sizeof line, "wall clock                  %.1f s\n", wall_clock_seconds);
  out << line;
  return out.str();
}

}  // namespace l0cert
