#pragma once

#include <optional>

namespace l0cert {

/// Image size, retention constant and L0 budget for the bounding constant.
struct DeltaParams {
  int d = 0;    ///< total pixel count
  int k = 0;    ///< pixels retained per ablated sample
  int rho = 0;  ///< L0 perturbation budget

  void validate() const;
};

/// Largest possible change of any smoothed class probability when at most
/// `rho` pixels change: 1 - C(d - rho, k) / C(d, k).
///
/// Evaluated as a product of min(k, rho) factors accumulated in log space,
/// so it stays accurate for ImageNet-sized d. Exactly 1 once rho > d - k.
double delta(const DeltaParams& params);

/// Largest rho with p_lower - delta(rho) > 0.5, or nullopt when even rho = 0
/// fails. Ties at the threshold do not certify.
std::optional<int> max_certified_radius(double p_lower, int d, int k);

/// Largest rho with p_top_lower - delta(rho) > p_runner_up_upper + delta(rho).
std::optional<int> max_certified_radius_pairwise(double p_top_lower, double p_runner_up_upper,
                                                 int d, int k);

}  // namespace l0cert
