#pragma once

#include <string>
#include <vector>

namespace l0cert {

/// Bits about a uniformly distributed image revealed by k retained pixels
/// over an alphabet of s_size values: k * log2(s_size).
double mutual_info_ablate(double k, int s_size);

/// Bits revealed when each of d pixels is kept with probability kappa and
/// otherwise replaced by a uniformly chosen different value:
///   d * (log2|S| + kappa log2 kappa + (1 - kappa) log2((1 - kappa) / (|S| - 1))),
/// with x log2 x taken as 0 at x = 0. Assumes uniformly distributed images.
double mutual_info_substitution(double d, int s_size, double kappa);

struct DeltaCurve {
  int d = 0;
  std::vector<int> ks;
  std::vector<int> rhos;
  std::vector<std::vector<double>> values;  ///< values[rho_index][k_index]

  /// Comma-separated table: header "rho,k=<k>,...", one row per rho.
  std::string to_csv() const;
};

DeltaCurve delta_curve(int d, const std::vector<int>& ks, int rho_min, int rho_max);

}  // namespace l0cert
