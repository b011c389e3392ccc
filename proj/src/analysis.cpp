#include "l0cert/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "l0cert/combinatorics.hpp"
#include "l0cert/errors.hpp"

namespace l0cert {
namespace {

// x * log2(x / y), continuous at x = 0.
double x_log2_ratio(double x, double y) { return x == 0.0 ? 0.0 : x * std::log2(x / y); }

}  // namespace

double mutual_info_ablate(double k, int s_size) {
  if (k < 0.0 || s_size < 2) throw InvalidParams("mutual_info_ablate needs k >= 0 and |S| >= 2");
  return k * std::log2(static_cast<double>(s_size));
}

double mutual_info_substitution(double d, int s_size, double kappa) {
  if (d < 0.0 || s_size < 2 || !(kappa >= 0.0 && kappa <= 1.0)) {
    throw InvalidParams("mutual_info_substitution needs d >= 0, |S| >= 2, kappa in [0, 1]");
  }
  const double symbols = static_cast<double>(s_size);
  return d * (std::log2(symbols) + x_log2_ratio(kappa, 1.0) +
              x_log2_ratio(1.0 - kappa, symbols - 1.0));
}

DeltaCurve delta_curve(int d, const std::vector<int>& ks, int rho_min, int rho_max) {
  if (ks.empty()) throw InvalidParams("delta_curve needs at least one k");
  if (rho_min < 0 || rho_max < rho_min || rho_max > d) throw InvalidParams("invalid rho range");
  DeltaCurve curve;
  curve.d = d;
  curve.ks = ks;
  for (int rho = rho_min; rho <= rho_max; ++rho) {
    curve.rhos.push_back(rho);
    std::vector<double> row;
    row.reserve(ks.size());
    for (int k : ks) row.push_back(delta({d, k, rho}));
    curve.values.push_back(std::move(row));
  }
  return curve;
}

std::string DeltaCurve::to_csv() const {
  std::ostringstream out;
  out << "rho";
  for (int k : ks) out << ",k=" << k;
  out << '\n';
  char cell[32];
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    out << rhos[i];
    for (double v : values[i]) {
      std::snprintf(cell, sizeof cell, ",%.10f", v);
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace l0cert
