#pragma once

// Log-log power-law regression.

#include <span>
#include <vector>

namespace collapse {

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;     // log of the prefactor
  double max_residual = 0.0;  // max |log y - fit| over the used points
  int points = 0;
};

// least-squares fit of log y = intercept + slope log x over points with x, y > 0
PowerFit fit_power_law(std::span<const double> x, std::span<const double> y);

// same, restricted to lo <= x <= hi
PowerFit fit_power_law(std::span<const double> x, std::span<const double> y, double lo, double hi);

}  // namespace collapse
