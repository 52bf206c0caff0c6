#include "collapse/fit.hpp"

#include <algorithm>
#include <boost/math/statistics/linear_regression.hpp>
#include <cmath>
#include <stdexcept>

namespace collapse {

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y, double lo, double hi) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || x[i] < lo || x[i] > hi) continue;
    if (!std::isfinite(y[i])) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 2) throw std::runtime_error("fit_power_law: fewer than two usable points");
  const auto [c0, c1] = boost::math::statistics::simple_ordinary_least_squares(lx, ly);
  PowerFit f;
  f.slope = c1;
  f.intercept = c0;
  f.points = static_cast<int>(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) f.max_residual = std::max(f.max_residual, std::abs(ly[i] - c0 - c1 * lx[i]));
  return f;
}

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  return fit_power_law(x, y, 0.0, INFINITY);
}

}  // namespace collapse
