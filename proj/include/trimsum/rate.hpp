#pragma once

#include <span>
#include <utility>

namespace trimsum::mc {

/// Ordinary least squares of ln d on ln k.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double stderr_slope = 0.0;
};

/// points are (scale k, distance d); requires >= 3 points with k, d > 0.
RateFit fit_rate(std::span<const std::pair<double, double>> points);

}  // namespace trimsum::mc
