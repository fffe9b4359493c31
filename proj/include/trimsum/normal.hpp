#pragma once

#include <cmath>
#include <numbers>

namespace trimsum {

inline double normal_pdf(double x) noexcept {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684759;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// erfc keeps full relative precision in the lower tail.
inline double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Inverse of normal_cdf on (0,1); returns -inf/+inf at 0/1 and NaN outside.
double normal_quantile(double p);

}  // namespace trimsum
