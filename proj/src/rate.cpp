#include "trimsum/rate.hpp"

#include <cmath>
#include <vector>

#include "trimsum/error.hpp"

namespace trimsum::mc {

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  require(points.size() >= 3, ErrorKind::precondition,
          "fit_rate needs at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [k, d] : points) {
    if (!(k > 0.0 && d > 0.0) || !std::isfinite(k) || !std::isfinite(d))
      fail(ErrorKind::domain, "fit_rate requires positive finite inputs");
    lx.push_back(std::log(k));
    ly.push_back(std::log(d));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, ErrorKind::domain, "fit_rate needs distinct scales");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  fit.stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
  return fit;
}

}  // namespace trimsum::mc
