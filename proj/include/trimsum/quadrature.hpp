#pragma once

#include <cstddef>
#include <functional>

namespace trimsum {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_depth = 60;
  int initial_panels = 16;
  std::size_t max_evaluations = 50'000'000;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

/// Adaptive Simpson with interval bisection and Richardson correction.
/// The relative tolerance is taken against an estimate of the integral of
/// |f| so that integrals that cancel to zero still terminate.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f,
                                  double a, double b,
                                  const QuadratureOptions& options = {});

/// As adaptive_simpson, but throws NumericalError when not converged.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options = {});

}  // namespace trimsum
