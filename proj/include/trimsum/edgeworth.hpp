#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trimsum/dist.hpp"
#include "trimsum/rate.hpp"
#include "trimsum/trim.hpp"

namespace trimsum::edgeworth {

/// Ingredients of the one-term expansions G_n and H_n at one (n, k, m).
struct ExpansionTerms {
  double lambda1 = 0.0;   // gamma_{3,W} / sigma_W^3
  double lambda2 = 0.0;   // delta_{2,W} / sigma_W^3
  double delta2w = 0.0;
  double b_n = 0.0;       // bias term
  double sigma_w = 1.0;
  double mu_trunc = 0.0;  // mu(alpha, 1 - beta)
  double mu_w = 0.0;
  double gamma3w = 0.0;
  double xi_lower = 0.0;
  double xi_upper = 0.0;
  double f_lower = 0.0;   // f(xi_alpha)
  double f_upper = 0.0;   // f(xi_{1-beta})
  double q_alpha = 0.0;
  double q_beta = 0.0;
  std::size_t n = 1;
  trim::TrimCounts trim;

  double bias_ratio() const noexcept { return b_n / sigma_w; }
  ExpansionTerms scaled(double t) const;
};

ExpansionTerms expansion_terms(const dist::DistributionModel& model,
                               const trim::TrimCounts& counts);

ExpansionTerms expansion_terms(const dist::DistributionModel& model,
                               std::size_t n,
                               const trim::TrimSchedule& schedule);

/// Terms built directly from (n, lambda1, lambda2, b_n / sigma_W); used for
/// estimated expansions where no population model exists.
ExpansionTerms terms_from_ratios(std::size_t n, double lambda1, double lambda2,
                                 double bias_ratio);

double gn_eval(const ExpansionTerms& terms, double x);
double hn_eval(const ExpansionTerms& terms, double x);
/// d H_n / dx.
double hn_density(const ExpansionTerms& terms, double x);

struct Inversion {
  double x = 0.0;
  bool fallback = false;  // H_n non-monotone at the root; Phi^{-1}(q) used
};

/// Solves H_n(x) = q by bisection on [-10, 10].
Inversion invert_expansion(const ExpansionTerms& terms, double q);

struct MagnitudeRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  double t1 = 0.0;  // lambda1 / sqrt(n)
  double t2 = 0.0;  // lambda2 / sqrt(n)
  double t3 = 0.0;  // b_n / sigma_W
  std::string dominant;
};

struct TermMagnitudes {
  std::vector<MagnitudeRow> rows;
  /// Fitted exponents of |t_j| against min(k, m); absent when a term is
  /// identically zero on the grid.
  std::optional<mc::RateFit> fit_t1, fit_t2, fit_t3, fit_skew;
};

TermMagnitudes term_magnitudes(const dist::DistributionModel& model,
                               const trim::TrimSchedule& schedule,
                               const std::vector<std::size_t>& n_grid);

}  // namespace trimsum::edgeworth
