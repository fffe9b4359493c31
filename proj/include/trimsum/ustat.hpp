#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trimsum/dist.hpp"
#include "trimsum/edgeworth.hpp"
#include "trimsum/trim.hpp"

namespace trimsum::ustat {

/// The unspecified constants (A, B) of the remainder bound.
struct Constants {
  double A = 1.0;
  double B = 2.0;
};

/// Population side of the decomposition at one (n, k, m), reusable across
/// replications.
struct Context {
  edgeworth::ExpansionTerms terms;
  double delta_n = 0.0;  // NaN when the Psi window does not fit at this n
  Constants constants;
};

Context make_context(const dist::DistributionModel& model,
                     const trim::TrimCounts& counts, Constants constants = {});

struct UStatDecomposition {
  double l_n = 0.0;
  double u_n = 0.0;
  double b_n = 0.0;
  double target = 0.0;     // sqrt(n) (T_n - mu(alpha, 1 - beta))
  double remainder = 0.0;  // target - l_n - u_n - b_n
  double delta_n = 0.0;
  std::size_t n_alpha = 0;  // #{X_i <= xi_alpha}
  std::size_t n_beta = 0;   // #{X_i <= xi_{1-beta}}
};

/// Decomposition from the raw values (any order) and the trimmed sum.
UStatDecomposition components(std::span<const double> values, double t_n,
                              const Context& context);

UStatDecomposition components(const trim::SortedSample& sample,
                              const dist::DistributionModel& model,
                              const trim::TrimSchedule& schedule,
                              Constants constants = {});

/// Pairwise U_n by the explicit double sum; test oracle for the O(n) path.
double u_statistic_bruteforce(std::span<const double> values,
                              const Context& context);

struct VnTerms {
  double v_n1 = 0.0;
  double v_n2 = 0.0;
  double v_n = 0.0;
  double predicted_ratio = 0.0;  // 1 + V_n / sigma_W^2
  double observed_ratio = 0.0;   // hat sigma^2_W / sigma_W^2
};

VnTerms vn_terms(const trim::SortedSample& sample, const Context& context);

struct RemainderSummary {
  std::size_t count = 0;
  double abs_p50 = 0.0, abs_p95 = 0.0, abs_p99 = 0.0;
  double ratio_p50 = 0.0, ratio_p95 = 0.0, ratio_p99 = 0.0;
  double correlation = 0.0;  // corr(target, l_n + u_n + b_n)
};

/// Throws empty_summary on an empty batch.
RemainderSummary summarize(std::span<const UStatDecomposition> batch);

RemainderSummary decomposition_remainder(
    const std::vector<std::vector<double>>& samples,
    const dist::DistributionModel& model, const trim::TrimSchedule& schedule,
    Constants constants = {});

struct AnalyticMoments {
  double second = 0.0;         // 1 + eps_n
  double epsilon = 0.0;
  double epsilon_bound = 0.0;  // q_alpha^2 + q_beta^2
  double third_leading = 0.0;  // (lambda1 + 3 lambda2) / sqrt(n)
};

AnalyticMoments analytic_moments(const dist::DistributionModel& model,
                                 std::size_t n,
                                 const trim::TrimSchedule& schedule);

AnalyticMoments analytic_moments(const edgeworth::ExpansionTerms& terms);

/// Decompositions of `replications` independent samples at one grid point,
/// indexed by replication.
std::vector<UStatDecomposition> simulate_decompositions(
    const dist::DistributionModel& model, const Context& context,
    std::size_t replications, std::uint64_t seed, std::uint32_t grid_point,
    std::size_t threads);

}  // namespace trimsum::ustat
