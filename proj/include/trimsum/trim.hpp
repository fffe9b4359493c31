#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "trimsum/dist.hpp"

namespace trimsum::trim {

/// (k_n, m_n) together with the fractions alpha_n = k_n/n, beta_n = m_n/n.
struct TrimCounts {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct PowerRule {
  double c_k = 1.0;
  double s_k = 0.5;
  double c_m = 1.0;
  double s_m = 0.5;
  /// When set, m = m_over_k * k (after k is clamped) instead of c_m n^s_m.
  std::optional<double> m_over_k;

  bool operator==(const PowerRule&) const = default;
};

struct FixedFractions {
  double alpha = 0.1;
  double beta = 0.1;

  bool operator==(const FixedFractions&) const = default;
};

struct ExplicitPair {
  std::size_t k = 1;
  std::size_t m = 1;

  bool operator==(const ExplicitPair&) const = default;
};

/// Per-n table of explicit (k, m) pairs.
struct ExplicitTable {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> pairs;

  bool operator==(const ExplicitTable&) const = default;
};

using ScheduleRule =
    std::variant<PowerRule, FixedFractions, ExplicitPair, ExplicitTable>;

class TrimSchedule {
 public:
  explicit TrimSchedule(ScheduleRule rule) : rule_(std::move(rule)) {}

  static TrimSchedule power(double c_k, double s_k, double c_m, double s_m) {
    return TrimSchedule(PowerRule{c_k, s_k, c_m, s_m, std::nullopt});
  }
  /// k = ceil(c n^s), m = ratio * k.
  static TrimSchedule power_linked(double c_k, double s_k, double ratio) {
    return TrimSchedule(PowerRule{c_k, s_k, 0.0, 0.0, ratio});
  }
  static TrimSchedule fixed(double alpha, double beta) {
    return TrimSchedule(FixedFractions{alpha, beta});
  }
  static TrimSchedule explicit_pair(std::size_t k, std::size_t m) {
    return TrimSchedule(ExplicitPair{k, m});
  }

  /// Throws schedule error when 0 <= k < n - m <= n fails, precondition
  /// error when n < 4.
  TrimCounts eval(std::size_t n) const;

  const ScheduleRule& rule() const noexcept { return rule_; }
  bool operator==(const TrimSchedule&) const = default;

 private:
  ScheduleRule rule_;
};

inline TrimCounts schedule_eval(const TrimSchedule& schedule, std::size_t n) {
  return schedule.eval(n);
}

/// Builds TrimCounts from explicit (n, k, m), validating the invariant.
TrimCounts make_counts(std::size_t n, std::size_t k, std::size_t m);

/// Nondecreasing order statistics X_{1:n} <= ... <= X_{n:n}.
class SortedSample {
 public:
  /// Sorts the given values; rejects empty or non-finite input.
  explicit SortedSample(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  /// One-based order statistic X_{i:n}.
  double order_stat(std::size_t i) const { return values_.at(i - 1); }

 private:
  std::vector<double> values_;
};

struct PluginMoments {
  double mean = 0.0;      // hat mu_W
  double variance = 0.0;  // hat sigma^2_W
};

struct TrimmedStatistics {
  double t_n = 0.0;
  double plug_mean = 0.0;
  double plug_var = 0.0;
  double normalized = 0.0;
  double studentized = 0.0;
};

/// Population side of the normalization, injected from dist.
struct Centering {
  double mu_trunc = 0.0;  // mu(alpha_n, 1 - beta_n)
  double sigma_w = 0.0;   // sigma_{W(n)}
};

/// T_n = (1/n) sum_{i=k+1}^{n-m} X_{i:n}.
double trimmed_sum(const SortedSample& sample, std::size_t k, std::size_t m);

/// Plug-in Winsorized mean and variance; requires 1 <= k < n-m <= n-1.
PluginMoments plugin_moments(const SortedSample& sample, std::size_t k,
                             std::size_t m);

Centering centering(const dist::DistributionModel& model,
                    const TrimCounts& counts);

TrimmedStatistics statistics(const SortedSample& sample,
                             const TrimSchedule& schedule,
                             const dist::DistributionModel& model);

TrimmedStatistics statistics(const SortedSample& sample,
                             const TrimCounts& counts, const Centering& center);

/// Selection-based summary of an unsorted sample (reorders the buffer).
/// Equivalent to trimmed_sum + plugin_moments but O(n).
struct SelectionSummary {
  double t_n = 0.0;
  double plug_mean = 0.0;
  double plug_var = 0.0;
  double lower_os = 0.0;  // X_{k:n}
  double upper_os = 0.0;  // X_{n-m:n}
};

SelectionSummary summarize_by_selection(std::span<double> buffer,
                                        std::size_t k, std::size_t m);

}  // namespace trimsum::trim
