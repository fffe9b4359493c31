#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trimsum/dist.hpp"
#include "trimsum/trim.hpp"

namespace trimsum::conditions {

enum class Side { lower, upper };
enum class HKind { x, inv_f, x_over_f };

std::string to_string(Side side);
std::string to_string(HKind kind);

struct PsiOptions {
  std::size_t grid_points = 2001;
  std::size_t refine_points = 201;
  /// Use ln n in the window instead of ln k (the light-tail variant of the
  /// Bahadur-Kiefer lemmas).
  bool log_n = false;
};

/// Psi_{nu,h}(B) for an arbitrary h evaluated at quantiles. The trimming
/// level and count on the chosen side come from counts.
double psi_sup(const dist::DistributionModel& model,
               const trim::TrimCounts& counts, Side side,
               const std::function<double(double)>& h, double B,
               const PsiOptions& options = {});

double psi_sup(const dist::DistributionModel& model,
               const trim::TrimCounts& counts, Side side, HKind h, double B,
               const PsiOptions& options = {});

double psi_sup(const dist::DistributionModel& model, std::size_t n,
               const trim::TrimSchedule& schedule, Side side, HKind h,
               double B, const PsiOptions& options = {});

/// Evaluates h(x) for one of the built-in kinds.
double h_value(const dist::DistributionModel& model, HKind h, double x);

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict verdict);

struct ConditionEntry {
  std::string name;
  std::vector<double> values;      // defining quantity per grid point
  std::optional<double> slope;     // log-log slope against n
  std::optional<double> spread;    // max / min over the grid
  Verdict verdict = Verdict::inconclusive;
  std::string note;
};

struct GridPoint {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double q_alpha = 0.0;
  double q_beta = 0.0;
};

struct PsiValue {
  std::size_t n = 0;
  Side side = Side::lower;
  HKind h = HKind::inv_f;
  double B = 0.0;
  double value = 0.0;
};

struct NamedValue {
  std::string name;
  double value = 0.0;
};

struct BoundTermRow {
  std::size_t n = 0;
  std::vector<NamedValue> terms;
};

struct AuditOptions {
  double B = 2.0;
  double epsilon = 0.1;
  double s = 0.5;            // exponent in [L]
  double bound_constant_B = 2.0;
  std::uint64_t seed = 0x5EEDu;
  std::size_t r_pairs = 100;
};

struct ConditionReport {
  std::vector<GridPoint> grid;
  std::vector<ConditionEntry> entries;
  std::vector<PsiValue> psi_values;
  std::map<std::string, std::vector<BoundTermRow>> bound_terms;
  std::vector<std::string> limitations;

  const ConditionEntry& entry(const std::string& name) const;
  bool any_fail() const;
};

/// Requires an increasing grid of length >= 3.
ConditionReport audit_conditions(const dist::DistributionModel& model,
                                 const trim::TrimSchedule& schedule,
                                 const std::vector<std::size_t>& n_grid,
                                 const AuditOptions& options = {});

enum class Theorem { thm1_1, thm1_4, studentized };
std::string to_string(Theorem which);

/// Bound ingredients of the rate theorems, each with its 1/sqrt(n), 1/n or
/// n^{-3/4} prefactor applied. bound_constant_B is the constant multiplying
/// the studentized delta_2(n).
std::vector<NamedValue> bound_terms(const dist::DistributionModel& model,
                                    const trim::TrimSchedule& schedule,
                                    std::size_t n, Theorem which, double B,
                                    double epsilon,
                                    double bound_constant_B = 2.0);

/// Verdict rules, exposed for tests.
Verdict decay_verdict(double slope);
Verdict bounded_verdict(double spread, double slope);

}  // namespace trimsum::conditions
