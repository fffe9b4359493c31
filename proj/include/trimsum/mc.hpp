#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trimsum/dist.hpp"
#include "trimsum/edgeworth.hpp"
#include "trimsum/rate.hpp"
#include "trimsum/trim.hpp"

namespace trimsum::mc {

/// Right-continuous step function with jumps of 1/count at the values.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);

  std::size_t count() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(double x) const;
  /// Left limit F(x-).
  double left_limit(double x) const;

 private:
  std::vector<double> values_;
};

/// sup_x |F_hat(x) - target(x)|, exact over the jump points.
double ks_distance(const EmpiricalCdf& ecdf,
                   const std::function<double(double)>& target);

enum class Statistic { normalized, studentized };
enum class Target { normal, gn, hn };

std::string to_string(Statistic s);
std::string to_string(Target t);
Statistic statistic_from_string(const std::string& s);
Target target_from_string(const std::string& s);

struct SimulationPlan {
  dist::ModelSpec model;
  trim::TrimSchedule schedule = trim::TrimSchedule::power(1.0, 0.6, 2.0, 0.6);
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1000;
  Statistic statistic = Statistic::normalized;
  std::vector<Target> targets{Target::normal, Target::gn, Target::hn};
  std::uint64_t seed = 1;
  /// Worker cap; 0 defers to TRIMSUM_THREADS and then to the hardware.
  std::size_t threads = 0;
  /// Replace the statistic by exact standard normal draws.
  bool calibration = false;
};

/// Throws configuration error on a malformed plan.
void validate(const SimulationPlan& plan);

/// Number of workers after applying the plan cap, TRIMSUM_THREADS and the
/// hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

/// Both statistics of every replication at one grid point. Degenerate
/// replications are dropped and counted.
struct Replications {
  std::vector<double> normalized;
  std::vector<double> studentized;
  std::size_t flagged = 0;
};

Replications replicate(const dist::DistributionModel& model,
                       const trim::TrimCounts& counts,
                       const trim::Centering& center, std::size_t replications,
                       std::uint64_t seed, std::uint32_t grid_point,
                       std::size_t threads);

/// Runs body(r) for r in [0, count) on up to `threads` workers; body must
/// only write to slots owned by r.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

struct GridResult {
  std::size_t n = 0;
  trim::TrimCounts counts;
  std::size_t replications = 0;
  std::size_t flagged = 0;
  Statistic statistic = Statistic::normalized;
  EmpiricalCdf ecdf{std::vector<double>{0.0}};
  std::map<Target, double> distance;
  edgeworth::ExpansionTerms terms;
};

std::vector<GridResult> run_simulation(const SimulationPlan& plan);

/// Target df selected by name for one set of expansion terms.
std::function<double(double)> target_cdf(Target target,
                                         const edgeworth::ExpansionTerms& terms);

/// Fit of D_target against k_n over the grid.
RateFit rate_of(const std::vector<GridResult>& results, Target target);

}  // namespace trimsum::mc
