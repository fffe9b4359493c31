#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trimsum/dist.hpp"
#include "trimsum/trim.hpp"

namespace trimsum::orderstat {

/// A monotone differentiable G supplied together with g = G'.
struct GFunction {
  std::string tag;
  std::function<double(double)> G;
  std::function<double(double)> g;

  static GFunction identity();
  static GFunction square();
  /// Looks up "identity" or "square"; configuration error otherwise.
  static GFunction from_tag(const std::string& tag);
};

struct BkOptions {
  double A = 1.0;
  double B = 2.0;
  /// Replace ln k by ln n in the bound and in the Psi window.
  bool log_n = false;
};

struct BkRemainder {
  double remainder = 0.0;
  double bound = 0.0;
  double leading = 0.0;
  double observed = 0.0;  // remainder = observed - leading
  std::string g_kind;
};

/// Population side at xi_alpha for one (n, k), shared by replications.
struct BkContext {
  trim::TrimCounts counts;
  GFunction g;
  double xi = 0.0;
  double G_xi = 0.0;
  double g_over_f = 0.0;
  // Both NaN when the Psi window does not fit at this n.
  double bound_point = 0.0;
  double bound_integral = 0.0;
};

BkContext make_context(const dist::DistributionModel& model,
                       const trim::TrimCounts& counts, GFunction g,
                       const BkOptions& options = {});

/// G(X_{k:n}) - G(xi_alpha) linearized by the empirical df at xi_alpha.
BkRemainder bk_point(const trim::SortedSample& sample, const BkContext& ctx);

/// Same on an unsorted buffer via selection; reorders the buffer.
BkRemainder bk_point_selection(std::span<double> buffer, const BkContext& ctx);

/// Empirical integral of G - G(xi_alpha) between X_{k:n} and xi_alpha,
/// linearized by the squared empirical-df deviation.
BkRemainder bk_integral(const trim::SortedSample& sample, const BkContext& ctx);

BkRemainder bk_point(const trim::SortedSample& sample,
                     const dist::DistributionModel& model,
                     const trim::TrimSchedule& schedule, const GFunction& g,
                     const BkOptions& options = {});

BkRemainder bk_integral(const trim::SortedSample& sample,
                        const dist::DistributionModel& model,
                        const trim::TrimSchedule& schedule, const GFunction& g,
                        const BkOptions& options = {});

struct BkBatch {
  std::vector<BkRemainder> point;
  std::vector<BkRemainder> integral;  // empty unless requested
};

/// Independent replications at one grid point, indexed by replication.
BkBatch simulate_bk(const dist::DistributionModel& model, const BkContext& ctx,
                    std::size_t replications, bool with_integral,
                    std::uint64_t seed, std::uint32_t grid_point,
                    std::size_t threads);

/// how_many batches of the first k order statistics of a uniform n-sample
/// conditioned on exactly k values <= alpha, i.e. sorted uniforms on
/// (0, alpha).
std::vector<std::vector<double>> conditional_orderstat_sample(
    double alpha, std::size_t n, std::size_t k, std::size_t how_many,
    std::uint64_t seed);

}  // namespace trimsum::orderstat
