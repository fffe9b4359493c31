#include "trimsum/trim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trimsum/error.hpp"

namespace trimsum::trim {
namespace {

std::size_t ceil_count(double x) {
  // Guard against c n^s landing a rounding error above an integer.
  return static_cast<std::size_t>(std::ceil(x * (1.0 - 1e-13)));
}

std::size_t clamp_side(std::size_t value, std::size_t n) {
  const std::size_t upper = n / 2 - 1;
  return std::clamp<std::size_t>(value, 1, upper);
}

struct Evaluator {
  std::size_t n;

  std::pair<std::size_t, std::size_t> operator()(const PowerRule& r) const {
    const double nd = static_cast<double>(n);
    const std::size_t k = clamp_side(ceil_count(r.c_k * std::pow(nd, r.s_k)), n);
    std::size_t m = 0;
    if (r.m_over_k) {
      m = clamp_side(ceil_count(*r.m_over_k * static_cast<double>(k)), n);
    } else {
      m = clamp_side(ceil_count(r.c_m * std::pow(nd, r.s_m)), n);
    }
    return {k, m};
  }

  std::pair<std::size_t, std::size_t> operator()(const FixedFractions& r) const {
    if (!(r.alpha >= 0.0 && r.alpha < 1.0 && r.beta >= 0.0 && r.beta < 1.0))
      fail(ErrorKind::schedule, "fixed trimming fractions must lie in [0,1)");
    const double nd = static_cast<double>(n);
    return {static_cast<std::size_t>(std::floor(r.alpha * nd + 1e-9)),
            static_cast<std::size_t>(std::floor(r.beta * nd + 1e-9))};
  }

  std::pair<std::size_t, std::size_t> operator()(const ExplicitPair& r) const {
    return {r.k, r.m};
  }

  std::pair<std::size_t, std::size_t> operator()(const ExplicitTable& r) const {
    const auto it = r.pairs.find(n);
    if (it == r.pairs.end()) {
      std::ostringstream msg;
      msg << "explicit schedule has no entry for n=" << n;
      fail(ErrorKind::schedule, msg.str());
    }
    return it->second;
  }
};

}  // namespace

TrimCounts make_counts(std::size_t n, std::size_t k, std::size_t m) {
  if (!(k + m < n)) {
    std::ostringstream msg;
    msg << "infeasible trimming: k=" << k << ", m=" << m << " with n=" << n
        << " violates 0 <= k < n-m <= n";
    fail(ErrorKind::schedule, msg.str());
  }
  const double nd = static_cast<double>(n);
  return {n, k, m, static_cast<double>(k) / nd, static_cast<double>(m) / nd};
}

TrimCounts TrimSchedule::eval(std::size_t n) const {
  require(n >= 4, ErrorKind::precondition, "schedule evaluation requires n >= 4");
  const auto [k, m] = std::visit(Evaluator{n}, rule_);
  return make_counts(n, k, m);
}

SortedSample::SortedSample(std::vector<double> values)
    : values_(std::move(values)) {
  require(!values_.empty(), ErrorKind::precondition,
          "a sample needs at least one observation");
  for (double x : values_)
    require(std::isfinite(x), ErrorKind::precondition,
            "sample contains a non-finite value");
  std::stable_sort(values_.begin(), values_.end());
}

double trimmed_sum(const SortedSample& sample, std::size_t k, std::size_t m) {
  const std::size_t n = sample.size();
  if (!(k + m < n)) {
    std::ostringstream msg;
    msg << "trimmed_sum requires 0 <= k < n-m <= n, got k=" << k << ", m=" << m
        << ", n=" << n;
    fail(ErrorKind::trim, msg.str());
  }
  const auto x = sample.values();
  double sum = 0.0;
  for (std::size_t i = k; i < n - m; ++i) sum += x[i];
  return sum / static_cast<double>(n);
}

PluginMoments plugin_moments(const SortedSample& sample, std::size_t k,
                             std::size_t m) {
  const std::size_t n = sample.size();
  if (!(k >= 1 && m >= 1 && k + m < n)) {
    std::ostringstream msg;
    msg << "plugin_moments requires 1 <= k < n-m <= n-1, got k=" << k
        << ", m=" << m << ", n=" << n;
    fail(ErrorKind::trim, msg.str());
  }
  const auto x = sample.values();
  const double lower = x[k - 1];
  const double upper = x[n - m - 1];
  if (!(lower < upper))
    fail(ErrorKind::degenerate_scale,
         "degenerate empirical window: X_{k:n} = X_{n-m:n}");
  const double nd = static_cast<double>(n);
  const double wk = static_cast<double>(k) / nd;
  const double wm = static_cast<double>(m) / nd;

  double middle = 0.0;
  for (std::size_t i = k; i < n - m; ++i) middle += x[i];
  const double mean = wk * lower + middle / nd + wm * upper;

  double sq = 0.0;
  for (std::size_t i = k; i < n - m; ++i) {
    const double d = x[i] - mean;
    sq += d * d;
  }
  const double dl = lower - mean;
  const double du = upper - mean;
  return {mean, wk * dl * dl + sq / nd + wm * du * du};
}

Centering centering(const dist::DistributionModel& model,
                    const TrimCounts& counts) {
  const auto f = dist::winsorized_moments(model, counts.alpha, counts.beta);
  return {f.trunc_mean, std::sqrt(f.winsor_var)};
}

TrimmedStatistics statistics(const SortedSample& sample,
                             const TrimCounts& counts, const Centering& center) {
  require(sample.size() == counts.n, ErrorKind::precondition,
          "trim counts were evaluated for a different sample size");
  require(center.sigma_w > 0.0, ErrorKind::degenerate_scale,
          "population Winsorized scale must be positive");
  TrimmedStatistics out;
  out.t_n = trimmed_sum(sample, counts.k, counts.m);
  const auto plug = plugin_moments(sample, counts.k, counts.m);
  out.plug_mean = plug.mean;
  out.plug_var = plug.variance;
  const double root_n = std::sqrt(static_cast<double>(counts.n));
  const double centered = root_n * (out.t_n - center.mu_trunc);
  out.normalized = centered / center.sigma_w;
  if (!(out.plug_var > 0.0))
    fail(ErrorKind::degenerate_scale, "plug-in Winsorized variance is zero");
  out.studentized = centered / std::sqrt(out.plug_var);
  return out;
}

TrimmedStatistics statistics(const SortedSample& sample,
                             const TrimSchedule& schedule,
                             const dist::DistributionModel& model) {
  const auto counts = schedule.eval(sample.size());
  return statistics(sample, counts, centering(model, counts));
}

SelectionSummary summarize_by_selection(std::span<double> buffer,
                                        std::size_t k, std::size_t m) {
  const std::size_t n = buffer.size();
  if (!(k >= 1 && m >= 1 && k + m < n))
    fail(ErrorKind::trim, "selection summary requires 1 <= k < n-m <= n-1");
  auto first = buffer.begin();
  std::nth_element(first, first + static_cast<std::ptrdiff_t>(k - 1),
                   buffer.end());
  std::nth_element(first + static_cast<std::ptrdiff_t>(k),
                   first + static_cast<std::ptrdiff_t>(n - m - 1),
                   buffer.end());
  SelectionSummary out;
  out.lower_os = buffer[k - 1];
  out.upper_os = buffer[n - m - 1];
  const double nd = static_cast<double>(n);
  double middle = 0.0;
  for (std::size_t i = k; i < n - m; ++i) middle += buffer[i];
  out.t_n = middle / nd;
  const double wk = static_cast<double>(k) / nd;
  const double wm = static_cast<double>(m) / nd;
  out.plug_mean = wk * out.lower_os + out.t_n + wm * out.upper_os;
  double sq = 0.0;
  for (std::size_t i = k; i < n - m; ++i) {
    const double d = buffer[i] - out.plug_mean;
    sq += d * d;
  }
  const double dl = out.lower_os - out.plug_mean;
  const double du = out.upper_os - out.plug_mean;
  out.plug_var = wk * dl * dl + sq / nd + wm * du * du;
  return out;
}

}  // namespace trimsum::trim
