#include "trimsum/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trimsum/conditions.hpp"
#include "trimsum/error.hpp"
#include "trimsum/mc.hpp"
#include "trimsum/rng.hpp"

namespace trimsum::ustat {

Context make_context(const dist::DistributionModel& model,
                     const trim::TrimCounts& counts, Constants constants) {
  Context c;
  c.terms = edgeworth::expansion_terms(model, counts);
  c.constants = constants;
  const double n = static_cast<double>(counts.n);
  const double root_n = std::sqrt(n);
  auto side = [&](conditions::Side s, double level, std::size_t count,
                  double f) {
    const double lk = std::log(static_cast<double>(count));
    const double psi =
        conditions::psi_sup(model, counts, s, conditions::HKind::inv_f,
                            constants.B);
    return level * lk / root_n *
           ((1.0 / f) * std::pow(lk / static_cast<double>(count), 0.25) + psi);
  };
  // At small n the Psi window leaves (0,1); the decomposition itself is still
  // defined, only its bound is not.
  try {
    c.delta_n = constants.A *
                (side(conditions::Side::lower, counts.alpha, counts.k,
                      c.terms.f_lower) +
                 side(conditions::Side::upper, counts.beta, counts.m,
                      c.terms.f_upper));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::too_small_n) throw;
    c.delta_n = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

namespace {

// Sum over pairs i<j of c_i c_j where c takes 1-p on `below` points and -p on
// the rest, grouped by the three kinds of pair.
double pair_sum(std::size_t below, std::size_t n, double p) {
  const double a = static_cast<double>(below);
  const double r = static_cast<double>(n - below);
  const double q = 1.0 - p;
  return 0.5 * a * (a - 1.0) * q * q - a * r * q * p + 0.5 * r * (r - 1.0) * p * p;
}

}  // namespace

UStatDecomposition components(std::span<const double> values, double t_n,
                              const Context& context) {
  const auto& t = context.terms;
  const std::size_t n = values.size();
  require(n == t.n, ErrorKind::precondition,
          "decomposition context was built for a different n");
  const double alpha = t.trim.alpha;
  const double upper_level = 1.0 - t.trim.beta;
  const double lo = t.xi_lower, hi = t.xi_upper;

  double w_sum = 0.0;
  std::size_t n_a = 0, n_b = 0;
  for (double x : values) {
    n_a += x <= lo;
    n_b += x <= hi;
    w_sum += std::clamp(x, lo, hi);
  }
  const double nd = static_cast<double>(n);
  const double root_n = std::sqrt(nd);

  UStatDecomposition d;
  d.l_n = (w_sum - nd * t.mu_w) / root_n;
  d.u_n = (-pair_sum(n_a, n, alpha) / t.f_lower +
           pair_sum(n_b, n, upper_level) / t.f_upper) /
          (nd * root_n);
  d.b_n = t.b_n;
  d.target = root_n * (t_n - t.mu_trunc);
  d.remainder = d.target - d.l_n - d.u_n - d.b_n;
  d.delta_n = context.delta_n;
  d.n_alpha = n_a;
  d.n_beta = n_b;
  return d;
}

UStatDecomposition components(const trim::SortedSample& sample,
                              const dist::DistributionModel& model,
                              const trim::TrimSchedule& schedule,
                              Constants constants) {
  const auto counts = schedule.eval(sample.size());
  const auto context = make_context(model, counts, constants);
  return components(sample.values(),
                    trim::trimmed_sum(sample, counts.k, counts.m), context);
}

double u_statistic_bruteforce(std::span<const double> values,
                              const Context& context) {
  const auto& t = context.terms;
  const std::size_t n = values.size();
  const double alpha = t.trim.alpha;
  const double upper_level = 1.0 - t.trim.beta;
  auto ia = [&](double x) { return (x <= t.xi_lower ? 1.0 : 0.0) - alpha; };
  auto ib = [&](double x) {
    return (x <= t.xi_upper ? 1.0 : 0.0) - upper_level;
  };
  const double scale = 1.0 / (static_cast<double>(n) *
                              std::sqrt(static_cast<double>(n)));
  long double sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += -static_cast<long double>(ia(values[i]) * ia(values[j])) / t.f_lower +
             static_cast<long double>(ib(values[i]) * ib(values[j])) / t.f_upper;
    }
  }
  return static_cast<double>(sum * scale);
}

VnTerms vn_terms(const trim::SortedSample& sample, const Context& context) {
  const auto& t = context.terms;
  const std::size_t n = sample.size();
  require(n == t.n, ErrorKind::precondition,
          "decomposition context was built for a different n");
  const double nd = static_cast<double>(n);
  const double sigma2 = t.sigma_w * t.sigma_w;
  std::size_t n_a = 0, n_b = 0;
  double v2 = 0.0;
  for (double x : sample.values()) {
    n_a += x <= t.xi_lower;
    n_b += x <= t.xi_upper;
    const double w = std::clamp(x, t.xi_lower, t.xi_upper) - t.mu_w;
    v2 += w * w - sigma2;
  }
  VnTerms v;
  const double alpha = t.trim.alpha, beta = t.trim.beta;
  v.v_n1 = 2.0 * (alpha / t.f_lower) *
               ((static_cast<double>(n_a) - alpha * nd) / nd) *
               (t.mu_w - t.xi_lower) +
           2.0 * (beta / t.f_upper) *
               ((static_cast<double>(n_b) - (1.0 - beta) * nd) / nd) *
               (t.mu_w - t.xi_upper);
  v.v_n2 = v2 / nd;
  v.v_n = v.v_n1 + v.v_n2;
  v.predicted_ratio = 1.0 + v.v_n / sigma2;
  const auto plug = trim::plugin_moments(sample, t.trim.k, t.trim.m);
  v.observed_ratio = plug.variance / sigma2;
  return v;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[j] - sorted[i]);
}

}  // namespace

RemainderSummary summarize(std::span<const UStatDecomposition> batch) {
  if (batch.empty())
    fail(ErrorKind::empty_summary, "remainder summary of an empty batch");
  std::vector<double> abs_r, ratio;
  abs_r.reserve(batch.size());
  ratio.reserve(batch.size());
  double mx = 0.0, my = 0.0;
  for (const auto& d : batch) {
    abs_r.push_back(std::abs(d.remainder));
    if (std::isfinite(d.delta_n)) ratio.push_back(std::abs(d.remainder) / d.delta_n);
    mx += d.target;
    my += d.l_n + d.u_n + d.b_n;
  }
  const double nb = static_cast<double>(batch.size());
  mx /= nb;
  my /= nb;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& d : batch) {
    const double dx = d.target - mx;
    const double dy = d.l_n + d.u_n + d.b_n - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  std::sort(abs_r.begin(), abs_r.end());
  std::sort(ratio.begin(), ratio.end());
  RemainderSummary s;
  s.count = batch.size();
  s.abs_p50 = quantile_sorted(abs_r, 0.5);
  s.abs_p95 = quantile_sorted(abs_r, 0.95);
  s.abs_p99 = quantile_sorted(abs_r, 0.99);
  if (ratio.size() == batch.size()) {
    s.ratio_p50 = quantile_sorted(ratio, 0.5);
    s.ratio_p95 = quantile_sorted(ratio, 0.95);
    s.ratio_p99 = quantile_sorted(ratio, 0.99);
  } else {
    s.ratio_p50 = s.ratio_p95 = s.ratio_p99 = std::numeric_limits<double>::quiet_NaN();
  }
  s.correlation = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  return s;
}

RemainderSummary decomposition_remainder(
    const std::vector<std::vector<double>>& samples,
    const dist::DistributionModel& model, const trim::TrimSchedule& schedule,
    Constants constants) {
  if (samples.empty())
    fail(ErrorKind::empty_summary, "remainder summary of an empty batch");
  const std::size_t n = samples.front().size();
  const auto counts = schedule.eval(n);
  const auto context = make_context(model, counts, constants);
  std::vector<UStatDecomposition> out;
  out.reserve(samples.size());
  for (const auto& raw : samples) {
    require(raw.size() == n, ErrorKind::precondition,
            "remainder batch mixes sample sizes");
    const trim::SortedSample sorted(raw);
    out.push_back(components(raw, trim::trimmed_sum(sorted, counts.k, counts.m),
                             context));
  }
  return summarize(out);
}

AnalyticMoments analytic_moments(const edgeworth::ExpansionTerms& t) {
  const double n = static_cast<double>(t.n);
  const double a = t.trim.alpha, b = t.trim.beta;
  const double fa = t.f_lower, fb = t.f_upper;
  // E(n^{3/2} U_12)^2 from the indicator covariances.
  const double kernel2 = a * a * (1.0 - a) * (1.0 - a) / (fa * fa) +
                         b * b * (1.0 - b) * (1.0 - b) / (fb * fb) -
                         2.0 * a * a * b * b / (fa * fb);
  AnalyticMoments m;
  m.epsilon = (n - 1.0) / (2.0 * n * n) * kernel2 / (t.sigma_w * t.sigma_w);
  m.second = 1.0 + m.epsilon;
  m.epsilon_bound = t.q_alpha * t.q_alpha + t.q_beta * t.q_beta;
  m.third_leading = (t.lambda1 + 3.0 * t.lambda2) / std::sqrt(n);
  return m;
}

AnalyticMoments analytic_moments(const dist::DistributionModel& model,
                                 std::size_t n,
                                 const trim::TrimSchedule& schedule) {
  return analytic_moments(edgeworth::expansion_terms(model, n, schedule));
}

std::vector<UStatDecomposition> simulate_decompositions(
    const dist::DistributionModel& model, const Context& context,
    std::size_t replications, std::uint64_t seed, std::uint32_t grid_point,
    std::size_t threads) {
  const auto& counts = context.terms.trim;
  const auto& family = model.family();
  std::vector<UStatDecomposition> out(replications);
  mc::parallel_for(replications, threads, [&](std::size_t r) {
    thread_local std::vector<double> buffer;
    buffer.resize(counts.n);
    UniformStream u(seed, static_cast<std::uint32_t>(r), grid_point, 1);
    for (auto& x : buffer) x = family.quantile(u.next());
    const auto s = trim::summarize_by_selection(buffer, counts.k, counts.m);
    out[r] = components(buffer, s.t_n, context);
  });
  return out;
}

}  // namespace trimsum::ustat
