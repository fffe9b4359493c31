#include "trimsum/orderstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trimsum/conditions.hpp"
#include "trimsum/error.hpp"
#include "trimsum/mc.hpp"
#include "trimsum/rng.hpp"

namespace trimsum::orderstat {

GFunction GFunction::identity() {
  return {"identity", [](double x) { return x; }, [](double) { return 1.0; }};
}

GFunction GFunction::square() {
  return {"square", [](double x) { return x * x; },
          [](double x) { return 2.0 * x; }};
}

GFunction GFunction::from_tag(const std::string& tag) {
  if (tag == "identity") return identity();
  if (tag == "square") return square();
  fail(ErrorKind::configuration,
       "unknown G '" + tag + "' (expected identity or square)");
}

BkContext make_context(const dist::DistributionModel& model,
                       const trim::TrimCounts& counts, GFunction g,
                       const BkOptions& options) {
  require(counts.k >= 1, ErrorKind::precondition,
          "Bahadur-Kiefer check needs k >= 1");
  require(static_cast<bool>(g.G) && static_cast<bool>(g.g),
          ErrorKind::configuration, "G and its derivative must both be given");
  BkContext ctx;
  ctx.counts = counts;
  ctx.xi = model.quantile(counts.alpha);
  const double f = model.pdf(ctx.xi);
  const double gx = g.g(ctx.xi);
  if (!(f > 0.0) || !std::isfinite(f) || !std::isfinite(gx)) {
    std::ostringstream msg;
    msg << "g/f undefined at xi=" << ctx.xi << " (f=" << f << ")";
    fail(ErrorKind::condition, msg.str());
  }
  ctx.G_xi = g.G(ctx.xi);
  ctx.g_over_f = gx / f;

  const double n = static_cast<double>(counts.n);
  const double kd = static_cast<double>(counts.k);
  const double L = options.log_n ? std::log(n) : std::log(kd);
  conditions::PsiOptions psi_opts;
  psi_opts.log_n = options.log_n;
  double psi = std::numeric_limits<double>::quiet_NaN();
  try {
    psi = conditions::psi_sup(
        model, counts, conditions::Side::lower,
        [&](double x) { return g.g(x) / model.pdf(x); }, options.B, psi_opts);
  } catch (const Error& e) {
    // Small n: the bound is undefined, the remainder is not.
    if (e.kind() != ErrorKind::too_small_n) throw;
  }
  const double abs_ratio = std::abs(ctx.g_over_f);
  const double alpha = counts.alpha;
  ctx.bound_point = options.A * alpha *
                    (abs_ratio * std::pow(L / kd, 0.75) +
                     psi * std::sqrt(L / kd));
  ctx.bound_integral = options.A * alpha * L / n *
                       (abs_ratio * std::pow(L / kd, 0.25) + psi);
  ctx.g = std::move(g);
  return ctx;
}

namespace {

BkRemainder point_from(double order_stat, std::size_t below,
                       const BkContext& ctx) {
  const double n = static_cast<double>(ctx.counts.n);
  const double dev = static_cast<double>(below) / n - ctx.counts.alpha;
  BkRemainder r;
  r.g_kind = ctx.g.tag;
  r.observed = ctx.g.G(order_stat) - ctx.G_xi;
  r.leading = -dev * ctx.g_over_f;
  r.remainder = r.observed - r.leading;
  r.bound = ctx.bound_point;
  return r;
}

std::size_t count_below(std::span<const double> sorted, double xi) {
  return static_cast<std::size_t>(
      std::upper_bound(sorted.begin(), sorted.end(), xi) - sorted.begin());
}

void check_size(std::size_t n, const BkContext& ctx) {
  require(n == ctx.counts.n, ErrorKind::precondition,
          "Bahadur-Kiefer context was built for a different n");
}

}  // namespace

BkRemainder bk_point(const trim::SortedSample& sample, const BkContext& ctx) {
  check_size(sample.size(), ctx);
  const auto x = sample.values();
  return point_from(sample.order_stat(ctx.counts.k), count_below(x, ctx.xi),
                    ctx);
}

BkRemainder bk_point_selection(std::span<double> buffer, const BkContext& ctx) {
  check_size(buffer.size(), ctx);
  std::size_t below = 0;
  for (double v : buffer) below += v <= ctx.xi;
  const auto kth = buffer.begin() + static_cast<std::ptrdiff_t>(ctx.counts.k - 1);
  std::nth_element(buffer.begin(), kth, buffer.end());
  return point_from(*kth, below, ctx);
}

BkRemainder bk_integral(const trim::SortedSample& sample, const BkContext& ctx) {
  check_size(sample.size(), ctx);
  const auto x = sample.values();
  const std::size_t k = ctx.counts.k;
  const std::size_t N = count_below(x, ctx.xi);
  const double n = static_cast<double>(ctx.counts.n);
  double sum = 0.0;
  // One-based indices (k ^ N) + 1 .. (k v N).
  for (std::size_t i = std::min(k, N) + 1; i <= std::max(k, N); ++i)
    sum += ctx.g.G(x[i - 1]) - ctx.G_xi;
  const double sign = N > k ? 1.0 : (N < k ? -1.0 : 0.0);
  const double dev = static_cast<double>(N) / n - ctx.counts.alpha;
  BkRemainder r;
  r.g_kind = ctx.g.tag;
  r.observed = sign * sum / n;
  r.leading = -0.5 * dev * dev * ctx.g_over_f;
  r.remainder = r.observed - r.leading;
  r.bound = ctx.bound_integral;
  return r;
}

BkRemainder bk_point(const trim::SortedSample& sample,
                     const dist::DistributionModel& model,
                     const trim::TrimSchedule& schedule, const GFunction& g,
                     const BkOptions& options) {
  return bk_point(sample,
                  make_context(model, schedule.eval(sample.size()), g, options));
}

BkRemainder bk_integral(const trim::SortedSample& sample,
                        const dist::DistributionModel& model,
                        const trim::TrimSchedule& schedule, const GFunction& g,
                        const BkOptions& options) {
  return bk_integral(
      sample, make_context(model, schedule.eval(sample.size()), g, options));
}

BkBatch simulate_bk(const dist::DistributionModel& model, const BkContext& ctx,
                    std::size_t replications, bool with_integral,
                    std::uint64_t seed, std::uint32_t grid_point,
                    std::size_t threads) {
  const std::size_t n = ctx.counts.n;
  const auto& family = model.family();
  BkBatch batch;
  batch.point.resize(replications);
  if (with_integral) batch.integral.resize(replications);
  mc::parallel_for(replications, threads, [&](std::size_t r) {
    std::vector<double> buffer(n);
    UniformStream u(seed, static_cast<std::uint32_t>(r), grid_point, 2);
    for (auto& x : buffer) x = family.quantile(u.next());
    if (with_integral) {
      const trim::SortedSample sorted(std::move(buffer));
      batch.point[r] = bk_point(sorted, ctx);
      batch.integral[r] = bk_integral(sorted, ctx);
    } else {
      batch.point[r] = bk_point_selection(buffer, ctx);
    }
  });
  return batch;
}

std::vector<std::vector<double>> conditional_orderstat_sample(
    double alpha, std::size_t n, std::size_t k, std::size_t how_many,
    std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(ErrorKind::domain, "conditioning level must lie in (0,1)");
  if (k > n) {
    std::ostringstream msg;
    msg << "conditioned count k=" << k << " exceeds n=" << n;
    fail(ErrorKind::domain, msg.str());
  }
  std::vector<std::vector<double>> out(how_many);
  for (std::size_t j = 0; j < how_many; ++j) {
    UniformStream u(seed, static_cast<std::uint32_t>(j), 0, 3);
    auto& v = out[j];
    v.resize(k);
    for (auto& x : v) x = alpha * u();
    std::sort(v.begin(), v.end());
  }
  return out;
}

}  // namespace trimsum::orderstat
