#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "trimsum/dist.hpp"
#include "trimsum/error.hpp"
#include "trimsum/ustat.hpp"

using namespace trimsum;
using dist::DistributionModel;
using trim::TrimSchedule;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a trimsum::Error");
  return ErrorKind::domain;
}

double simpson(const std::function<double(double)>& g, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = g(a) + g(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("hand-evaluated kernel") {
  const auto model = DistributionModel::two_sided_lomax(1.0);
  const auto ctx = ustat::make_context(model, trim::make_counts(100, 10, 10));
  REQUIRE(ctx.terms.f_lower == doctest::Approx(0.02).epsilon(1e-14));
  // Two points below xi_alpha = -4, 98 points in the middle.
  std::vector<double> v(100, 0.0);
  v[3] = -10.0;
  v[70] = -7.0;
  // low/low pair: (-0.81 / 0.02 + 0.01 / 0.02) / 1000 = -0.04
  // low/mid pair: (-(0.9 * -0.1) / 0.02 + 0.01 / 0.02) / 1000 = 0.005
  // mid/mid pair: (-0.01 / 0.02 + 0.01 / 0.02) / 1000 = 0
  const double hand = -0.04 + 196 * 0.005;
  CHECK(ustat::u_statistic_bruteforce(v, ctx) == doctest::Approx(hand).epsilon(1e-12));
  const auto d = ustat::components(v, 0.0, ctx);
  CHECK(d.u_n == doctest::Approx(hand).epsilon(1e-12));
  CHECK(d.n_alpha == 2);
  CHECK(d.n_beta == 100);
  CHECK(d.remainder == d.target - d.l_n - d.u_n - d.b_n);
}

TEST_CASE("O(n) aggregation equals the pairwise double sum") {
  std::mt19937_64 rng(2024);
  const auto model = DistributionModel::two_sided_lomax(1.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 10 + rng() % 191;
    const std::size_t k = 1 + rng() % (n / 4);
    const std::size_t m = 1 + rng() % (n / 4);
    const auto ctx = ustat::make_context(model, trim::make_counts(n, k, m));
    std::vector<double> v(n);
    std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
    for (auto& x : v) x = model.quantile(u(rng));
    const double brute = ustat::u_statistic_bruteforce(v, ctx);
    const double fast = ustat::components(v, 0.0, ctx).u_n;
    CHECK(std::abs(fast - brute) <= 1e-12 * std::max(std::abs(brute), std::abs(fast)));
  }
}

TEST_CASE("counts and context checks") {
  const auto model = DistributionModel::cauchy();
  const auto ctx = ustat::make_context(model, trim::make_counts(50, 5, 5));
  CHECK(std::isnan(ctx.delta_n));
  CHECK(ustat::make_context(model, trim::make_counts(5000, 100, 100)).delta_n > 0.0);
  std::mt19937_64 rng(5);
  std::cauchy_distribution<double> c;
  std::vector<double> v(50);
  for (auto& x : v) x = c(rng);
  const auto d = ustat::components(v, 0.0, ctx);
  CHECK(d.n_alpha == static_cast<std::size_t>(std::count_if(
                         v.begin(), v.end(), [&](double x) { return x <= ctx.terms.xi_lower; })));
  CHECK(d.n_beta == static_cast<std::size_t>(std::count_if(
                        v.begin(), v.end(), [&](double x) { return x <= ctx.terms.xi_upper; })));
  v.pop_back();
  CHECK(kind_of([&] { ustat::components(v, 0.0, ctx); }) == ErrorKind::precondition);
}

TEST_CASE("exact centering over the Bernoulli laws") {
  const auto model = DistributionModel::two_sided_lomax(1.0, 3.0);
  const auto t = edgeworth::expansion_terms(model, trim::make_counts(1000, 30, 60));
  const double a = t.trim.alpha, up = 1.0 - t.trim.beta;
  for (const auto& [xi, level] : {std::pair{t.xi_lower, a}, std::pair{t.xi_upper, up}}) {
    const double p = model.cdf(xi);
    CHECK(std::abs(p * (1.0 - level) + (1.0 - p) * (-level)) <= 1e-14);
  }
  // E W by quadrature of the quantile, split at the median.
  auto q = [&](double u) { return model.quantile(u); };
  const double med = model.cdf(0.0);
  const double ew = a * t.xi_lower + t.trim.beta * t.xi_upper +
                    simpson(q, a, med, 200000) + simpson(q, med, up, 200000);
  CHECK(t.mu_w == doctest::Approx(ew).epsilon(1e-9));
}

TEST_CASE("linear and quadratic parts are orthogonal") {
  const auto model = DistributionModel::two_sided_lomax(1.0, 3.0);
  const auto ctx = ustat::make_context(model, trim::make_counts(1000, 30, 60));
  const auto& t = ctx.terms;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> prod;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double xi = model.quantile(u(rng)), xj = model.quantile(u(rng));
    const double l = std::clamp(xi, t.xi_lower, t.xi_upper) - t.mu_w;
    auto ia = [&](double x) { return (x <= t.xi_lower ? 1.0 : 0.0) - t.trim.alpha; };
    auto ib = [&](double x) { return (x <= t.xi_upper ? 1.0 : 0.0) - (1.0 - t.trim.beta); };
    const double k = -ia(xi) * ia(xj) / t.f_lower + ib(xi) * ib(xj) / t.f_upper;
    prod.push_back(l * k);
  }
  const auto [mean, se] = testsupport::mean_se(prod);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("analytic moments") {
  for (const auto& model : {DistributionModel::two_sided_lomax(1.0),
                            DistributionModel::two_sided_lomax(3.0),
                            DistributionModel::cauchy(),
                            DistributionModel::two_sided_lomax(1.0, 2.5)}) {
    for (const auto& s : {TrimSchedule::power(1.0, 0.6, 1.0, 0.6),
                          TrimSchedule::power_linked(1.0, 0.6, 2.0),
                          TrimSchedule::fixed(0.05, 0.1)}) {
      for (std::size_t n : {500u, 2000u, 8000u}) {
        const auto m = ustat::analytic_moments(model, n, s);
        CHECK(m.epsilon > 0.0);
        CHECK(m.epsilon <= m.epsilon_bound);
        CHECK(m.second == 1.0 + m.epsilon);
      }
    }
  }
  const auto sym = ustat::analytic_moments(DistributionModel::cauchy(), 2000,
                                           TrimSchedule::power(1.0, 0.6, 1.0, 0.6));
  CHECK(std::abs(sym.third_leading) <= 1e-12);
}

TEST_CASE("Monte Carlo second moment matches the closed form") {
  const auto model = DistributionModel::two_sided_lomax(1.0);
  const auto counts = TrimSchedule::power_linked(1.0, 0.6, 2.0).eval(2000);
  const auto ctx = ustat::make_context(model, counts);
  const auto batch = ustat::simulate_decompositions(model, ctx, 20000, 11, 0, 1);
  std::vector<double> z2;
  for (const auto& d : batch) {
    const double z = (d.l_n + d.u_n) / ctx.terms.sigma_w;
    z2.push_back(z * z);
  }
  const auto [mean, se] = testsupport::mean_se(z2);
  const auto m = ustat::analytic_moments(ctx.terms);
  CHECK(std::abs(mean - m.second) <= 3.0 * se);
}

TEST_CASE("remainder summary") {
  const auto model = DistributionModel::two_sided_lomax(1.0);
  const auto s = TrimSchedule::power_linked(1.0, 0.6, 2.0);
  const auto ctx = ustat::make_context(model, s.eval(8000));
  const auto batch = ustat::simulate_decompositions(model, ctx, 300, 3, 0, 1);
  const auto sum = ustat::summarize(batch);
  CHECK(sum.count == 300);
  CHECK(sum.correlation >= 0.99);
  CHECK(sum.abs_p50 <= sum.abs_p95);
  CHECK(sum.abs_p95 <= sum.abs_p99);
  CHECK(sum.ratio_p50 == doctest::Approx(sum.abs_p50 / ctx.delta_n).epsilon(1e-12));

  std::vector<std::vector<double>> raw(5, std::vector<double>(100, 0.0));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& r : raw)
    for (auto& x : r) x = model.quantile(u(rng));
  CHECK(ustat::decomposition_remainder(raw, model, s).count == 5);

  CHECK(kind_of([] { ustat::summarize({}); }) == ErrorKind::empty_summary);
  CHECK(kind_of([&] { ustat::decomposition_remainder({}, model, s); }) ==
        ErrorKind::empty_summary);
}

TEST_CASE("V_n terms") {
  const auto model = DistributionModel::two_sided_lomax(1.0);
  const auto s = TrimSchedule::power_linked(1.0, 0.6, 2.0);
  const auto ctx = ustat::make_context(model, s.eval(20000));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(20000);
  for (auto& x : v) x = model.quantile(u(rng));
  const auto vn = ustat::vn_terms(trim::SortedSample(v), ctx);
  CHECK(vn.v_n == vn.v_n1 + vn.v_n2);
  CHECK(vn.predicted_ratio ==
        doctest::Approx(1.0 + vn.v_n / (ctx.terms.sigma_w * ctx.terms.sigma_w))
            .epsilon(1e-15));
  CHECK(std::abs(vn.predicted_ratio - vn.observed_ratio) <= 0.1);
}
