#include "trimsum/edgeworth.hpp"

#include <cmath>
#include <sstream>

#include "trimsum/error.hpp"
#include "trimsum/normal.hpp"

namespace trimsum::edgeworth {

ExpansionTerms ExpansionTerms::scaled(double t) const {
  ExpansionTerms out = *this;
  out.lambda1 *= t;
  out.lambda2 *= t;
  out.delta2w *= t;
  out.gamma3w *= t;
  out.b_n *= t;
  return out;
}

ExpansionTerms expansion_terms(const dist::DistributionModel& model,
                               const trim::TrimCounts& counts) {
  const double alpha = counts.alpha;
  const double beta = counts.beta;
  const auto f = dist::winsorized_moments(model, alpha, beta);

  ExpansionTerms t;
  t.n = counts.n;
  t.trim = counts;
  t.xi_lower = f.xi_lower;
  t.xi_upper = f.xi_upper;
  t.f_lower = model.pdf(f.xi_lower);
  t.f_upper = model.pdf(f.xi_upper);
  if (!(t.f_lower > 0.0 && t.f_upper > 0.0) || !std::isfinite(t.f_lower) ||
      !std::isfinite(t.f_upper)) {
    std::ostringstream msg;
    msg << "density must be positive at the trimming quantiles, got f("
        << f.xi_lower << ")=" << t.f_lower << ", f(" << f.xi_upper
        << ")=" << t.f_upper;
    fail(ErrorKind::condition, msg.str());
  }
  t.mu_trunc = f.trunc_mean;
  t.mu_w = f.winsor_mean;
  t.sigma_w = std::sqrt(f.winsor_var);
  require(t.sigma_w > 0.0, ErrorKind::degenerate_scale,
          "Winsorized scale is zero");
  t.gamma3w = f.winsor_third;

  const double dl = t.mu_w - t.xi_lower;
  const double du = t.mu_w - t.xi_upper;
  t.delta2w = -alpha * alpha * dl * dl / t.f_lower +
              beta * beta * du * du / t.f_upper;
  const double s3 = t.sigma_w * t.sigma_w * t.sigma_w;
  t.lambda1 = t.gamma3w / s3;
  t.lambda2 = t.delta2w / s3;

  const double root_n = std::sqrt(static_cast<double>(counts.n));
  t.b_n = (-alpha * (1.0 - alpha) / t.f_lower +
           beta * (1.0 - beta) / t.f_upper) /
          (2.0 * root_n);
  t.q_alpha = alpha / (root_n * t.sigma_w * t.f_lower);
  t.q_beta = beta / (root_n * t.sigma_w * t.f_upper);
  return t;
}

ExpansionTerms expansion_terms(const dist::DistributionModel& model,
                               std::size_t n,
                               const trim::TrimSchedule& schedule) {
  return expansion_terms(model, schedule.eval(n));
}

ExpansionTerms terms_from_ratios(std::size_t n, double lambda1, double lambda2,
                                 double bias_ratio) {
  require(n >= 1, ErrorKind::precondition, "expansion needs n >= 1");
  ExpansionTerms t;
  t.n = n;
  t.lambda1 = lambda1;
  t.lambda2 = lambda2;
  t.sigma_w = 1.0;
  t.b_n = bias_ratio;
  return t;
}

double gn_eval(const ExpansionTerms& terms, double x) {
  const double root_n = std::sqrt(static_cast<double>(terms.n));
  const double skew = (terms.lambda1 + 3.0 * terms.lambda2) * (x * x - 1.0);
  const double bias = 6.0 * root_n * terms.bias_ratio();
  return normal_cdf(x) - normal_pdf(x) / (6.0 * root_n) * (skew + bias);
}

namespace {

double hn_polynomial(const ExpansionTerms& t, double x, double root_n) {
  return (2.0 * x * x + 1.0) * t.lambda1 + 3.0 * (x * x + 1.0) * t.lambda2 -
         6.0 * root_n * t.bias_ratio();
}

}  // namespace

double hn_eval(const ExpansionTerms& terms, double x) {
  const double root_n = std::sqrt(static_cast<double>(terms.n));
  return normal_cdf(x) +
         normal_pdf(x) / (6.0 * root_n) * hn_polynomial(terms, x, root_n);
}

double hn_density(const ExpansionTerms& terms, double x) {
  const double root_n = std::sqrt(static_cast<double>(terms.n));
  const double p = hn_polynomial(terms, x, root_n);
  const double dp = 4.0 * x * terms.lambda1 + 6.0 * x * terms.lambda2;
  return normal_pdf(x) * (1.0 + (dp - x * p) / (6.0 * root_n));
}

Inversion invert_expansion(const ExpansionTerms& terms, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream msg;
    msg << "inversion level must lie in (0,1), got " << q;
    fail(ErrorKind::domain, msg.str());
  }
  double lo = -10.0;
  double hi = 10.0;
  const double f_lo = hn_eval(terms, lo) - q;
  const double f_hi = hn_eval(terms, hi) - q;
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    std::ostringstream msg;
    msg << "H_n - q has no sign change on [-10, 10] for q=" << q;
    fail(ErrorKind::inversion, msg.str());
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hn_eval(terms, mid) - q < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double root = 0.5 * (lo + hi);
  for (double probe : {root - 0.25, root, root + 0.25}) {
    if (!(hn_density(terms, probe) > 0.0)) return {normal_quantile(q), true};
  }
  return {root, false};
}

namespace {

std::optional<mc::RateFit> fit_nonzero(
    const std::vector<std::pair<double, double>>& pts) {
  for (const auto& p : pts)
    if (!(p.second > 0.0)) return std::nullopt;
  return mc::fit_rate(pts);
}

}  // namespace

TermMagnitudes term_magnitudes(const dist::DistributionModel& model,
                               const trim::TrimSchedule& schedule,
                               const std::vector<std::size_t>& n_grid) {
  TermMagnitudes out;
  std::vector<std::pair<double, double>> p1, p2, p3, pskew;
  for (std::size_t n : n_grid) {
    const auto t = expansion_terms(model, n, schedule);
    const double root_n = std::sqrt(static_cast<double>(n));
    MagnitudeRow row{n, t.trim.k, t.trim.m, t.lambda1 / root_n,
                     t.lambda2 / root_n, t.bias_ratio(), ""};
    const double a1 = std::abs(row.t1), a2 = std::abs(row.t2),
                 a3 = std::abs(row.t3);
    if (a1 == 0.0 && a2 == 0.0 && a3 == 0.0) {
      row.dominant = "none";
    } else if (a1 >= a2 && a1 >= a3) {
      row.dominant = "t1";
    } else if (a2 >= a3) {
      row.dominant = "t2";
    } else {
      row.dominant = "t3";
    }
    const double scale = static_cast<double>(std::min(t.trim.k, t.trim.m));
    p1.emplace_back(scale, a1);
    p2.emplace_back(scale, a2);
    p3.emplace_back(scale, a3);
    pskew.emplace_back(scale, std::abs(row.t1 + row.t2));
    out.rows.push_back(row);
  }
  if (out.rows.size() >= 3) {
    out.fit_t1 = fit_nonzero(p1);
    out.fit_t2 = fit_nonzero(p2);
    out.fit_t3 = fit_nonzero(p3);
    out.fit_skew = fit_nonzero(pskew);
  }
  return out;
}

}  // namespace trimsum::edgeworth
