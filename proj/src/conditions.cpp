#include "trimsum/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trimsum/edgeworth.hpp"
#include "trimsum/error.hpp"
#include "trimsum/rate.hpp"
#include "trimsum/rng.hpp"

namespace trimsum::conditions {

std::string to_string(Side side) {
  return side == Side::lower ? "lower" : "upper";
}

std::string to_string(HKind kind) {
  switch (kind) {
    case HKind::x: return "x";
    case HKind::inv_f: return "1/f";
    case HKind::x_over_f: return "x/f";
  }
  return "?";
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

std::string to_string(Theorem which) {
  switch (which) {
    case Theorem::thm1_1: return "thm1_1";
    case Theorem::thm1_4: return "thm1_4";
    case Theorem::studentized: return "studentized";
  }
  return "?";
}

double h_value(const dist::DistributionModel& model, HKind h, double x) {
  switch (h) {
    case HKind::x: return x;
    case HKind::inv_f: return 1.0 / model.pdf(x);
    case HKind::x_over_f: return x / model.pdf(x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double psi_sup(const dist::DistributionModel& model,
               const trim::TrimCounts& counts, Side side,
               const std::function<double(double)>& h, double B,
               const PsiOptions& options) {
  require(B >= 0.0 && std::isfinite(B), ErrorKind::domain,
          "Psi requires a finite B >= 0");
  require(options.grid_points >= 3, ErrorKind::precondition,
          "Psi grid needs at least 3 points");
  const bool lower = side == Side::lower;
  const double level = lower ? counts.alpha : counts.beta;
  const std::size_t count = lower ? counts.k : counts.m;
  require(count >= 1, ErrorKind::precondition,
          "Psi needs at least one trimmed observation on the chosen side");
  const double n = static_cast<double>(counts.n);
  const double log_term = options.log_n ? std::log(n)
                                        : std::log(static_cast<double>(count));
  const double width = std::sqrt(level * log_term / n);
  if (!(level - B * width > 0.0 && level + B * width < 1.0)) {
    std::ostringstream msg;
    msg << "Psi window " << level << " +- " << B * width
        << " leaves (0,1) at n=" << counts.n;
    fail(ErrorKind::too_small_n, msg.str());
  }

  auto at = [&](double t) {
    const double x = lower ? model.quantile(level + t * width)
                           : model.upper_quantile(level - t * width);
    return h(x);
  };
  const double base = at(0.0);
  if (B == 0.0 || width == 0.0) return 0.0;

  auto gap = [&](double t) { return std::abs(at(t) - base); };
  const std::size_t g = options.grid_points;
  const double step = 2.0 * B / static_cast<double>(g - 1);
  double best = -1.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < g; ++i) {
    const double t = -B + step * static_cast<double>(i);
    const double v = gap(t);
    if (!std::isfinite(v)) {
      fail(ErrorKind::numerical, "h is not finite on the Psi window");
    }
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (options.refine_points >= 2) {
    const double lo = -B + step * static_cast<double>(best_i == 0 ? 0 : best_i - 1);
    const double hi =
        -B + step * static_cast<double>(std::min(best_i + 1, g - 1));
    const std::size_t r = options.refine_points;
    for (std::size_t i = 0; i < r; ++i) {
      const double t = lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(r - 1);
      best = std::max(best, gap(t));
    }
  }
  return best;
}

double psi_sup(const dist::DistributionModel& model,
               const trim::TrimCounts& counts, Side side, HKind h, double B,
               const PsiOptions& options) {
  return psi_sup(
      model, counts, side, [&](double x) { return h_value(model, h, x); }, B,
      options);
}

double psi_sup(const dist::DistributionModel& model, std::size_t n,
               const trim::TrimSchedule& schedule, Side side, HKind h,
               double B, const PsiOptions& options) {
  return psi_sup(model, schedule.eval(n), side, h, B, options);
}

const ConditionEntry& ConditionReport::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  fail(ErrorKind::precondition, "no condition named " + name);
}

bool ConditionReport::any_fail() const {
  return std::any_of(entries.begin(), entries.end(), [](const auto& e) {
    return e.verdict == Verdict::fail;
  });
}

Verdict decay_verdict(double slope) {
  if (slope <= -0.05) return Verdict::pass;
  if (slope >= 0.0) return Verdict::fail;
  return Verdict::inconclusive;
}

Verdict bounded_verdict(double spread, double slope) {
  if (spread <= 10.0 || slope <= -0.05) return Verdict::pass;
  if (slope >= 0.05 && spread > 10.0) return Verdict::fail;
  return Verdict::inconclusive;
}

namespace {

double ln(std::size_t c) { return std::log(static_cast<double>(c)); }

std::vector<NamedValue> bound_terms_at(const dist::DistributionModel& model,
                                       const edgeworth::ExpansionTerms& t,
                                       Theorem which, double B, double epsilon,
                                       double bound_constant_B) {
  const auto& c = t.trim;
  const double n = static_cast<double>(c.n);
  const double root_n = std::sqrt(n);
  const double s = t.sigma_w;
  const double psi_a = psi_sup(model, c, Side::lower, HKind::inv_f, B);
  const double psi_b = psi_sup(model, c, Side::upper, HKind::inv_f, B);
  const double a = c.alpha, b = c.beta;
  const double fa = t.f_lower, fb = t.f_upper;
  const double lk = ln(c.k), lm = ln(c.m);
  const double kd = static_cast<double>(c.k), md = static_cast<double>(c.m);

  const double psi_term = (a * lk * psi_a + b * lm * psi_b) / s;
  std::vector<NamedValue> out;
  switch (which) {
    case Theorem::thm1_1: {
      const double abs3 = dist::winsorized_raw_moment(model, a, b, 3, true);
      out.push_back({"delta1", abs3 / (s * s * s) / root_n});
      out.push_back({"delta2", (a / fa + b / fb) / s / root_n});
      out.push_back({"delta3", (std::cbrt(a) * std::pow(a / (fa * s), 5.0 / 3.0) +
                                std::cbrt(b) * std::pow(b / (fb * s), 5.0 / 3.0)) /
                                   root_n});
      out.push_back({"delta4", psi_term / root_n});
      break;
    }
    case Theorem::thm1_4: {
      const double m4 = dist::winsorized_raw_moment(model, a, b, 4, false);
      auto d2 = [&](double eps) {
        return a * a * std::pow(1.0 / (s * fa), 2.0 + eps) +
               b * b * std::pow(1.0 / (s * fb), 2.0 + eps);
      };
      out.push_back({"delta1", m4 / (s * s * s * s) / n});
      out.push_back({"delta2", d2(epsilon) / n});
      out.push_back({"delta3", d2(0.0) / n});
      out.push_back({"delta4", (std::pow(lk, 1.25) * std::pow(a, 0.75) / (fa * s) +
                                std::pow(lm, 1.25) * std::pow(b, 0.75) / (fb * s)) /
                                   std::pow(n, 0.75)});
      out.push_back({"delta5", psi_term / root_n});
      out.push_back({"delta6",
                     std::abs((t.lambda1 + 3.0 * t.lambda2) * t.b_n) / s / root_n});
      break;
    }
    case Theorem::studentized: {
      const double a32 = std::pow(a, 1.5), b32 = std::pow(b, 1.5);
      const double qa = t.q_alpha, qb = t.q_beta;
      const double d1 = a32 / (s * fa) * std::pow(lk / kd, 0.75) +
                        b32 / (s * fb) * std::pow(lm / md, 0.75);
      const double d2 =
          bound_constant_B *
          (lk * (qa * qa + a * a / (n * s * s) * psi_a * psi_a) +
           lm * (qb * qb + b * b / (n * s * s) * psi_b * psi_b));
      const double d3 = a32 / s * psi_a * std::sqrt(lk / kd) +
                        b32 / s * psi_b * std::sqrt(lm / md);
      const double d4 = (1.0 / std::sqrt(kd) + 1.0 / std::sqrt(md)) / root_n *
                        (a32 * lk / (fa * s) + b32 * lm / (fb * s));
      const double d5 = (lk * t.xi_lower * t.xi_lower +
                         lm * t.xi_upper * t.xi_upper) /
                        (n * s * s);
      out.push_back({"delta1", d1});
      out.push_back({"delta2", d2});
      out.push_back({"delta3", d3});
      out.push_back({"delta4", d4});
      out.push_back({"delta5", d5});
      out.push_back({"Delta_nS", d1 + d2 + d3 + d4 + d5});
      out.push_back({"delta1S", lk * (qa / std::sqrt(kd) + 1.0 / kd) +
                                    lm * (qb / std::sqrt(md) + 1.0 / md)});
      out.push_back({"delta2S", lk * lk * qa * qa * qa + lm * lm * qb * qb * qb +
                                    lk * lm * qa * qb * (qa + qb)});
      break;
    }
  }
  return out;
}

struct Series {
  std::vector<double> ns;
  std::vector<double> values;
  bool broken = false;
  std::string note;
};

std::optional<double> slope_of(const Series& s) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.values[i] > 0.0 && std::isfinite(s.values[i]))
      pts.emplace_back(s.ns[i], s.values[i]);
  }
  if (pts.size() < 3 || pts.size() != s.values.size()) return std::nullopt;
  return mc::fit_rate(pts).slope;
}

ConditionEntry decay_entry(const std::string& name, const Series& s) {
  ConditionEntry e{name, s.values, std::nullopt, std::nullopt,
                   Verdict::inconclusive, s.note};
  if (s.broken) return e;
  const bool all_zero = std::all_of(s.values.begin(), s.values.end(),
                                    [](double v) { return v == 0.0; });
  if (all_zero) {
    e.verdict = Verdict::pass;
    e.note = "identically zero on the grid";
    return e;
  }
  e.slope = slope_of(s);
  if (e.slope) e.verdict = decay_verdict(*e.slope);
  return e;
}

ConditionEntry bounded_entry(const std::string& name, const Series& s) {
  ConditionEntry e{name, s.values, std::nullopt, std::nullopt,
                   Verdict::inconclusive, s.note};
  if (s.broken) return e;
  if (!std::all_of(s.values.begin(), s.values.end(),
                   [](double v) { return std::isfinite(v) && v >= 0.0; })) {
    e.note = "non-finite values on the grid";
    return e;
  }
  const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
  if (*hi == 0.0) {
    e.verdict = Verdict::pass;
    e.note = "identically zero on the grid";
    return e;
  }
  if (*lo > 0.0) e.spread = *hi / *lo;
  e.slope = slope_of(s);
  if (e.spread && e.slope) {
    e.verdict = bounded_verdict(*e.spread, *e.slope);
  } else if (e.slope && *e.slope <= -0.05) {
    e.verdict = Verdict::pass;
  }
  return e;
}

ConditionEntry regularity_entry(const dist::DistributionModel& model,
                                const AuditOptions& options) {
  ConditionEntry e{"R", {}, std::nullopt, std::nullopt, Verdict::fail, ""};
  if (!model.tail_index() || !(*model.tail_index() > 0.0)) {
    e.note = "model has no regular-variation tail index gamma > 0";
    return e;
  }
  try {
    for (std::size_t j = 0; j < options.r_pairs; ++j) {
      UniformStream u(options.seed, static_cast<std::uint32_t>(j), 0, 7);
      const double mag = std::pow(10.0, 1.0 + 5.0 * u());
      const double x = u() < 0.5 ? -mag : mag;
      double r = 0.1 * (2.0 * u() - 1.0);
      if (std::abs(r) < 1e-6) r = 1e-6;
      const double dx = r * x;
      const double fx = model.pdf(x);
      e.values.push_back(std::abs(model.pdf(x + dx) - fx) / (fx * std::abs(r)));
    }
  } catch (const Error& err) {
    e.note = std::string("density not evaluable in the tails: ") + err.what();
    e.values.clear();
    return e;
  }
  const auto [lo, hi] = std::minmax_element(e.values.begin(), e.values.end());
  if (!(*lo > 0.0) || !std::isfinite(*hi)) {
    e.note = "increment ratio degenerate at some pair";
    return e;
  }
  e.spread = *hi / *lo;
  e.verdict = *e.spread <= 10.0 ? Verdict::pass : Verdict::fail;
  e.note = "increment ratio spot-checked at random tail pairs";
  return e;
}

}  // namespace

std::vector<NamedValue> bound_terms(const dist::DistributionModel& model,
                                    const trim::TrimSchedule& schedule,
                                    std::size_t n, Theorem which, double B,
                                    double epsilon, double bound_constant_B) {
  require(epsilon > 0.0, ErrorKind::domain, "epsilon must be positive");
  const auto t = edgeworth::expansion_terms(model, n, schedule);
  return bound_terms_at(model, t, which, B, epsilon, bound_constant_B);
}

ConditionReport audit_conditions(const dist::DistributionModel& model,
                                 const trim::TrimSchedule& schedule,
                                 const std::vector<std::size_t>& n_grid,
                                 const AuditOptions& options) {
  require(n_grid.size() >= 3, ErrorKind::precondition,
          "audit needs an n grid of length >= 3");
  require(std::adjacent_find(n_grid.begin(), n_grid.end(),
                             std::greater_equal<>()) == n_grid.end(),
          ErrorKind::precondition, "audit n grid must be strictly increasing");
  require(options.B > 0.0, ErrorKind::domain, "audit B must be positive");

  ConditionReport report;
  Series a1, a2, a2p, a2pp, a3, a3p, l;
  for (auto* s : {&a1, &a2, &a2p, &a2pp, &a3, &a3p, &l}) s->ns.reserve(n_grid.size());
  bool a1_ok = true;
  std::string a1_note;

  for (std::size_t n : n_grid) {
    const auto counts = schedule.eval(n);
    const double nd = static_cast<double>(n);
    for (auto* s : {&a1, &a2, &a2p, &a2pp, &a3, &a3p, &l}) s->ns.push_back(nd);
    l.values.push_back(std::pow(nd, options.s) /
                       static_cast<double>(std::min(counts.k, counts.m)));

    edgeworth::ExpansionTerms t;
    try {
      t = edgeworth::expansion_terms(model, counts);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::condition &&
          err.kind() != ErrorKind::unsupported_region &&
          err.kind() != ErrorKind::degenerate_scale)
        throw;
      a1_ok = false;
      a1_note = err.what();
      report.grid.push_back({n, counts.k, counts.m, counts.alpha, counts.beta,
                             0.0, 0.0});
      for (auto* s : {&a1, &a2, &a2p, &a2pp, &a3, &a3p}) {
        s->values.push_back(std::numeric_limits<double>::quiet_NaN());
        s->broken = true;
      }
      continue;
    }
    report.grid.push_back({n, counts.k, counts.m, counts.alpha, counts.beta,
                           t.q_alpha, t.q_beta});
    const double sig = t.sigma_w;
    a1.values.push_back(std::min(t.f_lower, t.f_upper));
    a2.values.push_back(std::max(t.q_alpha, t.q_beta));
    a2p.values.push_back(
        std::max(std::pow(counts.alpha, 1.5) / (sig * t.f_lower),
                 std::pow(counts.beta, 1.5) / (sig * t.f_upper)));
    a2pp.values.push_back(
        std::max(counts.alpha / (std::abs(t.xi_lower) * t.f_lower),
                 counts.beta / (std::abs(t.xi_upper) * t.f_upper)));

    try {
      double psi[2] = {0.0, 0.0};
      for (Side side : {Side::lower, Side::upper}) {
        for (HKind h : {HKind::x, HKind::inv_f, HKind::x_over_f}) {
          const double v = psi_sup(model, counts, side, h, options.B);
          report.psi_values.push_back({n, side, h, options.B, v});
          if (h == HKind::inv_f) psi[side == Side::lower ? 0 : 1] = v;
        }
      }
      const double root_n = std::sqrt(nd);
      a3.values.push_back(std::max(counts.alpha / (root_n * sig) * psi[0],
                                   counts.beta / (root_n * sig) * psi[1]));
      a3p.values.push_back(
          std::max(psi[0] * t.f_lower * std::log(static_cast<double>(counts.k)),
                   psi[1] * t.f_upper * std::log(static_cast<double>(counts.m))));
      for (Theorem th : {Theorem::thm1_1, Theorem::thm1_4, Theorem::studentized}) {
        report.bound_terms[to_string(th)].push_back(
            {n, bound_terms_at(model, t, th, options.B, options.epsilon,
                               options.bound_constant_B)});
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::too_small_n &&
          err.kind() != ErrorKind::unsupported_region)
        throw;
      for (auto* s : {&a3, &a3p}) {
        s->values.push_back(std::numeric_limits<double>::quiet_NaN());
        s->broken = true;
        s->note = err.what();
      }
    }
  }

  ConditionEntry e1{"A1", a1.values, std::nullopt, std::nullopt,
                    Verdict::pass, "density positive at both trimming quantiles"};
  if (!a1_ok || !std::all_of(a1.values.begin(), a1.values.end(),
                             [](double v) { return v > 0.0 && std::isfinite(v); })) {
    e1.verdict = Verdict::fail;
    e1.note = a1_note.empty() ? "density vanishes at a trimming quantile" : a1_note;
  }
  report.entries.push_back(e1);
  report.entries.push_back(decay_entry("A2", a2));
  auto e2p = bounded_entry("A2'", a2p);
  const auto e2pp = bounded_entry("A2''", a2pp);
  if (e2pp.verdict == Verdict::pass && e2p.verdict != Verdict::pass) {
    e2p.verdict = Verdict::pass;
    e2p.note = "implied by A2''";
  }
  report.entries.push_back(e2p);
  report.entries.push_back(e2pp);
  report.entries.push_back(decay_entry("A3", a3));
  report.entries.push_back(bounded_entry("A3'", a3p));
  report.entries.push_back(regularity_entry(model, options));
  report.entries.push_back(bounded_entry("L", l));

  std::ostringstream b_note;
  b_note << "Psi conditions hold for every B; the audit samples only B="
         << options.B;
  report.limitations.push_back(b_note.str());
  std::ostringstream eps_note;
  eps_note << "delta2 of thm1_4 uses epsilon=" << options.epsilon
           << "; its constant depends on epsilon and is only controlled "
              "under condition L";
  report.limitations.push_back(eps_note.str());
  report.limitations.push_back(
      "verdicts are trend checks on a finite grid, not proofs");
  return report;
}

}  // namespace trimsum::conditions
