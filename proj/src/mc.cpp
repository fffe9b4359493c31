#include "trimsum/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "trimsum/error.hpp"
#include "trimsum/normal.hpp"
#include "trimsum/rng.hpp"

namespace trimsum::mc {

EmpiricalCdf::EmpiricalCdf(std::vector<double> values)
    : values_(std::move(values)) {
  require(!values_.empty(), ErrorKind::precondition,
          "empirical df needs at least one value");
  std::sort(values_.begin(), values_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) /
         static_cast<double>(values_.size());
}

double EmpiricalCdf::left_limit(double x) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) /
         static_cast<double>(values_.size());
}

double ks_distance(const EmpiricalCdf& ecdf,
                   const std::function<double(double)>& target) {
  const auto v = ecdf.values();
  const double count = static_cast<double>(v.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = target(v[i]);
    const double below = static_cast<double>(i) / count;
    const double at = static_cast<double>(j) / count;
    d = std::max({d, std::abs(at - t), std::abs(below - t)});
    i = j;
  }
  return d;
}

std::string to_string(Statistic s) {
  return s == Statistic::normalized ? "normalized" : "studentized";
}

std::string to_string(Target t) {
  switch (t) {
    case Target::normal: return "normal";
    case Target::gn: return "gn";
    case Target::hn: return "hn";
  }
  return "?";
}

Statistic statistic_from_string(const std::string& s) {
  if (s == "normalized") return Statistic::normalized;
  if (s == "studentized") return Statistic::studentized;
  fail(ErrorKind::configuration,
       "unknown statistic '" + s + "' (expected normalized or studentized)");
}

Target target_from_string(const std::string& s) {
  if (s == "normal") return Target::normal;
  if (s == "gn") return Target::gn;
  if (s == "hn") return Target::hn;
  fail(ErrorKind::configuration,
       "unknown target '" + s + "' (expected normal, gn or hn)");
}

void validate(const SimulationPlan& plan) {
  require(plan.replications >= 100, ErrorKind::configuration,
          "a simulation plan needs at least 100 replications");
  require(!plan.n_grid.empty(), ErrorKind::configuration,
          "a simulation plan needs a non-empty n grid");
  for (std::size_t i = 1; i < plan.n_grid.size(); ++i)
    require(plan.n_grid[i] > plan.n_grid[i - 1], ErrorKind::configuration,
            "n grid must be strictly increasing");
  require(!plan.targets.empty(), ErrorKind::configuration,
          "a simulation plan needs at least one target");
  require(plan.replications <= std::numeric_limits<std::uint32_t>::max() &&
              plan.n_grid.size() <= std::numeric_limits<std::uint32_t>::max(),
          ErrorKind::configuration, "plan exceeds the seeding counter range");
}

std::size_t resolve_threads(std::size_t requested) {
  std::size_t cap = requested;
  if (cap == 0) {
    if (const char* env = std::getenv("TRIMSUM_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) cap = static_cast<std::size_t>(v);
    }
  }
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t r = begin; r < end; ++r) body(r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Replications replicate(const dist::DistributionModel& model,
                       const trim::TrimCounts& counts,
                       const trim::Centering& center, std::size_t replications,
                       std::uint64_t seed, std::uint32_t grid_point,
                       std::size_t threads) {
  require(center.sigma_w > 0.0, ErrorKind::degenerate_scale,
          "population Winsorized scale must be positive");
  const std::size_t n = counts.n;
  const double root_n = std::sqrt(static_cast<double>(n));
  const auto& family = model.family();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> norm(replications, nan), stud(replications, nan);

  parallel_for(replications, threads, [&](std::size_t r) {
    thread_local std::vector<double> buffer;
    buffer.resize(n);
    UniformStream u(seed, static_cast<std::uint32_t>(r), grid_point, 0);
    for (auto& x : buffer) x = family.quantile(u.next());
    const auto s = trim::summarize_by_selection(buffer, counts.k, counts.m);
    const double centered = root_n * (s.t_n - center.mu_trunc);
    if (!(s.plug_var > 0.0) || !std::isfinite(centered)) return;
    norm[r] = centered / center.sigma_w;
    stud[r] = centered / std::sqrt(s.plug_var);
  });

  Replications out;
  out.normalized.reserve(replications);
  out.studentized.reserve(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    if (std::isnan(norm[r]) || !std::isfinite(stud[r])) {
      ++out.flagged;
      continue;
    }
    out.normalized.push_back(norm[r]);
    out.studentized.push_back(stud[r]);
  }
  return out;
}

std::function<double(double)> target_cdf(Target target,
                                         const edgeworth::ExpansionTerms& terms) {
  switch (target) {
    case Target::normal: return [](double x) { return normal_cdf(x); };
    case Target::gn:
      return [terms](double x) { return edgeworth::gn_eval(terms, x); };
    case Target::hn:
      return [terms](double x) { return edgeworth::hn_eval(terms, x); };
  }
  fail(ErrorKind::configuration, "unknown target");
}

std::vector<GridResult> run_simulation(const SimulationPlan& plan) {
  validate(plan);
  const auto model = dist::DistributionModel::from_spec(plan.model);
  const std::size_t threads = resolve_threads(plan.threads);
  std::vector<GridResult> results;
  results.reserve(plan.n_grid.size());
  for (std::size_t g = 0; g < plan.n_grid.size(); ++g) {
    const std::size_t n = plan.n_grid[g];
    GridResult res;
    res.n = n;
    res.counts = plan.schedule.eval(n);
    res.terms = edgeworth::expansion_terms(model, res.counts);
    res.statistic = plan.statistic;
    res.replications = plan.replications;
    const auto gp = static_cast<std::uint32_t>(g);

    std::vector<double> values;
    if (plan.calibration) {
      values.resize(plan.replications);
      parallel_for(plan.replications, threads, [&](std::size_t r) {
        UniformStream u(plan.seed, static_cast<std::uint32_t>(r), gp, 0);
        values[r] = normal_quantile(u.next());
      });
    } else {
      const trim::Centering center{res.terms.mu_trunc, res.terms.sigma_w};
      auto reps = replicate(model, res.counts, center, plan.replications,
                            plan.seed, gp, threads);
      res.flagged = reps.flagged;
      if (100 * reps.flagged > plan.replications) {
        std::ostringstream msg;
        msg << reps.flagged << " of " << plan.replications
            << " replications flagged as degenerate at n=" << n
            << " (limit 1%)";
        fail(ErrorKind::degenerate_scale, msg.str());
      }
      values = plan.statistic == Statistic::normalized
                   ? std::move(reps.normalized)
                   : std::move(reps.studentized);
    }
    res.ecdf = EmpiricalCdf(std::move(values));
    for (Target t : plan.targets)
      res.distance[t] = ks_distance(res.ecdf, target_cdf(t, res.terms));
    results.push_back(std::move(res));
  }
  return results;
}

RateFit rate_of(const std::vector<GridResult>& results, Target target) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : results) {
    const auto it = r.distance.find(target);
    require(it != r.distance.end(), ErrorKind::configuration,
            "target " + to_string(target) + " was not simulated");
    pts.emplace_back(static_cast<double>(r.counts.k), it->second);
  }
  return fit_rate(pts);
}

}  // namespace trimsum::mc
