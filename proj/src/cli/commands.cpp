#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "io.hpp"
#include "json.hpp"
#include "trimsum/cli.hpp"
#include "trimsum/conditions.hpp"
#include "trimsum/normal.hpp"
#include "trimsum/orderstat.hpp"
#include "trimsum/ustat.hpp"

namespace trimsum::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json num_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json counts_json(const trim::TrimCounts& c) {
  return {{"n", c.n}, {"k", c.k}, {"m", c.m}, {"alpha", c.alpha},
          {"beta", c.beta}};
}

Json terms_json(const edgeworth::ExpansionTerms& t) {
  return {{"lambda1", num_json(t.lambda1)},   {"lambda2", num_json(t.lambda2)},
          {"b_n", num_json(t.b_n)},           {"sigma_w", num_json(t.sigma_w)},
          {"mu_trunc", num_json(t.mu_trunc)}, {"mu_w", num_json(t.mu_w)},
          {"xi_lower", num_json(t.xi_lower)}, {"xi_upper", num_json(t.xi_upper)},
          {"f_lower", num_json(t.f_lower)},   {"f_upper", num_json(t.f_upper)},
          {"q_alpha", num_json(t.q_alpha)},   {"q_beta", num_json(t.q_beta)}};
}

Json fit_json(const mc::RateFit& f, std::size_t points) {
  return {{"points", points},
          {"slope", num_json(f.slope)},
          {"intercept", num_json(f.intercept)},
          {"r_squared", num_json(f.r_squared)},
          {"stderr", num_json(f.stderr_slope)}};
}

Json model_json(const dist::ModelSpec& spec) {
  Json params = Json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  return {{"id", spec.id}, {"params", params}};
}

Json report_head(const std::string& command) {
  return {{"schema", kSchemaVersion}, {"command", command}};
}

void write_json(const fs::path& path, const Json& doc) {
  io::write_text(path, doc.dump(2) + "\n");
}

void echo_config(const fs::path& dir, const RunConfig& config) {
  io::write_text(dir / "config.json", serialize_config(config));
}

double quantile_of(std::vector<double> v, double p) {
  require(!v.empty(), ErrorKind::empty_summary, "quantile of an empty batch");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

// ---- simulate ----

const std::vector<std::string>& results_header() {
  static const std::vector<std::string> h{
      "n",        "k",       "m",       "alpha",   "beta",     "replications",
      "flagged",  "statistic", "D_normal", "D_gn",  "D_hn",     "mu_trunc",
      "sigma_w",  "lambda1", "lambda2", "b_n"};
  return h;
}

io::CsvTable results_table(const std::vector<mc::GridResult>& results) {
  io::CsvTable table(results_header());
  for (const auto& r : results) {
    auto dist_of = [&](mc::Target t) {
      const auto it = r.distance.find(t);
      return it == r.distance.end() ? std::string() : io::num(it->second);
    };
    table.add({io::num(r.n), io::num(r.counts.k), io::num(r.counts.m),
               io::num(r.counts.alpha), io::num(r.counts.beta),
               io::num(r.replications), io::num(r.flagged),
               mc::to_string(r.statistic), dist_of(mc::Target::normal),
               dist_of(mc::Target::gn), dist_of(mc::Target::hn),
               io::num(r.terms.mu_trunc), io::num(r.terms.sigma_w),
               io::num(r.terms.lambda1), io::num(r.terms.lambda2),
               io::num(r.terms.b_n)});
  }
  return table;
}

io::CsvTable ecdf_table(const mc::GridResult& r) {
  io::CsvTable table(
      {"x", "ecdf", "normal", "gn", "hn", "gn_clamped", "hn_clamped"});
  const auto v = r.ecdf.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    const double x = v[i];
    const double g = edgeworth::gn_eval(r.terms, x);
    const double h = edgeworth::hn_eval(r.terms, x);
    table.add({io::num(x), io::num(r.ecdf(x)), io::num(normal_cdf(x)),
               io::num(g), io::num(h), io::num(std::clamp(g, 0.0, 1.0)),
               io::num(std::clamp(h, 0.0, 1.0))});
  }
  return table;
}

int cmd_simulate(const std::string& config_path, const fs::path& out_dir,
                 std::size_t threads, bool calibrate, std::ostream& out) {
  const auto config = load_config(config_path);
  auto plan = to_plan(config);
  plan.threads = threads;
  plan.calibration = calibrate;
  const auto results = mc::run_simulation(plan);

  io::ensure_dir(out_dir);
  echo_config(out_dir, config);
  const auto table = results_table(results);
  table.write(out_dir / "results.csv");

  Json report = report_head("simulate");
  report["model"] = model_json(config.model);
  report["seed"] = config.seed;
  report["threads"] = mc::resolve_threads(plan.threads);
  report["calibration"] = calibrate;
  Json grid = Json::array();
  for (const auto& r : results) {
    Json d = Json::object();
    for (const auto& [t, v] : r.distance) d["D_" + mc::to_string(t)] = v;
    grid.push_back({{"counts", counts_json(r.counts)},
                    {"replications", r.replications},
                    {"flagged", r.flagged},
                    {"statistic", mc::to_string(r.statistic)},
                    {"distances", d},
                    {"terms", terms_json(r.terms)}});
    if (config.write_ecdf)
      ecdf_table(r).write(out_dir / ("ecdf_n" + std::to_string(r.n) + ".csv"));
  }
  report["grid"] = grid;
  if (results.size() >= 3) {
    Json rates = Json::object();
    for (auto t : plan.targets) {
      try {
        rates[mc::to_string(t)] =
            fit_json(mc::rate_of(results, t), results.size());
      } catch (const Error& e) {
        rates[mc::to_string(t)] = {{"error", std::string(to_string(e.kind()))},
                                   {"message", e.what()}};
      }
    }
    report["rates_vs_k"] = rates;
    const auto model = dist::DistributionModel::from_spec(config.model);
    const auto mags =
        edgeworth::term_magnitudes(model, config.schedule, config.n_grid);
    Json rows = Json::array();
    for (const auto& row : mags.rows)
      rows.push_back({{"n", row.n}, {"k", row.k}, {"m", row.m},
                      {"t1", num_json(row.t1)}, {"t2", num_json(row.t2)},
                      {"t3", num_json(row.t3)}, {"dominant", row.dominant}});
    auto opt_fit = [&](const std::optional<mc::RateFit>& f) -> Json {
      if (!f) return nullptr;
      return fit_json(*f, mags.rows.size());
    };
    report["term_magnitudes"] = {{"rows", rows},
                                 {"fit_t1", opt_fit(mags.fit_t1)},
                                 {"fit_t2", opt_fit(mags.fit_t2)},
                                 {"fit_t3", opt_fit(mags.fit_t3)},
                                 {"fit_t1_plus_t2", opt_fit(mags.fit_skew)}};
  }
  write_json(out_dir / "report.json", report);
  out << table.str();
  return 0;
}

// ---- rates ----

std::vector<mc::Target> parse_targets(const std::vector<std::string>& names) {
  std::vector<mc::Target> targets;
  for (const auto& name : names) {
    if (name == "all") {
      for (auto t : {mc::Target::normal, mc::Target::gn, mc::Target::hn})
        if (std::find(targets.begin(), targets.end(), t) == targets.end())
          targets.push_back(t);
      continue;
    }
    const auto t = mc::target_from_string(name);
    if (std::find(targets.begin(), targets.end(), t) == targets.end())
      targets.push_back(t);
  }
  return targets;
}

int cmd_rates(const fs::path& in_dir, const std::vector<std::string>& names,
              const std::optional<fs::path>& out_dir, std::ostream& out) {
  const auto results = io::read_csv(in_dir / "results.csv");
  const auto k_col = io::column(results, "k");
  io::CsvTable table(
      {"target", "points", "slope", "intercept", "r_squared", "stderr"});
  for (auto t : parse_targets(names)) {
    const auto col = io::column(results, "D_" + mc::to_string(t));
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : results.rows()) {
      if (row[col].empty())
        fail(ErrorKind::configuration,
             "target " + mc::to_string(t) + " was not simulated in " +
                 in_dir.string());
      pts.emplace_back(io::to_double(row[k_col]), io::to_double(row[col]));
    }
    const auto fit = mc::fit_rate(pts);
    table.add({mc::to_string(t), io::num(pts.size()), io::num(fit.slope),
               io::num(fit.intercept), io::num(fit.r_squared),
               io::num(fit.stderr_slope)});
  }
  const fs::path dir = out_dir.value_or(in_dir);
  io::ensure_dir(dir);
  table.write(dir / "rates.csv");
  out << table.str();
  return 0;
}

// ---- audit ----

Json audit_json(const conditions::ConditionReport& rep) {
  Json grid = Json::array();
  for (const auto& g : rep.grid)
    grid.push_back({{"n", g.n},
                    {"k", g.k},
                    {"m", g.m},
                    {"alpha", g.alpha},
                    {"beta", g.beta},
                    {"q_alpha", num_json(g.q_alpha)},
                    {"q_beta", num_json(g.q_beta)}});
  Json entries = Json::array();
  for (const auto& e : rep.entries) {
    Json values = Json::array();
    for (double v : e.values) values.push_back(num_json(v));
    entries.push_back(
        {{"name", e.name},
         {"values", values},
         {"slope", e.slope ? num_json(*e.slope) : Json(nullptr)},
         {"spread", e.spread ? num_json(*e.spread) : Json(nullptr)},
         {"verdict", conditions::to_string(e.verdict)},
         {"note", e.note}});
  }
  Json psi = Json::array();
  for (const auto& p : rep.psi_values)
    psi.push_back({{"n", p.n},
                   {"side", conditions::to_string(p.side)},
                   {"h", conditions::to_string(p.h)},
                   {"B", p.B},
                   {"value", num_json(p.value)}});
  Json bounds = Json::object();
  for (const auto& [theorem, rows] : rep.bound_terms) {
    Json list = Json::array();
    for (const auto& row : rows) {
      Json terms = Json::object();
      for (const auto& t : row.terms) terms[t.name] = num_json(t.value);
      list.push_back({{"n", row.n}, {"terms", terms}});
    }
    bounds[theorem] = list;
  }
  return {{"grid", grid},
          {"conditions", entries},
          {"psi_values", psi},
          {"bound_terms", bounds},
          {"limitations", rep.limitations},
          {"overall", rep.any_fail() ? "fail" : "pass"}};
}

int cmd_audit(const std::string& config_path,
              const std::optional<fs::path>& out_dir, std::ostream& out) {
  const auto config = load_config(config_path);
  const auto model = dist::DistributionModel::from_spec(config.model);
  conditions::AuditOptions opts;
  opts.B = config.audit.B;
  opts.epsilon = config.audit.epsilon;
  opts.s = config.audit.s;
  opts.bound_constant_B = config.constants.B;
  opts.seed = config.seed;
  const auto rep =
      conditions::audit_conditions(model, config.schedule, config.n_grid, opts);
  Json report = report_head("audit");
  report["model"] = model_json(config.model);
  const Json body = audit_json(rep);
  for (const auto& [k, v] : body.items()) report[k] = v;
  if (out_dir) {
    io::ensure_dir(*out_dir);
    echo_config(*out_dir, config);
    write_json(*out_dir / "report.json", report);
  }
  out << report.dump(2) << "\n";
  return rep.any_fail() ? 2 : 0;
}

// ---- ustat-check ----

int cmd_ustat(const std::string& config_path, const fs::path& out_dir,
              std::size_t threads, std::ostream& out) {
  const auto config = load_config(config_path);
  require(config.replications >= 2, ErrorKind::configuration,
          "ustat-check needs at least 2 replications");
  const auto model = dist::DistributionModel::from_spec(config.model);
  const std::size_t workers = mc::resolve_threads(threads);
  const ustat::Constants constants{config.constants.A, config.constants.B};
  io::CsvTable table({"n",           "k",           "m",          "alpha",
                      "beta",        "replications", "abs_p50",    "abs_p95",
                      "abs_p99",     "ratio_p50",   "ratio_p95",  "ratio_p99",
                      "correlation", "delta_n",     "epsilon_n",  "epsilon_bound",
                      "second_closed", "second_mc", "second_se",  "third_leading",
                      "third_mc",    "third_se"});
  Json grid = Json::array();
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    const auto counts = config.schedule.eval(config.n_grid[g]);
    const auto ctx = ustat::make_context(model, counts, constants);
    const auto batch = ustat::simulate_decompositions(
        model, ctx, config.replications, config.seed,
        static_cast<std::uint32_t>(g), workers);
    const auto summary = ustat::summarize(batch);
    const auto moments = ustat::analytic_moments(ctx.terms);
    std::vector<double> p2, p3;
    p2.reserve(batch.size());
    p3.reserve(batch.size());
    for (const auto& d : batch) {
      const double z = (d.l_n + d.u_n) / ctx.terms.sigma_w;
      p2.push_back(z * z);
      p3.push_back(z * z * z);
    }
    const auto m2 = mean_se(p2), m3 = mean_se(p3);
    table.add({io::num(counts.n), io::num(counts.k), io::num(counts.m),
               io::num(counts.alpha), io::num(counts.beta),
               io::num(config.replications), io::num(summary.abs_p50),
               io::num(summary.abs_p95), io::num(summary.abs_p99),
               io::num(summary.ratio_p50), io::num(summary.ratio_p95),
               io::num(summary.ratio_p99), io::num(summary.correlation),
               io::num(ctx.delta_n), io::num(moments.epsilon),
               io::num(moments.epsilon_bound), io::num(moments.second),
               io::num(m2.mean), io::num(m2.se), io::num(moments.third_leading),
               io::num(m3.mean), io::num(m3.se)});
    grid.push_back({{"counts", counts_json(counts)},
                    {"terms", terms_json(ctx.terms)},
                    {"delta_n", num_json(ctx.delta_n)}});
  }
  io::ensure_dir(out_dir);
  echo_config(out_dir, config);
  table.write(out_dir / "results.csv");
  Json report = report_head("ustat-check");
  report["model"] = model_json(config.model);
  report["seed"] = config.seed;
  report["threads"] = workers;
  report["constants"] = {{"A", config.constants.A}, {"B", config.constants.B}};
  report["grid"] = grid;
  report["notes"] = {
      "delta_n uses the supplied constants A and B; the theory leaves them "
      "unspecified, so ratio columns are only meaningful up to scale"};
  write_json(out_dir / "report.json", report);
  out << table.str();
  return 0;
}

// ---- bahadur ----

int cmd_bahadur(const std::string& config_path, const fs::path& out_dir,
                std::size_t threads, std::ostream& out) {
  const auto config = load_config(config_path);
  const auto model = dist::DistributionModel::from_spec(config.model);
  const std::size_t workers = mc::resolve_threads(threads);
  const auto g = orderstat::GFunction::from_tag(config.bahadur_g);
  orderstat::BkOptions opts{config.constants.A, config.constants.B, false};
  orderstat::BkOptions opts_log = opts;
  opts_log.log_n = true;
  io::CsvTable table({"n", "k", "alpha", "replications", "g", "point_median",
                      "point_p95", "point_bound", "point_bound_log_n",
                      "integral_median", "integral_p95", "integral_bound",
                      "integral_bound_log_n"});
  std::vector<std::pair<double, double>> point_pts, integral_pts;
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    const auto counts = config.schedule.eval(config.n_grid[i]);
    const auto ctx = orderstat::make_context(model, counts, g, opts);
    const auto ctx_log = orderstat::make_context(model, counts, g, opts_log);
    const auto batch =
        orderstat::simulate_bk(model, ctx, config.replications, true,
                               config.seed, static_cast<std::uint32_t>(i), workers);
    std::vector<double> pa, ia;
    for (const auto& r : batch.point) pa.push_back(std::abs(r.remainder));
    for (const auto& r : batch.integral) ia.push_back(std::abs(r.remainder));
    const double pm = quantile_of(pa, 0.5), im = quantile_of(ia, 0.5);
    point_pts.emplace_back(static_cast<double>(counts.n), pm);
    integral_pts.emplace_back(static_cast<double>(counts.n), im);
    table.add({io::num(counts.n), io::num(counts.k), io::num(counts.alpha),
               io::num(config.replications), g.tag, io::num(pm),
               io::num(quantile_of(pa, 0.95)), io::num(ctx.bound_point),
               io::num(ctx_log.bound_point), io::num(im),
               io::num(quantile_of(ia, 0.95)), io::num(ctx.bound_integral),
               io::num(ctx_log.bound_integral)});
  }
  io::ensure_dir(out_dir);
  echo_config(out_dir, config);
  table.write(out_dir / "results.csv");
  Json report = report_head("bahadur");
  report["model"] = model_json(config.model);
  report["seed"] = config.seed;
  report["threads"] = workers;
  report["g"] = g.tag;
  if (config.n_grid.size() >= 3) {
    io::CsvTable rates(
        {"target", "points", "slope", "intercept", "r_squared", "stderr"});
    Json fits = Json::object();
    for (const auto& [name, pts] :
         {std::pair{std::string("point"), point_pts},
          std::pair{std::string("integral"), integral_pts}}) {
      try {
        const auto fit = mc::fit_rate(pts);
        rates.add({name, io::num(pts.size()), io::num(fit.slope),
                   io::num(fit.intercept), io::num(fit.r_squared),
                   io::num(fit.stderr_slope)});
        fits[name] = fit_json(fit, pts.size());
      } catch (const Error& e) {
        fits[name] = {{"error", std::string(to_string(e.kind()))},
                      {"message", e.what()}};
      }
    }
    rates.write(out_dir / "rates.csv");
    report["median_exponent_vs_n"] = fits;
  }
  write_json(out_dir / "report.json", report);
  out << table.str();
  return 0;
}

// ---- ci ----

Json interval_json(const Interval& iv) {
  return {{"lower", num_json(iv.lower)},
          {"upper", num_json(iv.upper)},
          {"x_low", num_json(iv.x_low)},
          {"x_high", num_json(iv.x_high)},
          {"fallback", iv.fallback}};
}

int cmd_ci(const fs::path& data, double alpha, double beta, double level,
           const std::optional<fs::path>& out_dir, std::ostream& out) {
  auto values = read_data_file(data);
  const auto r = ci_from_values(std::move(values), alpha, beta, level);
  Json report = report_head("ci");
  report["data"] = data.string();
  report["n"] = r.n;
  report["k"] = r.k;
  report["m"] = r.m;
  report["alpha"] = r.alpha;
  report["beta"] = r.beta;
  report["level"] = r.level;
  report["coverage"] = 2.0 * r.level - 1.0;
  report["t_n"] = r.t_n;
  report["plug_mean"] = r.plug_mean;
  report["plug_var"] = r.plug_var;
  report["f_lower_hat"] = r.f_lower;
  report["f_upper_hat"] = r.f_upper;
  report["lambda1_hat"] = r.lambda1;
  report["lambda2_hat"] = r.lambda2;
  report["bias_ratio_hat"] = r.bias_ratio;
  report["normal"] = interval_json(r.normal);
  report["corrected"] = interval_json(r.corrected);
  report["notes"] = {
      "density at the trimming quantiles estimated by quantile spacings with "
      "h = alpha * min(0.5, k^(-1/4)); artifact convention, no estimator is "
      "given by the theory",
      "the corrected interval inverts an estimated H_n built from plug-in "
      "moments; this extrapolates population formulas to unknown F"};
  if (out_dir) {
    io::ensure_dir(*out_dir);
    Json echoed{{"data", data.string()},
                {"alpha", alpha},
                {"beta", beta},
                {"level", level}};
    write_json(*out_dir / "config.json", echoed);
    write_json(*out_dir / "report.json", report);
  }
  out << report.dump(2) << "\n";
  return 0;
}

void emit_diagnostic(const std::string& command, ErrorKind kind,
                     const std::string& message, int code,
                     std::optional<double> error_estimate,
                     const std::optional<fs::path>& dir, std::ostream& err) {
  Json d = report_head(command);
  d["error"] = std::string(to_string(kind));
  d["message"] = message;
  d["exit_code"] = code;
  if (error_estimate) d["error_estimate"] = num_json(*error_estimate);
  err << d.dump() << "\n";
  if (!dir) return;
  try {
    io::ensure_dir(*dir);
    write_json(*dir / "diagnostics.json", d);
  } catch (const Error&) {
    // The stderr copy is enough when the directory is unusable.
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numerical:
    case ErrorKind::degenerate_scale:
    case ErrorKind::inversion:
    case ErrorKind::condition:
    case ErrorKind::unsupported_region:
      return 3;
    default:
      return 1;
  }
}

CiReport ci_from_values(std::vector<double> values, double alpha, double beta,
                        double q) {
  if (!(alpha > 0.0 && beta > 0.0 && alpha + beta < 0.5))
    fail(ErrorKind::domain, "trim fractions need 0 < alpha, beta and alpha + beta < 0.5");
  if (!(q >= 0.5 && q < 1.0))
    fail(ErrorKind::domain, "confidence level q must lie in [0.5, 1)");
  const std::size_t n = values.size();
  if (n < 50) {
    std::ostringstream msg;
    msg << "ci needs at least 50 values, got " << n;
    fail(ErrorKind::precondition, msg.str());
  }
  const double nd = static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::floor(alpha * nd + 1e-9));
  const auto m = static_cast<std::size_t>(std::floor(beta * nd + 1e-9));
  if (k < 1 || m < 1)
    fail(ErrorKind::trim, "alpha * n and beta * n must both be at least 1");
  const auto counts = trim::make_counts(n, k, m);
  const trim::SortedSample sample(std::move(values));
  const auto x = sample.values();

  CiReport r;
  r.n = n;
  r.k = k;
  r.m = m;
  r.alpha = counts.alpha;
  r.beta = counts.beta;
  r.level = q;
  r.t_n = trim::trimmed_sum(sample, k, m);
  const auto plug = trim::plugin_moments(sample, k, m);
  r.plug_mean = plug.mean;
  r.plug_var = plug.variance;
  if (!(plug.variance > 0.0))
    fail(ErrorKind::degenerate_scale, "plug-in Winsorized variance is zero");

  const double h_frac = std::min(0.5, std::pow(static_cast<double>(k), -0.25));
  auto density_at = [&](double level, double h) {
    auto idx = [&](double p) {
      const auto i = static_cast<long long>(std::ceil(nd * p - 1e-9));
      return static_cast<std::size_t>(std::clamp<long long>(i, 1, static_cast<long long>(n)));
    };
    const double spacing = sample.order_stat(idx(level + h)) -
                           sample.order_stat(idx(level - h));
    if (!(spacing > 0.0)) {
      std::ostringstream msg;
      msg << "zero quantile spacing around level " << level
          << "; density plug-in undefined";
      fail(ErrorKind::degenerate_scale, msg.str());
    }
    return 2.0 * h / spacing;
  };
  r.f_lower = density_at(r.alpha, r.alpha * h_frac);
  r.f_upper = density_at(1.0 - r.beta, r.beta * std::min(0.5, std::pow(static_cast<double>(m), -0.25)));

  const double lo = sample.order_stat(k), hi = sample.order_stat(n - m);
  double third = 0.0;
  for (double v : x) {
    const double w = std::clamp(v, lo, hi) - plug.mean;
    third += w * w * w;
  }
  third /= nd;
  const double sigma = std::sqrt(plug.variance);
  const double s3 = sigma * sigma * sigma;
  const double a = r.alpha, b = r.beta;
  const double delta2 = -a * a * (plug.mean - lo) * (plug.mean - lo) / r.f_lower +
                        b * b * (plug.mean - hi) * (plug.mean - hi) / r.f_upper;
  const double bias = (-a * (1.0 - a) / r.f_lower + b * (1.0 - b) / r.f_upper) /
                      (2.0 * std::sqrt(nd));
  r.lambda1 = third / s3;
  r.lambda2 = delta2 / s3;
  r.bias_ratio = bias / sigma;
  const auto terms =
      edgeworth::terms_from_ratios(n, r.lambda1, r.lambda2, r.bias_ratio);

  const double scale = sigma / std::sqrt(nd);
  const double z = normal_quantile(q);
  r.normal.x_high = z;
  r.normal.x_low = -z;
  r.normal.lower = r.t_n - scale * z;
  r.normal.upper = r.t_n + scale * z;

  const auto top = edgeworth::invert_expansion(terms, q);
  const auto bottom =
      q == 0.5 ? top : edgeworth::invert_expansion(terms, 1.0 - q);
  r.corrected.x_high = top.x;
  r.corrected.x_low = bottom.x;
  r.corrected.fallback = top.fallback || bottom.fallback;
  r.corrected.lower = r.t_n - scale * top.x;
  r.corrected.upper = r.t_n - scale * bottom.x;
  return r;
}

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Edgeworth-corrected approximations for trimmed sums", "trimsum"};
  app.require_subcommand(1);

  std::string config_path, out_path, in_path, data_path;
  std::vector<std::string> targets;
  std::size_t threads = 0;
  bool calibrate = false;
  double alpha = 0.0, beta = 0.0, level = 0.0;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sup-distances per n");
  simulate->add_option("--config", config_path, "plan JSON")->required();
  simulate->add_option("--out", out_path, "output directory")->required();
  simulate->add_option("--threads", threads, "worker cap (0 = auto)");
  simulate->add_flag("--calibrate", calibrate,
                     "replace the statistic by exact normal draws");

  auto* rates = app.add_subcommand("rates", "log-log rate fits from a run");
  rates->add_option("--in", in_path, "run directory")->required();
  rates->add_option("--target", targets, "normal, gn, hn or all")->required();
  rates->add_option("--out", out_path, "output directory (default: --in)");

  auto* audit = app.add_subcommand("audit", "condition audit over n_grid");
  audit->add_option("--config", config_path, "plan JSON")->required();
  audit->add_option("--out", out_path, "output directory");

  auto* ustat_cmd =
      app.add_subcommand("ustat-check", "U-statistic decomposition check");
  ustat_cmd->add_option("--config", config_path, "plan JSON")->required();
  ustat_cmd->add_option("--out", out_path, "output directory")->required();
  ustat_cmd->add_option("--threads", threads, "worker cap (0 = auto)");

  auto* bahadur = app.add_subcommand("bahadur", "Bahadur-Kiefer remainders");
  bahadur->add_option("--config", config_path, "plan JSON")->required();
  bahadur->add_option("--out", out_path, "output directory")->required();
  bahadur->add_option("--threads", threads, "worker cap (0 = auto)");

  auto* ci = app.add_subcommand("ci", "normal and corrected intervals for data");
  ci->add_option("--data", data_path, "one value per line")->required();
  ci->add_option("--alpha", alpha, "lower trim fraction")->required();
  ci->add_option("--beta", beta, "upper trim fraction")->required();
  ci->add_option("--level", level, "upper quantile level q")->required();
  ci->add_option("--out", out_path, "output directory");

  std::string command = "trimsum";
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    if (!subs.empty()) command = subs.front()->get_name();
    Json d = report_head(command);
    d["error"] = "usage";
    d["message"] = e.what();
    d["exit_code"] = 1;
    err << d.dump() << "\n";
    return 1;
  }

  command = app.get_subcommands().front()->get_name();
  std::optional<fs::path> out_dir;
  if (!out_path.empty()) out_dir = fs::path(out_path);
  try {
    if (*simulate)
      return cmd_simulate(config_path, *out_dir, threads, calibrate, out);
    if (*rates) return cmd_rates(in_path, targets, out_dir, out);
    if (*audit) return cmd_audit(config_path, out_dir, out);
    if (*ustat_cmd) return cmd_ustat(config_path, *out_dir, threads, out);
    if (*bahadur) return cmd_bahadur(config_path, *out_dir, threads, out);
    return cmd_ci(data_path, alpha, beta, level, out_dir, out);
  } catch (const NumericalError& e) {
    const int code = exit_code_for(e.kind());
    emit_diagnostic(command, e.kind(), e.what(), code, e.error_estimate(),
                    out_dir, err);
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    emit_diagnostic(command, e.kind(), e.what(), code, std::nullopt, out_dir,
                    err);
    return code;
  } catch (const std::exception& e) {
    Json d = report_head(command);
    d["error"] = "internal";
    d["message"] = e.what();
    d["exit_code"] = 1;
    err << d.dump() << "\n";
    return 1;
  }
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace trimsum::cli
