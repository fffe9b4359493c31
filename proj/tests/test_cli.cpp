#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "trimsum/cli.hpp"
#include "trimsum/dist.hpp"
#include "trimsum/normal.hpp"

using namespace trimsum;
using namespace trimsum::cli;
namespace fs = std::filesystem;
using nlohmann::json;

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

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("trimsum_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string first_line(const fs::path& p) {
  std::string line;
  std::ifstream in(p, std::ios::binary);
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string golden(const std::string& name) {
  return first_line(fs::path(TRIMSUM_GOLDEN_DIR) / name);
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kLomaxPlan = R"({
  "model": {"id": "two_sided_lomax", "params": {"gamma": 1}},
  "schedule": {"rule": "power", "c_k": 1, "s_k": 0.6, "m_over_k": 2},
  "n_grid": [1000, 2000, 4000],
  "replications": 200,
  "seed": 3
})";

fs::path write_plan(const fs::path& dir, const std::string& text) {
  const auto p = dir / "plan.json";
  spit(p, text);
  return p;
}

std::string log_schedule_plan() {
  json table = json::array();
  std::vector<std::size_t> grid;
  for (std::size_t n : {1000u, 10000u, 100000u, 1000000u, 10000000u}) {
    const auto k = static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(n))));
    table.push_back({{"n", n}, {"k", k}, {"m", k}});
    grid.push_back(n);
  }
  json plan{{"model", {{"id", "two_sided_lomax"}, {"params", {{"gamma", 1.0}}}}},
            {"schedule", {{"rule", "explicit"}, {"table", table}}},
            {"n_grid", grid}};
  return plan.dump();
}

}  // namespace

TEST_CASE("config round trip") {
  const std::vector<std::string> docs{
      kLomaxPlan,
      R"({"model": {"id": "cauchy"}, "n_grid": [100, 200, 400]})",
      R"({"model": {"id": "uniform", "params": {"lower": -1, "upper": 2}},
          "schedule": {"rule": "fixed", "alpha": 0.05, "beta": 0.1},
          "n_grid": [500], "statistic": "studentized", "targets": ["hn"],
          "constants": {"A": 2, "B": 3}, "audit": {"B": 1.5, "epsilon": 0.2, "s": 0.4},
          "bahadur": {"g": "square"}, "write_ecdf": true})",
      R"({"model": {"id": "log_pareto", "params": {"rho": 1, "x0": 3}},
          "schedule": {"rule": "explicit", "table": [{"n": 100, "k": 3, "m": 4},
                                                     {"n": 200, "k": 5, "m": 6}]},
          "n_grid": [100, 200]})",
      R"({"model": {"id": "normal", "params": {"mean": 1, "sd": 2}},
          "schedule": {"rule": "power", "c_k": 1, "s_k": 0.5, "c_m": 2, "s_m": 0.7},
          "n_grid": [100]})",
      R"({"model": {"id": "two_sided_lomax", "params": {"gamma_left": 1, "gamma_right": 3}},
          "schedule": {"rule": "explicit", "k": 3, "m": 4}, "n_grid": [100]})"};
  for (const auto& d : docs) {
    const auto a = parse_config(d);
    const auto text = serialize_config(a);
    const auto b = parse_config(text);
    CHECK(a == b);
    CHECK(serialize_config(b) == text);
  }
}

TEST_CASE("config rejects unknown keys and bad values") {
  const std::vector<std::string> bad{
      R"({"model": {"id": "cauchy"}, "n_grid": [100], "extra": 1})",
      R"({"model": {"id": "cauchy", "param": {}}, "n_grid": [100]})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100], "audit": {"b": 1}})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100],
          "schedule": {"rule": "fixed", "alpha": 0.1, "beta": 0.1, "gamma": 1}})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100],
          "schedule": {"rule": "explicit", "table": [{"n": 100, "k": 1, "m": 1},
                                                     {"n": 100, "k": 2, "m": 2}]}})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100], "bahadur": {"g": "cube"}})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100], "audit": {"s": 1.5}})",
      R"({"model": {"id": "cauchy"}, "n_grid": []})",
      R"({"model": {"id": "cauchy"}, "n_grid": [-5]})",
      R"({"model": {"id": "weibull"}, "n_grid": [100]})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100], "targets": ["gauss"]})",
      R"({"model": {"id": "cauchy"}, "n_grid": [100])"};
  for (const auto& d : bad) CHECK(kind_of([&] { parse_config(d); }) == ErrorKind::configuration);

  const auto dir = scratch("badcfg");
  const auto plan = write_plan(dir, bad.front());
  const auto r = run({"audit", "--config", plan.string()});
  CHECK(r.code == 1);
  const auto diag = json::parse(r.err);
  CHECK(diag.at("error") == "configuration");
  CHECK(diag.at("exit_code") == 1);
  CHECK(diag.at("message").get<std::string>().find("extra") != std::string::npos);
}

TEST_CASE("data ingestion") {
  std::istringstream ok("# header\n1.5\n\n-2 # inline\n  3e2  \n");
  CHECK(read_data(ok) == std::vector<double>{1.5, -2.0, 300.0});
  std::istringstream bad("1\nabc\n2\n3\n4x\n");
  try {
    read_data(bad);
    FAIL("expected ingestion error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ingestion);
    CHECK(std::string(e.what()).find("lines 2, 5") != std::string::npos);
  }
  std::istringstream inf("1\ninf\n");
  CHECK(kind_of([&] { read_data(inf); }) == ErrorKind::ingestion);
}

TEST_CASE("simulate, rates and golden headers") {
  const auto dir = scratch("simulate");
  const auto plan = write_plan(dir, kLomaxPlan);
  const auto out = dir / "run";
  const auto r = run({"simulate", "--config", plan.string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(first_line(out / "results.csv") == golden("simulate_results.csv"));
  CHECK(parse_config(slurp(out / "config.json")) == parse_config(kLomaxPlan));
  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(report.at("schema") == kSchemaVersion);
  CHECK(report.at("command") == "simulate");

  const auto rr = run({"rates", "--in", out.string(), "--target", "gn", "--target", "normal"});
  REQUIRE(rr.code == 0);
  CHECK(first_line(out / "rates.csv") == golden("rates.csv"));
  CHECK(rr.out.find("gn,3,") != std::string::npos);

  CHECK(run({"rates", "--in", out.string(), "--target", "gauss"}).code == 1);
  CHECK(run({"rates", "--in", (dir / "missing").string(), "--target", "gn"}).code == 1);

  // Same plan and seed give the same bytes.
  const auto again = dir / "again";
  REQUIRE(run({"simulate", "--config", plan.string(), "--out", again.string(), "--threads", "3"})
              .code == 0);
  CHECK(slurp(again / "results.csv") == slurp(out / "results.csv"));
}

TEST_CASE("simulate writes ECDF tables when asked") {
  const auto dir = scratch("ecdf");
  auto doc = json::parse(kLomaxPlan);
  doc["write_ecdf"] = true;
  doc["n_grid"] = {1000};
  const auto plan = write_plan(dir, doc.dump());
  REQUIRE(run({"simulate", "--config", plan.string(), "--out", (dir / "run").string()}).code ==
          0);
  CHECK(first_line(dir / "run" / "ecdf_n1000.csv") == golden("ecdf.csv"));
}

TEST_CASE("ustat-check and bahadur headers") {
  const auto dir = scratch("ustat");
  const auto plan = write_plan(dir, kLomaxPlan);
  REQUIRE(run({"ustat-check", "--config", plan.string(), "--out", (dir / "u").string()}).code ==
          0);
  CHECK(first_line(dir / "u" / "results.csv") == golden("ustat_results.csv"));
  REQUIRE(run({"bahadur", "--config", plan.string(), "--out", (dir / "b").string()}).code == 0);
  CHECK(first_line(dir / "b" / "results.csv") == golden("bahadur_results.csv"));
  CHECK(first_line(dir / "b" / "rates.csv") == golden("rates.csv"));
}

TEST_CASE("audit exit codes") {
  const auto dir = scratch("audit");
  const auto good = write_plan(dir, kLomaxPlan);
  const auto ok = run({"audit", "--config", good.string()});
  CHECK(ok.code == 0);
  const auto rep = json::parse(ok.out);
  CHECK(rep.at("overall") != "fail");
  CHECK(rep.contains("limitations"));

  const auto bad = dir / "log.json";
  spit(bad, log_schedule_plan());
  const auto out = dir / "logrun";
  const auto r = run({"audit", "--config", bad.string(), "--out", out.string()});
  CHECK(r.code == 2);
  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(report.at("overall") == "fail");
  bool saw_l = false;
  for (const auto& c : report.at("conditions"))
    if (c.at("name") == "L") {
      saw_l = true;
      CHECK(c.at("verdict") == "fail");
    }
  CHECK(saw_l);

  // The installed binary agrees.
  const std::string cmd = std::string("\"") + TRIMSUM_BINARY + "\" audit --config \"" +
                          bad.string() + "\" > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("usage and numerical exit codes") {
  CHECK(run({"frobnicate"}).code == 1);
  const auto none = run({});
  CHECK(none.code == 1);
  CHECK(json::parse(none.err).at("error") == "usage");
  CHECK(run({"simulate", "--config"}).code == 1);
  CHECK(run({"--help"}).code == 0);

  CHECK(exit_code_for(ErrorKind::numerical) == 3);
  CHECK(exit_code_for(ErrorKind::unsupported_region) == 3);
  CHECK(exit_code_for(ErrorKind::configuration) == 1);
  CHECK(exit_code_for(ErrorKind::ingestion) == 1);

  // Central trimming of the log-Pareto family leaves its defined tails.
  const auto dir = scratch("numerical");
  const auto plan = write_plan(dir, R"({"model": {"id": "log_pareto", "params": {"rho": 1, "x0": 3}},
      "schedule": {"rule": "fixed", "alpha": 0.4, "beta": 0.4},
      "n_grid": [1000, 2000], "replications": 100})");
  const auto out = dir / "run";
  const auto r = run({"simulate", "--config", plan.string(), "--out", out.string()});
  CHECK(r.code == 3);
  const auto diag = json::parse(slurp(out / "diagnostics.json"));
  CHECK(diag.at("error") == "unsupported_region");
  CHECK(diag.at("command") == "simulate");
  CHECK(diag.at("exit_code") == 3);
}

TEST_CASE("ci: symmetric data gives nearly the normal interval") {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> z;
  std::vector<double> v(4000);
  for (auto& x : v) x = z(rng);
  const auto r = ci_from_values(v, 0.1, 0.1, 0.975);
  const double se = std::sqrt(r.plug_var / static_cast<double>(r.n));
  CHECK(r.normal.lower < r.normal.upper);
  CHECK(r.corrected.lower < r.corrected.upper);
  CHECK(std::abs(r.corrected.lower - r.normal.lower) <= 3.0 * se);
  CHECK(std::abs(r.corrected.upper - r.normal.upper) <= 3.0 * se);
  CHECK(r.normal.x_high == doctest::Approx(1.959964).epsilon(1e-6));
}

TEST_CASE("ci: q = 0.5 collapses both intervals") {
  std::mt19937_64 rng(5);
  std::cauchy_distribution<double> c;
  std::vector<double> v(500);
  for (auto& x : v) x = c(rng);
  const auto r = ci_from_values(v, 0.05, 0.1, 0.5);
  CHECK(r.normal.lower == r.t_n);
  CHECK(r.normal.upper == r.t_n);
  CHECK(r.corrected.lower == r.corrected.upper);
}

TEST_CASE("ci: errors") {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(kind_of([&] { ci_from_values(v, 0.3, 0.3, 0.9); }) == ErrorKind::domain);
  CHECK(kind_of([&] { ci_from_values(v, 0.1, 0.1, 1.0); }) == ErrorKind::domain);
  CHECK(kind_of([&] { ci_from_values(std::vector<double>(40, 1.0), 0.1, 0.1, 0.9); }) ==
        ErrorKind::precondition);
  CHECK(kind_of([&] { ci_from_values(std::vector<double>(100, 1.0), 0.1, 0.1, 0.9); }) ==
        ErrorKind::degenerate_scale);

  const auto dir = scratch("ci");
  spit(dir / "bad.txt", "1\n2\nthree\n4\n");
  const auto r = run({"ci", "--data", (dir / "bad.txt").string(), "--alpha", "0.1", "--beta",
                      "0.1", "--level", "0.975"});
  CHECK(r.code == 1);
  const auto diag = json::parse(r.err);
  CHECK(diag.at("error") == "ingestion");
  CHECK(diag.at("message").get<std::string>().find("line 3") != std::string::npos);

  std::ostringstream data;
  for (int i = 0; i < 200; ++i) data << std::sin(i * 1.7) * 10.0 + i * 0.01 << "\n";
  spit(dir / "good.txt", data.str());
  const auto ok = run({"ci", "--data", (dir / "good.txt").string(), "--alpha", "0.05",
                       "--beta", "0.1", "--level", "0.95", "--out", (dir / "out").string()});
  REQUIRE(ok.code == 0);
  const auto rep = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(rep.contains("normal"));
  CHECK(rep.contains("corrected"));
  CHECK(rep.at("notes").size() >= 1);
}

TEST_CASE("ci: corrected coverage is at least the normal coverage") {
  const auto model = dist::DistributionModel::two_sided_lomax(1.0);
  const std::size_t n = 10000, reps = 2000;
  const double alpha = 0.02, beta = 0.06;
  const double mu = dist::truncated_mean(model, alpha, beta);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t hit_normal = 0, hit_corrected = 0;
  std::vector<double> v(n);
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& x : v) x = model.quantile(u(rng));
    const auto c = ci_from_values(v, alpha, beta, 0.975);
    hit_normal += c.normal.lower <= mu && mu <= c.normal.upper;
    hit_corrected += c.corrected.lower <= mu && mu <= c.corrected.upper;
  }
  MESSAGE("normal coverage " << static_cast<double>(hit_normal) / reps << ", corrected "
                             << static_cast<double>(hit_corrected) / reps);
  CHECK(hit_corrected >= hit_normal);
}
