#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trimsum/dist.hpp"
#include "trimsum/edgeworth.hpp"
#include "trimsum/error.hpp"
#include "trimsum/mc.hpp"
#include "trimsum/trim.hpp"

namespace trimsum::cli {

inline constexpr const char* kSchemaVersion = "trimsum/1";

struct AuditSettings {
  double B = 2.0;
  double epsilon = 0.1;
  double s = 0.5;

  bool operator==(const AuditSettings&) const = default;
};

struct ConstantSettings {
  double A = 1.0;
  double B = 2.0;

  bool operator==(const ConstantSettings&) const = default;
};

/// One JSON document drives simulate, audit, ustat-check and bahadur.
struct RunConfig {
  dist::ModelSpec model;
  trim::TrimSchedule schedule = trim::TrimSchedule::power(1.0, 0.6, 2.0, 0.6);
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1000;
  mc::Statistic statistic = mc::Statistic::normalized;
  std::vector<mc::Target> targets{mc::Target::normal, mc::Target::gn,
                                  mc::Target::hn};
  std::uint64_t seed = 1;
  ConstantSettings constants;
  AuditSettings audit;
  std::string bahadur_g = "identity";
  bool write_ecdf = false;

  bool operator==(const RunConfig&) const = default;
};

/// Throws configuration error on malformed input or unknown keys.
RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

mc::SimulationPlan to_plan(const RunConfig& config);

/// One value per line; blank lines and '#' comments skipped. Non-numeric
/// rows raise an ingestion error listing their line numbers.
std::vector<double> read_data(std::istream& in);
std::vector<double> read_data_file(const std::filesystem::path& path);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double x_low = 0.0;   // standardized quantile at 1 - q
  double x_high = 0.0;  // standardized quantile at q
  bool fallback = false;
};

struct CiReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double level = 0.0;  // q
  double t_n = 0.0;
  double plug_mean = 0.0;
  double plug_var = 0.0;
  double f_lower = 0.0;
  double f_upper = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double bias_ratio = 0.0;
  Interval normal;
  Interval corrected;
};

/// Normal and expansion-corrected intervals for mu(alpha, 1 - beta).
/// q is the upper quantile level in [0.5, 1): the two-sided coverage is
/// 2q - 1.
CiReport ci_from_values(std::vector<double> values, double alpha, double beta,
                        double q);

/// Full CLI entry point; returns the process exit code.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);
int run_command(int argc, char** argv);

/// Exit code for a library error kind.
int exit_code_for(ErrorKind kind);

}  // namespace trimsum::cli
