#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "trimsum/cli.hpp"
#include "trimsum/error.hpp"

namespace trimsum::cli {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) {
  fail(ErrorKind::configuration, msg);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) bad(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) bad(where + "." + key + " must be a number");
  return v.get<double>();
}

std::uint64_t count(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    bad(where + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

trim::TrimSchedule parse_schedule(const json& s) {
  if (!s.is_object() || !s.contains("rule") || !s.at("rule").is_string())
    bad("schedule needs a string 'rule'");
  const auto rule = s.at("rule").get<std::string>();
  if (rule == "power") {
    const bool linked = s.contains("m_over_k");
    if (linked) {
      check_keys(s, {"rule", "c_k", "s_k", "m_over_k"}, "schedule");
      return trim::TrimSchedule(trim::PowerRule{
          number(s, "c_k", "schedule"), number(s, "s_k", "schedule"), 0.0, 0.0,
          number(s, "m_over_k", "schedule")});
    }
    check_keys(s, {"rule", "c_k", "s_k", "c_m", "s_m"}, "schedule");
    return trim::TrimSchedule::power(
        number(s, "c_k", "schedule"), number(s, "s_k", "schedule"),
        number(s, "c_m", "schedule"), number(s, "s_m", "schedule"));
  }
  if (rule == "fixed") {
    check_keys(s, {"rule", "alpha", "beta"}, "schedule");
    return trim::TrimSchedule::fixed(number(s, "alpha", "schedule"),
                                     number(s, "beta", "schedule"));
  }
  if (rule == "explicit") {
    if (s.contains("table")) {
      check_keys(s, {"rule", "table"}, "schedule");
      const auto& t = s.at("table");
      if (!t.is_array() || t.empty()) bad("schedule.table must be a non-empty array");
      trim::ExplicitTable table;
      for (const auto& row : t) {
        check_keys(row, {"n", "k", "m"}, "schedule.table entry");
        const auto n = count(row.at("n"), "schedule.table.n");
        if (!table.pairs
                 .emplace(n, std::pair<std::size_t, std::size_t>{
                                 count(row.at("k"), "schedule.table.k"),
                                 count(row.at("m"), "schedule.table.m")})
                 .second)
          bad("schedule.table lists n twice");
      }
      return trim::TrimSchedule(table);
    }
    check_keys(s, {"rule", "k", "m"}, "schedule");
    return trim::TrimSchedule::explicit_pair(count(s.at("k"), "schedule.k"),
                                             count(s.at("m"), "schedule.m"));
  }
  bad("unknown schedule rule '" + rule + "' (expected power, fixed or explicit)");
}

struct ScheduleWriter {
  json operator()(const trim::PowerRule& r) const {
    json j{{"rule", "power"}, {"c_k", r.c_k}, {"s_k", r.s_k}};
    if (r.m_over_k) {
      j["m_over_k"] = *r.m_over_k;
    } else {
      j["c_m"] = r.c_m;
      j["s_m"] = r.s_m;
    }
    return j;
  }
  json operator()(const trim::FixedFractions& r) const {
    return {{"rule", "fixed"}, {"alpha", r.alpha}, {"beta", r.beta}};
  }
  json operator()(const trim::ExplicitPair& r) const {
    return {{"rule", "explicit"}, {"k", r.k}, {"m", r.m}};
  }
  json operator()(const trim::ExplicitTable& r) const {
    json rows = json::array();
    for (const auto& [n, km] : r.pairs)
      rows.push_back({{"n", n}, {"k", km.first}, {"m", km.second}});
    return {{"rule", "explicit"}, {"table", rows}};
  }
};

dist::ModelSpec parse_model(const json& m) {
  check_keys(m, {"id", "params"}, "model");
  if (!m.contains("id") || !m.at("id").is_string()) bad("model needs a string 'id'");
  dist::ModelSpec spec;
  spec.id = m.at("id").get<std::string>();
  if (m.contains("params")) {
    const auto& p = m.at("params");
    if (!p.is_object()) bad("model.params must be an object");
    for (const auto& [key, value] : p.items()) {
      if (!value.is_number()) bad("model.params." + key + " must be a number");
      spec.params[key] = value.get<double>();
    }
  }
  dist::DistributionModel::from_spec(spec);
  return spec;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc,
             {"model", "schedule", "n_grid", "replications", "statistic",
              "targets", "seed", "constants", "audit", "bahadur", "write_ecdf"},
             "config");
  RunConfig c;
  try {
    if (!doc.contains("model")) bad("config needs a 'model'");
    c.model = parse_model(doc.at("model"));
    if (doc.contains("schedule")) c.schedule = parse_schedule(doc.at("schedule"));
    if (!doc.contains("n_grid") || !doc.at("n_grid").is_array() ||
        doc.at("n_grid").empty())
      bad("config needs a non-empty 'n_grid' array");
    for (const auto& v : doc.at("n_grid")) c.n_grid.push_back(count(v, "n_grid"));
    if (doc.contains("replications"))
      c.replications = count(doc.at("replications"), "replications");
    if (doc.contains("statistic")) {
      if (!doc.at("statistic").is_string()) bad("statistic must be a string");
      c.statistic = mc::statistic_from_string(doc.at("statistic").get<std::string>());
    }
    if (doc.contains("targets")) {
      const auto& t = doc.at("targets");
      if (!t.is_array() || t.empty()) bad("targets must be a non-empty array");
      c.targets.clear();
      for (const auto& v : t) {
        if (!v.is_string()) bad("targets must be strings");
        c.targets.push_back(mc::target_from_string(v.get<std::string>()));
      }
    }
    if (doc.contains("seed")) c.seed = count(doc.at("seed"), "seed");
    if (doc.contains("constants")) {
      const auto& k = doc.at("constants");
      check_keys(k, {"A", "B"}, "constants");
      if (k.contains("A")) c.constants.A = number(k, "A", "constants");
      if (k.contains("B")) c.constants.B = number(k, "B", "constants");
    }
    if (doc.contains("audit")) {
      const auto& a = doc.at("audit");
      check_keys(a, {"B", "epsilon", "s"}, "audit");
      if (a.contains("B")) c.audit.B = number(a, "B", "audit");
      if (a.contains("epsilon")) c.audit.epsilon = number(a, "epsilon", "audit");
      if (a.contains("s")) c.audit.s = number(a, "s", "audit");
    }
    if (doc.contains("bahadur")) {
      const auto& b = doc.at("bahadur");
      check_keys(b, {"g"}, "bahadur");
      if (b.contains("g")) {
        if (!b.at("g").is_string()) bad("bahadur.g must be a string");
        c.bahadur_g = b.at("g").get<std::string>();
      }
    }
    if (doc.contains("write_ecdf")) {
      if (!doc.at("write_ecdf").is_boolean()) bad("write_ecdf must be a boolean");
      c.write_ecdf = doc.at("write_ecdf").get<bool>();
    }
  } catch (const json::exception& e) {
    bad(std::string("malformed config: ") + e.what());
  }
  if (c.bahadur_g != "identity" && c.bahadur_g != "square")
    bad("bahadur.g must be identity or square");
  if (!(c.audit.s > 0.0 && c.audit.s <= 1.0)) bad("audit.s must lie in (0,1]");
  if (!(c.audit.B > 0.0)) bad("audit.B must be positive");
  if (!(c.audit.epsilon > 0.0)) bad("audit.epsilon must be positive");
  if (!(c.constants.A > 0.0 && c.constants.B > 0.0))
    bad("constants A and B must be positive");
  return c;
}

std::string serialize_config(const RunConfig& c) {
  json params = json::object();
  for (const auto& [k, v] : c.model.params) params[k] = v;
  json targets = json::array();
  for (auto t : c.targets) targets.push_back(mc::to_string(t));
  json doc{
      {"model", {{"id", c.model.id}, {"params", params}}},
      {"schedule", std::visit(ScheduleWriter{}, c.schedule.rule())},
      {"n_grid", c.n_grid},
      {"replications", c.replications},
      {"statistic", mc::to_string(c.statistic)},
      {"targets", targets},
      {"seed", c.seed},
      {"constants", {{"A", c.constants.A}, {"B", c.constants.B}}},
      {"audit", {{"B", c.audit.B}, {"epsilon", c.audit.epsilon}, {"s", c.audit.s}}},
      {"bahadur", {{"g", c.bahadur_g}}},
      {"write_ecdf", c.write_ecdf},
  };
  return doc.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

mc::SimulationPlan to_plan(const RunConfig& c) {
  mc::SimulationPlan plan;
  plan.model = c.model;
  plan.schedule = c.schedule;
  plan.n_grid = c.n_grid;
  plan.replications = c.replications;
  plan.statistic = c.statistic;
  plan.targets = c.targets;
  plan.seed = c.seed;
  return plan;
}

}  // namespace trimsum::cli
