#include "eduopt/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "eduopt/error.hpp"

namespace eduopt {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::Config, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(ErrorCode::Config, "unknown key '" + k + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const T& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::Config, fmt::format("{}.{} has the wrong type", where, key));
  }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

ScenarioConstraint scenario_from_json(const json& j, std::string& name) {
  if (j.is_string()) {
    name = j.get<std::string>();
    try {
      return scenario_from_name(name);
    } catch (const Error& e) {
      fail(ErrorCode::Config, e.what());
    }
  }
  check_keys(j, {"name", "compulsory_min", "no_future_schooling", "zero_wage_risk", "zero_taste_shocks"}, "scenario");
  ScenarioConstraint c;
  c.compulsory_min = get(j, "compulsory_min", c.compulsory_min, "scenario");
  c.no_future_schooling = get(j, "no_future_schooling", false, "scenario");
  c.zero_wage_risk = get(j, "zero_wage_risk", false, "scenario");
  c.zero_taste_shocks = get(j, "zero_taste_shocks", false, "scenario");
  name = get<std::string>(j, "name", scenario_label(c), "scenario");
  try {
    validate(c);
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  return c;
}

json scenario_to_json(const ScenarioConstraint& c, const std::string& name) {
  return {{"name", name},
          {"compulsory_min", c.compulsory_min},
          {"no_future_schooling", c.no_future_schooling},
          {"zero_wage_risk", c.zero_wage_risk},
          {"zero_taste_shocks", c.zero_taste_shocks}};
}

}  // namespace

std::vector<CohortSpec> default_cohorts() {
  std::vector<CohortSpec> out;
  for (int y = 8; y <= 17; ++y) out.push_back({ChoiceAlt::Academic, y, std::nullopt});
  for (int y = 8; y <= 12; ++y) out.push_back({ChoiceAlt::Vocational, y, std::nullopt});
  return out;
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig run_config_from_json(const json& j, const std::string& base_dir) {
  check_keys(j, {"params_file", "last_age", "abilities", "scenario", "integration", "simulation", "initial_conditions",
                 "output_dir", "cache_dir", "cohorts", "policy", "fit"},
             "config");
  RunConfig c;
  c.params_file = resolve(get<std::string>(j, "params_file", "", "config"), base_dir);
  if (!c.params_file.empty() && !fs::exists(c.params_file))
    fail(ErrorCode::Config, "params_file not found: " + c.params_file);
  if (j.contains("last_age")) c.last_age = get<int>(j, "last_age", kFinalAge, "config");
  if (j.contains("abilities")) {
    c.abilities.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "abilities", {}, "config")) {
      try {
        c.abilities.push_back(ability_from_name(name));
      } catch (const Error&) {
        fail(ErrorCode::Config, "unknown ability group '" + name + "'");
      }
    }
    require(!c.abilities.empty(), "abilities must not be empty", ErrorCode::Config);
  }
  if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"), c.scenario_name);

  if (j.contains("integration")) {
    const auto& ji = j.at("integration");
    check_keys(ji, {"n_draws", "seed", "antithetic"}, "integration");
    c.integration.n_draws = get(ji, "n_draws", c.integration.n_draws, "integration");
    c.integration.seed = get(ji, "seed", c.integration.seed, "integration");
    c.integration.antithetic = get(ji, "antithetic", false, "integration");
  }
  try {
    validate(c.integration);
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  if (j.contains("simulation")) {
    const auto& js = j.at("simulation");
    check_keys(js, {"n", "seed"}, "simulation");
    c.sim_n = get(js, "n", c.sim_n, "simulation");
    c.sim_seed = get(js, "seed", c.sim_seed, "simulation");
    require(c.sim_n >= 1, "simulation.n must be at least 1", ErrorCode::Config);
  }
  if (j.contains("initial_conditions")) {
    const auto& jc = j.at("initial_conditions");
    check_keys(jc, {"ability_shares", "type_probs", "hsprox_share"}, "initial_conditions");
    if (jc.contains("ability_shares")) {
      const auto v = get<std::vector<double>>(jc, "ability_shares", {}, "initial_conditions");
      require(v.size() == 3, "ability_shares needs three entries", ErrorCode::Config);
      std::copy(v.begin(), v.end(), c.init.ability_shares.begin());
    }
    if (jc.contains("type_probs")) {
      const auto& tp = jc.at("type_probs");
      if (tp.is_array() && tp.size() == 3 && tp[0].is_number()) {
        const auto v = tp.get<std::vector<double>>();
        for (auto& row : c.init.type_probs) std::copy(v.begin(), v.end(), row.begin());
      } else {
        const auto rows = get<std::vector<std::vector<double>>>(jc, "type_probs", {}, "initial_conditions");
        require(rows.size() == 3, "type_probs needs three entries or one row per ability", ErrorCode::Config);
        for (std::size_t g = 0; g < 3; ++g) {
          require(rows[g].size() == 3, "each type_probs row needs three entries", ErrorCode::Config);
          std::copy(rows[g].begin(), rows[g].end(), c.init.type_probs[g].begin());
        }
      }
    }
    c.init.hsprox_share = get(jc, "hsprox_share", c.init.hsprox_share, "initial_conditions");
  }
  const bool shares_given = j.contains("initial_conditions") && j.at("initial_conditions").contains("ability_shares");
  if (!shares_given) {
    c.init.ability_shares.fill(0.0);
    for (auto g : c.abilities) c.init.ability_shares[static_cast<std::size_t>(g)] = 1.0 / c.abilities.size();
  }
  for (std::size_t g = 0; g < kNumAbilities; ++g) {
    const bool listed = std::count(c.abilities.begin(), c.abilities.end(), static_cast<AbilityGroup>(g)) > 0;
    if (!listed && c.init.ability_shares[g] > 0.0)
      fail(ErrorCode::Config, "ability_shares gives weight to a group missing from abilities");
  }
  try {
    validate(c.init);
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  c.output_dir = resolve(get<std::string>(j, "output_dir", c.output_dir, "config"), base_dir);
  c.cache_dir = resolve(get<std::string>(j, "cache_dir", "", "config"), base_dir);
  for (const auto& s : get<std::vector<std::string>>(j, "cohorts", {}, "config")) c.cohorts.push_back(parse_cohort_spec(s));
  if (j.contains("policy")) {
    const auto& jp = j.at("policy");
    check_keys(jp, {"base", "alt"}, "policy");
    c.policy_base = get(jp, "base", c.policy_base, "policy");
    c.policy_alt = get(jp, "alt", c.policy_alt, "policy");
  }
  if (j.contains("fit")) {
    const auto& jf = j.at("fit");
    check_keys(jf, {"observed_panel", "observed_seed", "free", "budget", "restarts", "optimizer_seed", "rho_begin",
                    "rho_end", "restart_spread", "bootstrap"},
               "fit");
    c.fit.observed_panel = resolve(get<std::string>(jf, "observed_panel", "", "fit"), base_dir);
    if (!c.fit.observed_panel.empty() && !fs::exists(c.fit.observed_panel))
      fail(ErrorCode::Config, "observed_panel not found: " + c.fit.observed_panel);
    c.fit.observed_seed = get<std::uint64_t>(jf, "observed_seed", 0, "fit");
    if (jf.contains("free")) {
      if (!jf.at("free").is_array()) fail(ErrorCode::Config, "fit.free must be an array");
      for (const auto& f : jf.at("free")) {
        check_keys(f, {"path", "lower", "upper", "start"}, "fit.free entry");
        FreeParam p;
        p.path = get<std::string>(f, "path", "", "fit.free");
        p.lower = get<double>(f, "lower", 0.0, "fit.free");
        p.upper = get<double>(f, "upper", 0.0, "fit.free");
        p.start = get<double>(f, "start", 0.0, "fit.free");
        require(!p.path.empty() && f.contains("lower") && f.contains("upper") && f.contains("start"),
                "each free parameter needs path, lower, upper and start", ErrorCode::Config);
        c.fit.free.push_back(p);
      }
    }
    auto& o = c.fit.optimizer;
    o.budget = get(jf, "budget", o.budget, "fit");
    o.restarts = get(jf, "restarts", o.restarts, "fit");
    o.seed = get(jf, "optimizer_seed", o.seed, "fit");
    o.rho_begin = get(jf, "rho_begin", o.rho_begin, "fit");
    o.rho_end = get(jf, "rho_end", o.rho_end, "fit");
    o.restart_spread = get(jf, "restart_spread", o.restart_spread, "fit");
    if (jf.contains("bootstrap")) {
      const auto& jb = jf.at("bootstrap");
      check_keys(jb, {"replications", "seed", "floor"}, "fit.bootstrap");
      auto& b = c.fit.bootstrap;
      b.replications = get(jb, "replications", b.replications, "fit.bootstrap");
      b.seed = get(jb, "seed", b.seed, "fit.bootstrap");
      b.floor = get(jb, "floor", b.floor, "fit.bootstrap");
    }
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, "config " + path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, fs::path(path).parent_path().string());
}

ParamSet RunConfig::params() const {
  ParamSet all = params_file.empty() ? shipped_params() : load_param_set(params_file);
  ParamSet out;
  for (auto g : abilities) {
    const auto it = all.find(g);
    if (it == all.end()) fail(ErrorCode::Config, "parameter file has no entry for " + std::string(ability_name(g)));
    ModelParams p = it->second;
    if (last_age) p.last_age = *last_age;
    try {
      validate(p);
    } catch (const Error& e) {
      fail(ErrorCode::Config, e.what());
    }
    out.emplace(g, p);
  }
  return out;
}

std::string RunConfig::effective_cache_dir() const {
  return cache_dir.empty() ? (fs::path(output_dir) / "cache").string() : cache_dir;
}

json to_json(const RunConfig& c) {
  json j;
  j["params_file"] = c.params_file;
  j["params"] = to_json(c.params());
  if (c.last_age) j["last_age"] = *c.last_age;
  std::vector<std::string> ab;
  for (auto g : c.abilities) ab.emplace_back(ability_name(g));
  j["abilities"] = ab;
  j["scenario"] = scenario_to_json(c.scenario, c.scenario_name);
  j["integration"] = {{"n_draws", c.integration.n_draws}, {"seed", c.integration.seed}, {"antithetic", c.integration.antithetic}};
  j["simulation"] = {{"n", c.sim_n}, {"seed", c.sim_seed}};
  j["initial_conditions"] = {{"ability_shares", c.init.ability_shares},
                             {"type_probs", c.init.type_probs},
                             {"hsprox_share", c.init.hsprox_share}};
  std::vector<std::string> cohorts;
  for (const auto& s : c.cohorts) cohorts.push_back(s.label());
  j["cohorts"] = cohorts;
  j["policy"] = {{"base", c.policy_base}, {"alt", c.policy_alt}};
  json free = json::array();
  for (const auto& f : c.fit.free) free.push_back({{"path", f.path}, {"lower", f.lower}, {"upper", f.upper}, {"start", f.start}});
  const auto& o = c.fit.optimizer;
  j["fit"] = {{"observed_panel", c.fit.observed_panel},
              {"observed_seed", c.fit.observed_seed},
              {"free", free},
              {"budget", o.budget},
              {"restarts", o.restarts},
              {"optimizer_seed", o.seed},
              {"rho_begin", o.rho_begin},
              {"rho_end", o.rho_end},
              {"restart_spread", o.restart_spread},
              {"bootstrap", {{"replications", c.fit.bootstrap.replications},
                             {"seed", c.fit.bootstrap.seed},
                             {"floor", c.fit.bootstrap.floor}}}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  // Paths are left out so the hash follows content, not location.
  json j = to_json(c);
  j.erase("params_file");
  j["fit"].erase("observed_panel");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace eduopt
