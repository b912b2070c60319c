#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eduopt/analytics.hpp"
#include "eduopt/msm.hpp"
#include "eduopt/params.hpp"
#include "eduopt/simulator.hpp"
#include "eduopt/solver.hpp"

namespace eduopt {

inline constexpr const char* kVersion = "0.1.0";

struct FitConfig {
  std::string observed_panel;  // empty: synthetic data from the configured parameters
  std::uint64_t observed_seed = 0;  // seed for synthetic data; 0 means the simulation seed
  std::vector<FreeParam> free;
  MinimizeOptions optimizer;
  BootstrapOptions bootstrap;
};

struct RunConfig {
  std::string params_file;  // empty: shipped parameters
  std::optional<int> last_age;
  std::vector<AbilityGroup> abilities{AbilityGroup::Low, AbilityGroup::Medium, AbilityGroup::High};
  std::string scenario_name = "baseline";
  ScenarioConstraint scenario;
  IntegrationSpec integration;
  int sim_n = 10000;
  std::uint64_t sim_seed = 1;
  InitialConditions init;
  std::string output_dir = "eduopt-out";
  std::string cache_dir;  // empty: <output_dir>/cache
  std::vector<CohortSpec> cohorts;
  std::string policy_base = "baseline";
  std::string policy_alt = "reform9";
  FitConfig fit;

  ParamSet params() const;
  std::string effective_cache_dir() const;
};

RunConfig default_run_config();
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = {});
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

// Stable hash of the effective configuration, for output metadata.
std::string config_hash(const RunConfig& c);

// The standard transition cohorts used when none are requested.
std::vector<CohortSpec> default_cohorts();

}  // namespace eduopt
