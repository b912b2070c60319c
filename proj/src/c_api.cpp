#include "eduopt.h"

#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "eduopt/analytics.hpp"
#include "eduopt/commands.hpp"
#include "eduopt/config.hpp"
#include "eduopt/error.hpp"
#include "eduopt/msm.hpp"

struct eduopt_context {
  eduopt::RunConfig config;
  eduopt::CommandOptions options;
  bool cohorts_overridden = false;
  std::string report;
};

struct eduopt_params {
  eduopt::ParamSet set;
};

struct eduopt_table {
  eduopt::ValueTable table;
};

struct eduopt_panel {
  eduopt::Panel panel;
  std::vector<int> finals;
};

namespace {

thread_local std::string last_error;

eduopt_status status_of(eduopt::ErrorCode code) {
  switch (code) {
    case eduopt::ErrorCode::Numeric:
    case eduopt::ErrorCode::OutOfRange:
      return EDUOPT_ERR_NUMERIC;
    default:
      return EDUOPT_ERR_CONFIG;
  }
}

template <class F>
eduopt_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return EDUOPT_OK;
  } catch (const eduopt::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return EDUOPT_ERR_NUMERIC;
  } catch (const std::exception& e) {
    last_error = e.what();
    return EDUOPT_ERR_NUMERIC;
  }
}

void need(const void* p, const char* what) {
  if (!p) eduopt::fail(eduopt::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

bool parse_flag(const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  eduopt::fail(eduopt::ErrorCode::Config, "expected 0 or 1, got '" + v + "'");
}

std::uint64_t parse_seed(const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') eduopt::fail(eduopt::ErrorCode::Config, "bad seed '" + v + "'");
  return x;
}

std::vector<eduopt::FreeParam> one_param(const char* name) {
  need(name, "parameter name");
  return {eduopt::FreeParam{name, 0.0, 0.0, 0.0}};
}

// The horizon is an integer field outside the numeric parameter paths.
std::vector<eduopt::ModelParams*> horizon_targets(eduopt::ParamSet& set, const std::string& name) {
  std::vector<eduopt::ModelParams*> out;
  if (name == "last_age") {
    for (auto& [g, p] : set) out.push_back(&p);
  } else if (const auto dot = name.find('.'); dot != std::string::npos && name.substr(dot + 1) == "last_age") {
    const auto it = set.find(eduopt::ability_from_name(name.substr(0, dot)));
    if (it == set.end()) eduopt::fail(eduopt::ErrorCode::Config, "no parameters for " + name.substr(0, dot));
    out.push_back(&it->second);
  }
  return out;
}

}  // namespace

extern "C" {

const char* eduopt_version(void) { return eduopt::kVersion; }

const char* eduopt_last_error(void) { return last_error.c_str(); }

eduopt_status eduopt_context_create(const char* config_path, eduopt_context** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto ctx = std::make_unique<eduopt_context>();
    if (config_path) ctx->config = eduopt::load_run_config(config_path);
    *out = ctx.release();
  });
}

void eduopt_context_destroy(eduopt_context* ctx) { delete ctx; }

eduopt_status eduopt_context_set(eduopt_context* ctx, const char* key, const char* value) {
  return guarded([&] {
    need(ctx, "context");
    need(key, "key");
    need(value, "value");
    const std::string k = key, v = value;
    auto& c = ctx->config;
    if (k == "seed") {
      c.sim_seed = parse_seed(v);
    } else if (k == "scenario") {
      try {
        c.scenario = eduopt::scenario_from_name(v);
      } catch (const eduopt::Error& e) {
        eduopt::fail(eduopt::ErrorCode::Config, e.what());
      }
      c.scenario_name = v;
    } else if (k == "out") {
      c.output_dir = v;
    } else if (k == "cohort") {
      if (!ctx->cohorts_overridden) c.cohorts.clear();
      ctx->cohorts_overridden = true;
      c.cohorts.push_back(eduopt::parse_cohort_spec(v));
    } else if (k == "panel") {
      ctx->options.panel_file = v;
    } else if (k == "shutoff") {
      ctx->options.shutoff = parse_flag(v);
    } else if (k == "zero-shock") {
      ctx->options.zero_shock_evaluation = parse_flag(v);
    } else if (k == "base") {
      eduopt::scenario_from_name(v);
      c.policy_base = v;
    } else if (k == "alt") {
      eduopt::scenario_from_name(v);
      c.policy_alt = v;
    } else {
      eduopt::fail(eduopt::ErrorCode::Config, "unknown setting '" + k + "'");
    }
  });
}

eduopt_status eduopt_run(eduopt_context* ctx, const char* command) {
  if (ctx) ctx->report.clear();
  return guarded([&] {
    need(ctx, "context");
    need(command, "command");
    std::ostringstream console;
    try {
      eduopt::run_command(command, ctx->config, ctx->options, console);
    } catch (...) {
      ctx->report = console.str();
      throw;
    }
    ctx->report = console.str();
  });
}

const char* eduopt_context_report(const eduopt_context* ctx) { return ctx ? ctx->report.c_str() : ""; }

eduopt_status eduopt_params_load(const char* path, eduopt_params** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto p = std::make_unique<eduopt_params>();
    p->set = path ? eduopt::load_param_set(path) : eduopt::shipped_params();
    *out = p.release();
  });
}

void eduopt_params_destroy(eduopt_params* p) { delete p; }

eduopt_status eduopt_params_get(const eduopt_params* p, const char* name, double* value) {
  return guarded([&] {
    need(p, "params");
    need(value, "value");
    need(name, "parameter name");
    auto copy = p->set;
    if (const auto targets = horizon_targets(copy, name); !targets.empty()) {
      *value = targets.front()->last_age;
      return;
    }
    *value = eduopt::read_theta(p->set, one_param(name)).at(0);
  });
}

eduopt_status eduopt_params_set(eduopt_params* p, const char* name, double value) {
  return guarded([&] {
    need(p, "params");
    need(name, "parameter name");
    auto copy = p->set;
    if (const auto targets = horizon_targets(copy, name); !targets.empty()) {
      if (!(value >= 0 && value <= 1000) || value != static_cast<int>(value)) eduopt::fail(eduopt::ErrorCode::Config, "last_age must be an integer");
      for (auto* mp : targets) mp->last_age = static_cast<int>(value);
    } else {
      const double theta[1] = {value};
      eduopt::apply_theta(copy, one_param(name), theta);
    }
    for (const auto& [g, mp] : copy) eduopt::validate(mp);
    p->set = std::move(copy);
  });
}

eduopt_status eduopt_params_save(const eduopt_params* p, const char* path) {
  return guarded([&] {
    need(p, "params");
    need(path, "path");
    eduopt::save_param_set(p->set, path);
  });
}

eduopt_status eduopt_table_solve(const eduopt_params* p, const char* ability, const char* scenario, int n_draws,
                                 uint64_t seed, const char* cache_dir, eduopt_table** out) {
  return guarded([&] {
    need(p, "params");
    need(ability, "ability");
    need(scenario, "scenario");
    need(out, "out");
    *out = nullptr;
    const auto g = eduopt::ability_from_name(ability);
    const auto it = p->set.find(g);
    if (it == p->set.end()) eduopt::fail(eduopt::ErrorCode::Config, std::string("no parameters for ") + ability);
    eduopt::IntegrationSpec spec;
    spec.n_draws = n_draws;
    spec.seed = seed;
    eduopt::validate(spec);
    const auto c = eduopt::scenario_from_name(scenario);
    auto vt = cache_dir ? eduopt::solve_cached(it->second, c, spec, cache_dir) : eduopt::solve(it->second, c, spec);
    *out = new eduopt_table{std::move(vt)};
  });
}

void eduopt_table_destroy(eduopt_table* t) { delete t; }

eduopt_status eduopt_table_states(const eduopt_table* t, size_t* n_states) {
  return guarded([&] {
    need(t, "table");
    need(n_states, "n_states");
    *n_states = t->table.space().size();
  });
}

eduopt_status eduopt_table_emax(const eduopt_table* t, int age, int k, int nA, int nV, int lag, int jtype, int hsprox,
                                double* value) {
  return guarded([&] {
    need(t, "table");
    need(value, "value");
    if (lag < 0 || lag > 3) eduopt::fail(eduopt::ErrorCode::InvalidArgument, "lag must be 0..3");
    eduopt::StateCore s;
    s.t = age;
    s.k = k;
    s.nA = nA;
    s.nV = nV;
    s.lag = static_cast<eduopt::ChoiceAlt>(lag);
    s.jtype = jtype;
    s.hsprox = hsprox != 0;
    eduopt::validate(s);
    *value = t->table.emax(s);
  });
}

eduopt_status eduopt_panel_simulate(const eduopt_params* p, const char* scenario, int n_individuals, uint64_t seed,
                                    int n_draws, uint64_t integration_seed, const char* cache_dir,
                                    eduopt_panel** out) {
  return guarded([&] {
    need(p, "params");
    need(scenario, "scenario");
    need(out, "out");
    *out = nullptr;
    if (n_individuals < 1) eduopt::fail(eduopt::ErrorCode::InvalidArgument, "n_individuals must be positive");
    eduopt::IntegrationSpec spec;
    spec.n_draws = n_draws;
    spec.seed = integration_seed;
    eduopt::validate(spec);
    const auto c = eduopt::scenario_from_name(scenario);
    eduopt::InitialConditions init;
    init.ability_shares.fill(0.0);
    for (const auto& [g, mp] : p->set) init.ability_shares[static_cast<std::size_t>(g)] = 1.0 / p->set.size();
    const auto tables = eduopt::solve_all(p->set, c, spec, cache_dir ? cache_dir : "");
    const int periods = p->set.begin()->second.last_age - eduopt::kEntryAge + 1;
    const auto shocks = eduopt::draw_shock_panel(seed, n_individuals, periods);
    auto panel = std::make_unique<eduopt_panel>();
    panel->panel = eduopt::simulate_panel(p->set, tables, shocks, init, c);
    panel->finals = eduopt::final_schooling(panel->panel);
    *out = panel.release();
  });
}

eduopt_status eduopt_panel_read(const char* path, eduopt_panel** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    std::ifstream in(path);
    if (!in) eduopt::fail(eduopt::ErrorCode::Config, std::string("cannot open ") + path);
    auto panel = std::make_unique<eduopt_panel>();
    panel->panel = eduopt::read_panel_csv(in);
    panel->finals = eduopt::final_schooling(panel->panel);
    *out = panel.release();
  });
}

void eduopt_panel_destroy(eduopt_panel* panel) { delete panel; }

eduopt_status eduopt_panel_size(const eduopt_panel* panel, size_t* n_individuals, size_t* n_rows) {
  return guarded([&] {
    need(panel, "panel");
    if (n_individuals) *n_individuals = static_cast<size_t>(panel->panel.n_individuals());
    if (n_rows) *n_rows = panel->panel.records.size();
  });
}

eduopt_status eduopt_panel_final_schooling(const eduopt_panel* panel, size_t individual, int* years) {
  return guarded([&] {
    need(panel, "panel");
    need(years, "years");
    if (individual >= panel->finals.size()) eduopt::fail(eduopt::ErrorCode::InvalidArgument, "individual out of range");
    *years = panel->finals[individual];
  });
}

eduopt_status eduopt_panel_write(const eduopt_panel* panel, const char* path) {
  return guarded([&] {
    need(panel, "panel");
    need(path, "path");
    std::ofstream out(path);
    if (!out) eduopt::fail(eduopt::ErrorCode::Config, std::string("cannot write ") + path);
    eduopt::write_panel_csv(panel->panel, out, std::string("eduopt ") + eduopt::kVersion + " command=panel_write");
  });
}

}  // extern "C"
