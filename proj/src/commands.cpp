#include "eduopt/commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "eduopt/analytics.hpp"
#include "eduopt/error.hpp"
#include "eduopt/msm.hpp"

namespace eduopt {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_output(const RunConfig& cfg, const std::string& file) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) fail(ErrorCode::Config, "cannot create output directory " + cfg.output_dir + ": " + ec.message());
  const auto path = fs::path(cfg.output_dir) / file;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Config, "cannot write " + path.string());
  return out;
}

std::string opt_num(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

// Mean and SD columns, blank when nothing was summarized.
std::string mean_sd(const Moments1& m) {
  return m.n > 0 ? format_number(m.mean) + "," + format_number(m.sd) : std::string(",");
}

ScenarioConstraint named_scenario(const std::string& name) {
  try {
    return scenario_from_name(name);
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
}

ValueTableSet tables_for(const RunConfig& cfg, const ParamSet& params, const ScenarioConstraint& c) {
  return solve_all(params, c, cfg.integration, cfg.effective_cache_dir());
}

ShockPanel shocks_for(const RunConfig& cfg, const ParamSet& params) {
  const int periods = params.begin()->second.last_age - kEntryAge + 1;
  return draw_shock_panel(cfg.sim_seed, cfg.sim_n, periods);
}

std::vector<CohortSpec> cohorts_for(const RunConfig& cfg) {
  return cfg.cohorts.empty() ? default_cohorts() : cfg.cohorts;
}

// ------------------------------------------------------------------ solve

void cmd_solve(const RunConfig& cfg, std::ostream& console) {
  const auto params = cfg.params();
  const int last_age = params.begin()->second.last_age;
  const auto space = shared_state_space(cfg.scenario.compulsory_min, last_age);
  console << fmt::format("scenario {}: {} reachable states over ages {}..{}, {} trait combinations\n",
                         cfg.scenario_name, space->size(), kEntryAge, last_age, kNumTraitCombos);
  auto out = open_output(cfg, "states.csv");
  out << "# " << metadata_line("solve", cfg) << "\n";
  out << "age,states\n";
  for (int t = kEntryAge; t <= last_age; ++t) out << t << "," << space->period_end(t) - space->period_begin(t) << "\n";

  for (const auto& [g, p] : params) {
    const auto t0 = Clock::now();
    bool hit = false;
    solve_cached(p, cfg.scenario, cfg.integration, cfg.effective_cache_dir(), &hit);
    console << fmt::format("{:<7} {} in {:.2f} s -> {}\n", ability_name(g), hit ? "cache hit" : "solved",
                           seconds_since(t0), cache_path(cfg.effective_cache_dir(), p, cfg.scenario, cfg.integration));
  }
}

// --------------------------------------------------------------- simulate

void cmd_simulate(const RunConfig& cfg, std::ostream& console) {
  const auto params = cfg.params();
  const auto tables = tables_for(cfg, params, cfg.scenario);
  const auto shocks = shocks_for(cfg, params);
  const auto panel = simulate_panel(params, tables, shocks, cfg.init, cfg.scenario);
  auto out = open_output(cfg, "panel.csv");
  write_panel_csv(panel, out, metadata_line("simulate", cfg));
  const auto finals = final_schooling(panel);
  double mean = 0.0;
  for (int y : finals) mean += y;
  console << fmt::format("simulated {} individuals, {} rows; mean final schooling {:.3f}\n", panel.n_individuals(),
                         panel.records.size(), finals.empty() ? 0.0 : mean / finals.size());
}

// ---------------------------------------------------------------- moments

void cmd_moments(const RunConfig& cfg, const CommandOptions& opts, std::ostream& console) {
  Panel panel;
  if (!opts.panel_file.empty()) {
    std::ifstream in(opts.panel_file);
    if (!in) fail(ErrorCode::Config, "cannot open panel file " + opts.panel_file);
    panel = read_panel_csv(in);
  } else {
    const auto params = cfg.params();
    panel = simulate_panel(params, tables_for(cfg, params, cfg.scenario), shocks_for(cfg, params), cfg.init,
                           cfg.scenario);
  }
  const auto m = compute_moments(panel);
  auto out = open_output(cfg, "moments.csv");
  write_moments_csv(m, out, metadata_line("moments", cfg));
  console << fmt::format("{} moment keys, {} present\n", m.size(), m.n_present());
}

// -------------------------------------------------------------------- fit

void cmd_fit(const RunConfig& cfg, std::ostream& console) {
  if (cfg.fit.free.empty()) fail(ErrorCode::Config, "fit.free lists no parameters");
  const auto truth = cfg.params();
  const int periods = truth.begin()->second.last_age - kEntryAge + 1;

  SimConfig sim;
  sim.n = cfg.sim_n;
  sim.seed = cfg.sim_seed;
  sim.integration = cfg.integration;
  sim.init = cfg.init;
  sim.constraint = cfg.scenario;

  Panel observed;
  if (!cfg.fit.observed_panel.empty()) {
    std::ifstream in(cfg.fit.observed_panel);
    if (!in) fail(ErrorCode::Config, "cannot open observed panel " + cfg.fit.observed_panel);
    observed = read_panel_csv(in);
  } else {
    // Synthetic data from the configured parameters.
    const std::uint64_t seed = cfg.fit.observed_seed ? cfg.fit.observed_seed : cfg.sim_seed;
    const auto shocks = draw_shock_panel(seed, cfg.sim_n, periods);
    observed = simulate_panel(truth, tables_for(cfg, truth, cfg.scenario), shocks, cfg.init, cfg.scenario);
  }
  const auto observed_moments = compute_moments(observed);
  const auto weights = weight_from_observed(observed, cfg.fit.bootstrap);

  // Start from the configured start values, not from the parameter file.
  ParamSet base = truth;
  std::vector<double> start;
  for (const auto& f : cfg.fit.free) start.push_back(f.start);
  apply_theta(base, cfg.fit.free, start);

  const MsmProblem problem(base, cfg.fit.free, observed_moments, weights, sim);
  const auto t0 = Clock::now();
  const auto result = fit(problem, cfg.fit.optimizer);

  nlohmann::json free = nlohmann::json::array();
  const auto reference = read_theta(truth, cfg.fit.free);
  for (std::size_t i = 0; i < cfg.fit.free.size(); ++i) {
    const auto& f = cfg.fit.free[i];
    free.push_back({{"path", f.path},
                    {"lower", f.lower},
                    {"upper", f.upper},
                    {"start", f.start},
                    {"estimate", result.theta[i]},
                    {"configured", reference[i]}});
  }
  nlohmann::json j = {{"criterion", result.value},
                      {"evaluations", result.search.evaluations},
                      {"budget_exhausted", result.search.budget_exhausted},
                      {"moments_used", observed_moments.n_present()},
                      {"free", free},
                      {"params", to_json(result.estimates)}};
  auto out = open_output(cfg, "estimates.json");
  out << "# " << metadata_line("fit", cfg) << "\n" << j.dump(2) << "\n";
  auto trace = open_output(cfg, "trace.csv");
  write_trace_csv(result.search, trace, metadata_line("fit", cfg));

  console << fmt::format("criterion {:.6g} after {} evaluations{} in {:.1f} s\n", result.value,
                         result.search.evaluations, result.search.budget_exhausted ? " (budget exhausted)" : "",
                         seconds_since(t0));
  for (std::size_t i = 0; i < cfg.fit.free.size(); ++i)
    console << fmt::format("  {:<28} start {:>12.6g}  estimate {:>12.6g}\n", cfg.fit.free[i].path,
                           cfg.fit.free[i].start, result.theta[i]);
}

// --------------------------------------------------------- cohort analytics

struct CohortRun {
  ParamSet params;
  ShockPanel shocks;
  Panel panel;
  ValueTableSet full;
  ValueTableSet noschool;
};

CohortRun prepare_cohort_run(const RunConfig& cfg, bool need_noschool) {
  auto params = cfg.params();
  auto shocks = shocks_for(cfg, params);
  auto full = tables_for(cfg, params, cfg.scenario);
  ValueTableSet noschool;
  if (need_noschool) {
    ScenarioConstraint c = cfg.scenario;
    c.no_future_schooling = true;
    noschool = tables_for(cfg, params, c);
  }
  auto panel = simulate_panel(params, full, shocks, cfg.init, cfg.scenario);
  return {std::move(params), std::move(shocks), std::move(panel), std::move(full), std::move(noschool)};
}

std::string summary_prefix(const CohortSummary& s) {
  return fmt::format("{},{},{},{},{}", s.cohort, ability_name(s.ability), s.year, choice_name(s.track), s.n);
}

void cmd_returns(const RunConfig& cfg, const CommandOptions& opts, std::ostream& console) {
  const auto run = prepare_cohort_run(cfg, false);
  const std::string meta = "# " + metadata_line("returns", cfg);
  auto out = open_output(cfg, "returns.csv");
  auto ind = open_output(cfg, "returns_individual.csv");
  out << meta << "\ncohort,ability,year,track,n,mean_er,sd_er,mean_ex_post,sd_ex_post,excluded,dropped\n";
  ind << meta << "\ncohort,id,ability,type,hsprox,chosen,ex_ante,ex_post\n";
  CohortOptions copts;
  copts.zero_shock_evaluation = opts.zero_shock_evaluation;
  for (const auto& spec : cohorts_for(cfg)) {
    const auto cohort = find_cohort(run.panel, spec);
    const auto members = evaluate_cohort(cohort, run.panel, run.shocks, run.params, run.full, nullptr, copts);
    if (members.empty()) console << "warning: cohort " << spec.label() << " is empty\n";
    for (const auto& s : summarize_cohort(cohort, members))
      out << summary_prefix(s)
          << fmt::format(",{},{},{},{}\n", mean_sd(s.er), mean_sd(s.ex_post), s.excluded ? 1 : 0, s.dropped);
    for (const auto& m : members)
      ind << fmt::format("{},{},{},{},{},{},{},{}\n", spec.label(), m.id, ability_name(m.ability), m.jtype,
                         m.hsprox ? 1 : 0, choice_name(m.chosen), opt_num(m.ex_ante), opt_num(m.ex_post));
  }

  auto re = open_output(cfg, "reenrollment.csv");
  re << meta << "\ndropout_year,ability,final_schooling,count,total\n";
  for (int year = kBasicSchooling; year <= 12; ++year) {
    const auto table = reenrollment_outcomes(run.panel, year);
    for (const auto& [g, counts] : table.final_counts)
      for (const auto& [final_years, n] : counts)
        re << fmt::format("{},{},{},{},{}\n", year, ability_name(g), final_years, n, table.totals.at(g));
  }
  console << fmt::format("returns for {} cohorts over {} individuals\n", cohorts_for(cfg).size(),
                         run.panel.n_individuals());
}

void write_ovc_rows(std::ostream& out, const std::string& scenario, const CohortSummary& s) {
  out << scenario << "," << summary_prefix(s)
      << fmt::format(",{},{},{},{}\n", mean_sd(s.ovc), s.er.n > 0 ? format_number(s.er.mean) : "",
                     s.excluded ? 1 : 0, s.dropped);
}

void cmd_option_values(const RunConfig& cfg, const CommandOptions& opts, std::ostream& console) {
  const std::string meta = "# " + metadata_line("option-values", cfg);
  auto out = open_output(cfg, "ovc.csv");
  out << meta << "\nscenario,cohort,ability,year,track,n,mean_ovc,sd_ovc,mean_er,excluded,dropped\n";
  const auto cohorts = cohorts_for(cfg);

  if (opts.shutoff) {
    const auto params = cfg.params();
    const auto shocks = shocks_for(cfg, params);
    const auto rows = shock_shutoff_study(params, cohorts, cfg.integration, shocks, cfg.init, cfg.effective_cache_dir());
    auto cells = open_output(cfg, "shutoff_cells.csv");
    cells << meta << "\nscenario,cohort,ability,type,hsprox,n,mean_er,var_er\n";
    for (const auto& row : rows) {
      write_ovc_rows(out, row.scenario, row.summary);
      for (const auto& [cell, m] : row.er_cells)
        cells << fmt::format("{},{},{},{},{},{},{},{}\n", row.scenario, row.summary.cohort,
                             ability_name(std::get<0>(cell)), std::get<1>(cell), std::get<2>(cell) ? 1 : 0, m.n,
                             format_number(m.mean), format_number(m.var));
    }
    console << fmt::format("shock shut-off study: {} rows\n", rows.size());
    return;
  }

  const auto run = prepare_cohort_run(cfg, true);
  CohortOptions copts;
  copts.zero_shock_evaluation = opts.zero_shock_evaluation;
  for (const auto& spec : cohorts) {
    const auto cohort = find_cohort(run.panel, spec);
    const auto members = evaluate_cohort(cohort, run.panel, run.shocks, run.params, run.full, &run.noschool, copts);
    if (members.empty()) console << "warning: cohort " << spec.label() << " is empty\n";
    for (const auto& s : summarize_cohort(cohort, members)) write_ovc_rows(out, cfg.scenario_name, s);
  }
  console << fmt::format("option values for {} cohorts\n", cohorts.size());
}

void cmd_compliers(const RunConfig& cfg, const CommandOptions& opts, std::ostream& console) {
  const auto run = prepare_cohort_run(cfg, true);
  auto out = open_output(cfg, "compliers.csv");
  out << "# " << metadata_line("compliers", cfg) << "\ncohort,ability,year,track,n,always,never,marginal,excluded\n";
  CohortOptions copts;
  copts.zero_shock_evaluation = opts.zero_shock_evaluation;
  for (const auto& spec : cohorts_for(cfg)) {
    const auto cohort = find_cohort(run.panel, spec);
    const auto members = evaluate_cohort(cohort, run.panel, run.shocks, run.params, run.full, &run.noschool, copts);
    if (members.empty()) console << "warning: cohort " << spec.label() << " is empty\n";
    for (const auto& s : summarize_cohort(cohort, members))
      out << summary_prefix(s) << fmt::format(",{},{},{},{}\n", format_number(s.always_share),
                                              format_number(s.never_share), format_number(s.marginal_share),
                                              s.excluded ? 1 : 0);
  }
  console << fmt::format("complier shares for {} cohorts\n", cohorts_for(cfg).size());
}

// ----------------------------------------------------------------- policy

double share_at_least(const std::vector<int>& years, int threshold) {
  if (years.empty()) return 0.0;
  const auto n = std::count_if(years.begin(), years.end(), [&](int y) { return y >= threshold; });
  return static_cast<double>(n) / static_cast<double>(years.size());
}

void cmd_policy(const RunConfig& cfg, std::ostream& console) {
  const auto r = policy_report(cfg, cfg.policy_base, cfg.policy_alt);
  const std::string meta = "# " + metadata_line("policy", cfg) + fmt::format(" base={} alt={}", r.base, r.alt);

  auto ind = open_output(cfg, "policy_individual.csv");
  ind << meta << "\nid,base_schooling,alt_schooling,delta\n";
  for (std::size_t i = 0; i < r.base_schooling.size(); ++i)
    ind << fmt::format("{},{},{},{}\n", i, r.base_schooling[i], r.alt_schooling[i],
                       r.alt_schooling[i] - r.base_schooling[i]);

  auto aff = open_output(cfg, "policy_affected.csv");
  aff << meta << "\nbase_schooling,n,affected,share\n";
  for (const auto& [years, counts] : r.affected)
    aff << fmt::format("{},{},{},{}\n", years, counts.first, counts.second, format_number(r.affected_share(years)));

  auto dist = open_output(cfg, "policy_distribution.csv");
  dist << meta << "\nyears,base_share,alt_share\n";
  const double n = static_cast<double>(std::max<std::size_t>(r.base_schooling.size(), 1));
  for (int y = kBasicSchooling; y <= kMaxSchooling; ++y) {
    const auto b = std::count(r.base_schooling.begin(), r.base_schooling.end(), y);
    const auto a = std::count(r.alt_schooling.begin(), r.alt_schooling.end(), y);
    dist << fmt::format("{},{},{}\n", y, format_number(b / n), format_number(a / n));
  }

  auto sum = open_output(cfg, "policy_summary.csv");
  sum << meta << "\nstatistic,base,alt,change\n";
  sum << fmt::format("share_ge12,{},{},{}\n", format_number(r.base_ge12), format_number(r.alt_ge12),
                     format_number(r.alt_ge12 - r.base_ge12));
  sum << fmt::format("share_ge16,{},{},{}\n", format_number(r.base_ge16), format_number(r.alt_ge16),
                     format_number(r.alt_ge16 - r.base_ge16));
  console << fmt::format("{} -> {}: share >=12 years {:+.4f}, share >=16 years {:+.4f}\n", r.base, r.alt,
                         r.alt_ge12 - r.base_ge12, r.alt_ge16 - r.base_ge16);
}

void cmd_validate(const RunConfig& cfg, std::ostream& console) {
  const auto checks = reform_validation(cfg);
  auto out = open_output(cfg, "validation.csv");
  out << "# " << metadata_line("validate", cfg) << "\ncheck,value,expected,pass\n";
  for (const auto& c : checks) {
    out << fmt::format("{},{},{},{}\n", c.name, format_number(c.value), c.expected, c.pass ? 1 : 0);
    console << fmt::format("{} {} = {:.6g} (expected {})\n", c.pass ? "ok  " : "FAIL", c.name, c.value, c.expected);
  }
}

}  // namespace

double PolicyReport::affected_share(int base_years) const {
  const auto it = affected.find(base_years);
  if (it == affected.end() || it->second.first == 0) return 0.0;
  return static_cast<double>(it->second.second) / it->second.first;
}

PolicyReport policy_report(const RunConfig& cfg, const std::string& base, const std::string& alt) {
  const auto params = cfg.params();
  const auto shocks = shocks_for(cfg, params);
  const auto pair = simulate_counterfactual_pair(params, named_scenario(base), named_scenario(alt), cfg.integration,
                                                 shocks, cfg.init, cfg.effective_cache_dir());
  PolicyReport r;
  r.base = base;
  r.alt = alt;
  r.base_schooling = final_schooling(pair.base);
  r.alt_schooling = final_schooling(pair.alt);
  r.base_ge12 = share_at_least(r.base_schooling, 12);
  r.alt_ge12 = share_at_least(r.alt_schooling, 12);
  r.base_ge16 = share_at_least(r.base_schooling, 16);
  r.alt_ge16 = share_at_least(r.alt_schooling, 16);
  r.alt_min = r.alt_schooling.empty() ? 0 : *std::min_element(r.alt_schooling.begin(), r.alt_schooling.end());
  for (std::size_t i = 0; i < r.base_schooling.size(); ++i) {
    auto& cell = r.affected[r.base_schooling[i]];
    ++cell.first;
    if (r.alt_schooling[i] != r.base_schooling[i]) ++cell.second;
  }
  return r;
}

std::vector<ValidationCheck> reform_validation(const RunConfig& cfg) {
  const auto r9 = policy_report(cfg, "baseline", "reform9");
  const auto r10 = policy_report(cfg, "reform9", "reform10");
  std::vector<ValidationCheck> out;
  out.push_back({"reform9_min_schooling", static_cast<double>(r9.alt_min), "== 9", r9.alt_min == 9});
  const double a9 = r9.affected_share(9);
  out.push_back({"reform9_affected_share_base9", a9, "> 0", a9 > 0.0});
  const double d12 = r9.alt_ge12 - r9.base_ge12;
  out.push_back({"reform9_change_ge12", d12, "> 0 (predicted +0.032)", d12 > 0.0});
  const double d16 = r9.alt_ge16 - r9.base_ge16;
  out.push_back({"reform9_change_ge16", d16, ">= 0 (predicted +0.003)", d16 >= 0.0});
  const double d10 = r10.alt_ge12 - r10.base_ge12;
  out.push_back({"reform10_vs_reform9_change_ge12", d10, "> 0 (0.68 to above 0.83)", d10 > 0.0});
  return out;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve",   "simulate",      "moments",   "fit",   "returns",
                                              "option-values", "compliers", "policy", "validate"};
  return names;
}

std::string metadata_line(const std::string& command, const RunConfig& cfg) {
  return fmt::format("eduopt {} command={} config_hash={} seed={} scenario={}", kVersion, command, config_hash(cfg),
                     cfg.sim_seed, cfg.scenario_name);
}

void run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts, std::ostream& console) {
  if (name == "solve") return cmd_solve(cfg, console);
  if (name == "simulate") return cmd_simulate(cfg, console);
  if (name == "moments") return cmd_moments(cfg, opts, console);
  if (name == "fit") return cmd_fit(cfg, console);
  if (name == "returns") return cmd_returns(cfg, opts, console);
  if (name == "option-values") return cmd_option_values(cfg, opts, console);
  if (name == "compliers") return cmd_compliers(cfg, opts, console);
  if (name == "policy") return cmd_policy(cfg, console);
  if (name == "validate") return cmd_validate(cfg, console);
  fail(ErrorCode::Config, "unknown command '" + name + "'");
}

}  // namespace eduopt
