#include "eduopt/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eduopt/error.hpp"
#include "eduopt/model.hpp"

namespace eduopt {

double best_outside_value(const StateCore& s, const ShockVec& z, const ValueTable& vt, const ModelParams& p) {
  const auto values = alt_values(s, z, vt, p);
  const auto& w = values[index(ChoiceAlt::Work)];
  const auto& h = values[index(ChoiceAlt::Home)];
  require(w || h, "neither Work nor Home is feasible at this state");
  if (w && h) return std::max(*w, *h);
  return w ? *w : *h;
}

std::optional<double> ex_ante_return(const StateCore& s, ChoiceAlt track, const ShockVec& z,
                                     const ValueTable& vt_full, const ModelParams& p) {
  require(is_schooling(track), "ex-ante return needs a schooling track");
  const double outside = best_outside_value(s, z, vt_full, p);
  if (outside <= 0.0) return std::nullopt;
  return (alt_value(s, track, z, vt_full, p) - outside) / outside;
}

double realized_value(std::span<const PathStep> path, const ModelParams& p, const ScenarioConstraint& c) {
  double total = 0.0, disc = 1.0;
  for (const auto& step : path) {
    total += disc * flow_utility(step.state, step.choice, p, step.shock, c);
    disc *= p.delta;
  }
  return total;
}

std::optional<double> ex_post_return(std::span<const PathStep> path, const StateCore& s, ChoiceAlt track,
                                     const ValueTable& vt_full, const ModelParams& p) {
  require(!path.empty() && path.front().state == s && path.front().choice == track,
          "path must start at the decision state with the schooling choice");
  const double outside = best_outside_value(s, path.front().shock, vt_full, p);
  if (outside <= 0.0) return std::nullopt;
  return (realized_value(path, p, vt_full.constraint()) - outside) / outside;
}

std::vector<PathStep> panel_path(const Panel& panel, const ShockPanel& shocks, std::size_t row) {
  const auto& first = panel.records.at(row);
  std::vector<PathStep> path;
  for (std::size_t r = row; r < panel.records.size() && panel.records[r].id == first.id; ++r) {
    const auto& rec = panel.records[r];
    path.push_back({state_before(panel, r), rec.choice, shocks.at(rec.id, rec.age - panel.first_age)});
  }
  return path;
}

OptionValue option_value(const StateCore& s, ChoiceAlt track, const ShockVec& z, const ValueTable& vt_full,
                         const ValueTable& vt_noschool, const ModelParams& p) {
  require(is_schooling(track), "option value needs a schooling track");
  const auto& cf = vt_full.constraint();
  const auto& cn = vt_noschool.constraint();
  require(cn.no_future_schooling && !cf.no_future_schooling, "restricted table must forbid further schooling");
  require(cf.compulsory_min == cn.compulsory_min && cf.zero_wage_risk == cn.zero_wage_risk &&
              cf.zero_taste_shocks == cn.zero_taste_shocks,
          "restricted and full tables must share the scenario");
  OptionValue out;
  const auto values = alt_values(s, z, vt_full, p);
  out.state_value = -std::numeric_limits<double>::infinity();
  for (const auto& v : values)
    if (v) out.state_value = std::max(out.state_value, *v);
  if (s.total_schooling() >= kMaxSchooling) {
    out.ovc = out.state_value > 0.0 ? std::optional<double>(0.0) : std::nullopt;
    return out;
  }
  out.value_optimal = alt_value(s, track, z, vt_full, p);
  out.value_restricted = flow_utility(s, track, p, z, cf);
  if (s.t < vt_full.last_age())
    out.value_restricted += p.delta * vt_noschool.emax(transition(s, track, vt_full.last_age()));
  out.ov = out.value_optimal - out.value_restricted;
  if (out.state_value > 0.0) out.ovc = out.ov / out.state_value;
  return out;
}

std::string_view complier_name(ComplierClass c) {
  switch (c) {
    case ComplierClass::AlwaysTaker: return "always";
    case ComplierClass::NeverTaker: return "never";
    case ComplierClass::Marginal: return "marginal";
  }
  return "marginal";
}

ComplierClass classify_complier(const StateCore& s, ChoiceAlt track, const ShockVec& z, const ValueTable& vt_full,
                                const ValueTable& vt_noschool, const ModelParams& p) {
  const auto ov = option_value(s, track, z, vt_full, vt_noschool, p);
  const double outside = best_outside_value(s, z, vt_full, p);
  if (ov.value_restricted > outside) return ComplierClass::AlwaysTaker;
  if (ov.value_optimal < outside) return ComplierClass::NeverTaker;
  return ComplierClass::Marginal;
}

// ------------------------------------------------------------------ cohorts

std::string CohortSpec::label() const {
  std::string out = std::string(choice_name(track)) + "-" + std::to_string(year);
  if (ability) out += "-" + std::string(ability_name(*ability));
  return out;
}

CohortSpec parse_cohort_spec(const std::string& text) {
  CohortSpec spec;
  bool have_track = false, have_year = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Config, "cohort item '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "track") {
      if (value == "academic") spec.track = ChoiceAlt::Academic;
      else if (value == "vocational") spec.track = ChoiceAlt::Vocational;
      else fail(ErrorCode::Config, "cohort track must be academic or vocational");
      have_track = true;
    } else if (key == "year") {
      try {
        spec.year = std::stoi(value);
      } catch (const std::exception&) {
        fail(ErrorCode::Config, "cohort year '" + value + "' is not an integer");
      }
      have_year = true;
    } else if (key == "ability") {
      try {
        spec.ability = ability_from_name(value);
      } catch (const Error&) {
        fail(ErrorCode::Config, "unknown cohort ability '" + value + "'");
      }
    } else {
      fail(ErrorCode::Config, "unknown cohort key '" + key + "'");
    }
  }
  require(have_track && have_year, "cohort spec needs track= and year=", ErrorCode::Config);
  require(spec.year >= 8 && spec.year <= kMaxSchooling, "cohort year outside [8, 25]", ErrorCode::Config);
  return spec;
}

bool TransitionCohort::excluded(AbilityGroup g) const {
  const auto pop = population.find(g);
  if (pop == population.end() || pop->second == 0) return true;
  const auto mem = members.find(g);
  const int m = mem == members.end() ? 0 : mem->second;
  return static_cast<double>(m) / pop->second < kCohortExclusionShare;
}

TransitionCohort find_cohort(const Panel& panel, const CohortSpec& spec) {
  TransitionCohort cohort;
  cohort.spec = spec;
  const int age = spec.decision_age();
  const int offset = age - panel.first_age;
  for (int i = 0; i < panel.n_individuals(); ++i) {
    const auto h = panel.history(i);
    const AbilityGroup g = h.front().ability;
    if (spec.ability && *spec.ability != g) continue;
    ++cohort.population[g];
    cohort.members.try_emplace(g, 0);
    if (offset < 0 || offset >= panel.periods()) continue;
    bool uninterrupted = true;
    for (int q = 0; q < offset && uninterrupted; ++q) uninterrupted = h[static_cast<std::size_t>(q)].choice == spec.track;
    if (!uninterrupted) continue;
    cohort.rows.push_back(static_cast<std::size_t>(i) * panel.periods() + static_cast<std::size_t>(offset));
    ++cohort.members[g];
  }
  return cohort;
}

std::vector<MemberEvaluation> evaluate_cohort(const TransitionCohort& cohort, const Panel& panel,
                                              const ShockPanel& shocks, const ParamSet& params,
                                              const ValueTableSet& full, const ValueTableSet* noschool,
                                              const CohortOptions& opts) {
  std::vector<MemberEvaluation> out;
  out.reserve(cohort.rows.size());
  const ChoiceAlt track = cohort.spec.track;
  for (std::size_t row : cohort.rows) {
    const auto& rec = panel.records[row];
    const StateCore s = state_before(panel, row);
    const ModelParams& p = params.at(rec.ability);
    const ValueTable& vt = full.at(rec.ability);
    const ShockVec z = opts.zero_shock_evaluation ? ShockVec{} : shocks.at(rec.id, rec.age - panel.first_age);
    MemberEvaluation m;
    m.id = rec.id;
    m.ability = rec.ability;
    m.jtype = rec.jtype;
    m.hsprox = rec.hsprox;
    m.chosen = rec.choice;
    if (!is_feasible(s, track, vt.constraint())) continue;
    m.ex_ante = ex_ante_return(s, track, z, vt, p);
    if (rec.choice == track && !opts.zero_shock_evaluation) {
      const auto path = panel_path(panel, shocks, row);
      m.ex_post = ex_post_return(path, s, track, vt, p);
    }
    if (noschool) {
      const ValueTable& vn = noschool->at(rec.ability);
      m.option = option_value(s, track, z, vt, vn, p);
      m.complier = classify_complier(s, track, z, vt, vn, p);
    }
    out.push_back(m);
  }
  return out;
}

Moments1 summarize(std::span<const double> xs) {
  Moments1 m;
  double mean = 0.0, m2 = 0.0;
  for (double x : xs) {
    ++m.n;
    const double d = x - mean;
    mean += d / m.n;
    m2 += d * (x - mean);
  }
  m.mean = mean;
  if (m.n >= 2) {
    m.var = m2 / (m.n - 1);
    m.sd = std::sqrt(m.var);
  }
  return m;
}

std::vector<CohortSummary> summarize_cohort(const TransitionCohort& cohort,
                                            std::span<const MemberEvaluation> members) {
  std::vector<CohortSummary> out;
  for (auto g : kAllAbilities) {
    if (!cohort.population.count(g)) continue;
    CohortSummary row;
    row.cohort = cohort.spec.label();
    row.ability = g;
    row.year = cohort.spec.year;
    row.track = cohort.spec.track;
    row.excluded = cohort.excluded(g);
    std::vector<double> er, post, ovc;
    int always = 0, never = 0, marginal = 0;
    for (const auto& m : members) {
      if (m.ability != g) continue;
      ++row.n;
      if (m.ex_ante) er.push_back(*m.ex_ante);
      else ++row.dropped;
      if (m.ex_post) post.push_back(*m.ex_post);
      if (m.option.ovc) ovc.push_back(*m.option.ovc);
      always += m.complier == ComplierClass::AlwaysTaker;
      never += m.complier == ComplierClass::NeverTaker;
      marginal += m.complier == ComplierClass::Marginal;
    }
    row.er = summarize(er);
    row.ex_post = summarize(post);
    row.ovc = summarize(ovc);
    if (row.n > 0) {
      row.always_share = static_cast<double>(always) / row.n;
      row.never_share = static_cast<double>(never) / row.n;
      row.marginal_share = static_cast<double>(marginal) / row.n;
    }
    out.push_back(row);
  }
  return out;
}

// ------------------------------------------------------------ re-enrollment

ReenrollmentTable reenrollment_outcomes(const Panel& panel, int dropout_year) {
  ReenrollmentTable table;
  table.dropout_year = dropout_year;
  for (int i = 0; i < panel.n_individuals(); ++i) {
    const auto h = panel.history(i);
    int schooling = kBasicSchooling;
    std::optional<int> first_exit;
    for (const auto& r : h) {
      if (!is_schooling(r.choice)) {
        first_exit = schooling;
        break;
      }
      schooling = kBasicSchooling + r.nA + r.nV;
    }
    if (!first_exit || *first_exit != dropout_year) continue;
    const AbilityGroup g = h.front().ability;
    ++table.final_counts[g][kBasicSchooling + h.back().nA + h.back().nV];
    ++table.totals[g];
  }
  return table;
}

// --------------------------------------------------------- shock shut-offs

std::vector<ShutoffRow> shock_shutoff_study(const ParamSet& params, std::span<const CohortSpec> cohorts,
                                            const IntegrationSpec& spec, const ShockPanel& shocks,
                                            const InitialConditions& init, const std::string& cache_dir) {
  std::vector<ShutoffRow> out;
  for (const char* name : {"baseline", "no-wage-risk", "no-shocks"}) {
    const ScenarioConstraint c = scenario_from_name(name);
    ScenarioConstraint cn = c;
    cn.no_future_schooling = true;
    const auto full = solve_all(params, c, spec, cache_dir);
    const auto restricted = solve_all(params, cn, spec, cache_dir);
    const Panel panel = simulate_panel(params, full, shocks, init, c);
    for (const auto& cs : cohorts) {
      const auto cohort = find_cohort(panel, cs);
      const auto members = evaluate_cohort(cohort, panel, shocks, params, full, &restricted);
      for (const auto& summary : summarize_cohort(cohort, members)) {
        ShutoffRow row;
        row.scenario = name;
        row.summary = summary;
        std::map<std::tuple<AbilityGroup, int, bool>, std::vector<double>> cells;
        for (const auto& m : members)
          if (m.ability == summary.ability && m.ex_ante) cells[{m.ability, m.jtype, m.hsprox}].push_back(*m.ex_ante);
        for (const auto& [key, xs] : cells) row.er_cells[key] = summarize(xs);
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

}  // namespace eduopt
