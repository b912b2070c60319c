#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eduopt/params.hpp"
#include "eduopt/simulator.hpp"
#include "eduopt/solver.hpp"

namespace eduopt {

// Best non-schooling value max{v(s,W), v(s,H)} under the table's choice set.
double best_outside_value(const StateCore& s, const ShockVec& z, const ValueTable& vt, const ModelParams& p);

// (v(s,G) - v~) / v~. nullopt when v~ <= 0 (the ratio is not meaningful).
std::optional<double> ex_ante_return(const StateCore& s, ChoiceAlt track, const ShockVec& z,
                                     const ValueTable& vt_full, const ModelParams& p);

struct PathStep {
  StateCore state;
  ChoiceAlt choice = ChoiceAlt::Home;
  ShockVec shock;
};

// Realized discounted utility of a path, discounted to its first step.
double realized_value(std::span<const PathStep> path, const ModelParams& p, const ScenarioConstraint& c);

// Path must start at s with choice G. Same denominator guard as ex_ante_return.
std::optional<double> ex_post_return(std::span<const PathStep> path, const StateCore& s, ChoiceAlt track,
                                     const ValueTable& vt_full, const ModelParams& p);

// The simulated path of one individual from a given panel row to the end.
std::vector<PathStep> panel_path(const Panel& panel, const ShockPanel& shocks, std::size_t row);

struct OptionValue {
  double ov = 0.0;                // v*(s,G) - v^(s,G)
  std::optional<double> ovc;      // ov / v*(s); nullopt when v*(s) <= 0
  double value_optimal = 0.0;     // v*(s,G)
  double value_restricted = 0.0;  // v^(s,G)
  double state_value = 0.0;       // v*(s) = max_a v(s,a)
};

// vt_noschool must be solved with no_future_schooling and otherwise the same
// scenario as vt_full. At the schooling cap the option value is zero.
OptionValue option_value(const StateCore& s, ChoiceAlt track, const ShockVec& z, const ValueTable& vt_full,
                         const ValueTable& vt_noschool, const ModelParams& p);

enum class ComplierClass { AlwaysTaker, NeverTaker, Marginal };
std::string_view complier_name(ComplierClass c);

ComplierClass classify_complier(const StateCore& s, ChoiceAlt track, const ShockVec& z, const ValueTable& vt_full,
                                const ValueTable& vt_noschool, const ModelParams& p);

// --------------------------------------------------------------- cohorts

struct CohortSpec {
  ChoiceAlt track = ChoiceAlt::Academic;
  int year = 8;  // schooling year about to be taken
  std::optional<AbilityGroup> ability;

  int decision_age() const { return kEntryAge + (year - 8); }
  std::string label() const;
};

// "track=academic,year=11,ability=high" (ability optional).
CohortSpec parse_cohort_spec(const std::string& text);

inline constexpr double kCohortExclusionShare = 0.005;

struct TransitionCohort {
  CohortSpec spec;
  std::vector<std::size_t> rows;  // panel rows at the decision age
  std::map<AbilityGroup, int> members;
  std::map<AbilityGroup, int> population;

  bool excluded(AbilityGroup g) const;
};

// Members took the track in every period since entry and face their
// spec.year-th schooling year at the decision age.
TransitionCohort find_cohort(const Panel& panel, const CohortSpec& spec);

struct CohortOptions {
  bool zero_shock_evaluation = false;  // evaluate at z = 0 instead of realized shocks
};

struct MemberEvaluation {
  int id = 0;
  AbilityGroup ability = AbilityGroup::Low;
  int jtype = 3;
  bool hsprox = false;
  ChoiceAlt chosen = ChoiceAlt::Home;
  std::optional<double> ex_ante;
  std::optional<double> ex_post;  // members who took the track
  OptionValue option;
  ComplierClass complier = ComplierClass::Marginal;
};

// vt_noschool may be empty, in which case option values and complier
// classes are left at their defaults.
std::vector<MemberEvaluation> evaluate_cohort(const TransitionCohort& cohort, const Panel& panel,
                                              const ShockPanel& shocks, const ParamSet& params,
                                              const ValueTableSet& full, const ValueTableSet* noschool,
                                              const CohortOptions& opts = {});

struct Moments1 {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample SD, 0 when n < 2
  double var = 0.0;
};

// Welford accumulation: identical inputs give exactly zero variance.
Moments1 summarize(std::span<const double> xs);

struct CohortSummary {
  std::string cohort;
  AbilityGroup ability = AbilityGroup::Low;
  int year = 0;
  ChoiceAlt track = ChoiceAlt::Academic;
  int n = 0;
  bool excluded = false;
  Moments1 er;
  Moments1 ex_post;
  Moments1 ovc;
  int dropped = 0;  // members with a degenerate denominator
  double always_share = 0.0;
  double never_share = 0.0;
  double marginal_share = 0.0;
};

std::vector<CohortSummary> summarize_cohort(const TransitionCohort& cohort,
                                            std::span<const MemberEvaluation> members);

// --------------------------------------------------------- re-enrollment

struct ReenrollmentTable {
  int dropout_year = 0;
  // ability -> final schooling -> count
  std::map<AbilityGroup, std::map<int, int>> final_counts;
  std::map<AbilityGroup, int> totals;
};

// Individuals whose first non-schooling period starts with 7 + nA + nV equal
// to dropout_year, tabulated by final schooling.
ReenrollmentTable reenrollment_outcomes(const Panel& panel, int dropout_year);

// -------------------------------------------------------- shock shut-offs

struct ShutoffRow {
  std::string scenario;
  CohortSummary summary;
  // Within-cell ER variance for cells (ability, type, proximity).
  std::map<std::tuple<AbilityGroup, int, bool>, Moments1> er_cells;
};

// Baseline, no wage risk, and no shocks at all; each evaluated with its own
// value tables over the shared pre-scaled shock panel.
std::vector<ShutoffRow> shock_shutoff_study(const ParamSet& params, std::span<const CohortSpec> cohorts,
                                            const IntegrationSpec& spec, const ShockPanel& shocks,
                                            const InitialConditions& init, const std::string& cache_dir = {});

}  // namespace eduopt
