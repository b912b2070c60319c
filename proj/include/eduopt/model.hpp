#pragma once

#include <vector>

#include "eduopt/params.hpp"
#include "eduopt/types.hpp"

namespace eduopt {

struct DiplomaFlags {
  bool acadMid = false;   // h^A >= 9
  bool acadHS = false;    // h^A >= 12
  bool college = false;   // h^A >= 16
  bool vocMid = false;    // h^V >= 9
  bool vocHS = false;     // h^V >= 12

  friend bool operator==(const DiplomaFlags&, const DiplomaFlags&) = default;
};

DiplomaFlags diploma_flags(int nA, int nV);

// Deterministic part of log earnings: ln r + Gamma(s).
double log_wage_mean(const StateCore& s, const ModelParams& p);

// ln r + Gamma(s) + sigma_W * zW.
double log_wage(const StateCore& s, const ModelParams& p, double zW);

// Non-pecuniary utility of alternative a, excluding its shock.
double nonpecuniary(const StateCore& s, ChoiceAlt a, const ModelParams& p);

// Shock-free utility: the nonpecuniary part plus, for Work, r * exp(Gamma).
double deterministic_utility(const StateCore& s, ChoiceAlt a, const ModelParams& p);

// Money-metric immediate utility. The scenario's shock switches zero out the
// matching deviates before scaling.
double flow_utility(const StateCore& s, ChoiceAlt a, const ModelParams& p, const ShockVec& z,
                    const ScenarioConstraint& c = {});

// Deviates after applying the scenario's shock switches.
ShockVec effective_shocks(const ShockVec& z, const ScenarioConstraint& c);

StateCore transition(const StateCore& s, ChoiceAlt a, int last_age = kFinalAge);

// Feasible alternatives in canonical order. The compulsory floor takes
// precedence over no_future_schooling: a student below the floor must stay
// enrolled even in the restricted policy.
std::vector<ChoiceAlt> feasible_choices(const StateCore& s, const ScenarioConstraint& c);

// Bitmask form (bit index(a) set when feasible), used in the hot loops.
unsigned feasible_mask(int nA, int nV, const ScenarioConstraint& c);

inline bool is_feasible(const StateCore& s, ChoiceAlt a, const ScenarioConstraint& c) {
  return (feasible_mask(s.nA, s.nV, c) >> index(a)) & 1u;
}

}  // namespace eduopt
