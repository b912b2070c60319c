#include "eduopt/types.hpp"

#include "eduopt/error.hpp"

namespace eduopt {

char choice_code(ChoiceAlt a) {
  constexpr char codes[] = {'W', 'A', 'V', 'H'};
  return codes[index(a)];
}

ChoiceAlt choice_from_code(char c) {
  switch (c) {
    case 'W': return ChoiceAlt::Work;
    case 'A': return ChoiceAlt::Academic;
    case 'V': return ChoiceAlt::Vocational;
    case 'H': return ChoiceAlt::Home;
    default: fail(ErrorCode::InvalidArgument, std::string("unknown choice code '") + c + "'");
  }
}

std::string_view choice_name(ChoiceAlt a) {
  constexpr std::string_view names[] = {"work", "academic", "vocational", "home"};
  return names[index(a)];
}

std::string_view ability_name(AbilityGroup g) {
  constexpr std::string_view names[] = {"low", "medium", "high"};
  return names[index(g)];
}

AbilityGroup ability_from_name(std::string_view name) {
  for (auto g : kAllAbilities)
    if (ability_name(g) == name) return g;
  fail(ErrorCode::InvalidArgument, "unknown ability group '" + std::string(name) + "'");
}

StateCore entry_state(int jtype, bool hsprox) {
  StateCore s;
  s.jtype = jtype;
  s.hsprox = hsprox;
  return s;
}

void validate(const StateCore& s) {
  require(s.t >= kEntryAge && s.t <= kFinalAge, "age outside [15, 58]", ErrorCode::OutOfRange);
  require(s.k >= 0 && s.nA >= 0 && s.nV >= 0, "negative experience or schooling");
  require(s.k + s.nA + s.nV <= s.t - kEntryAge, "more activity years than periods elapsed");
  require(s.nA + s.nV <= kMaxExtraSchooling, "schooling above the 25-year cap");
  require(s.jtype >= 1 && s.jtype <= kNumTypes, "latent type outside {1,2,3}");
}

void validate(const ScenarioConstraint& c) {
  require(c.compulsory_min >= kBasicSchooling && c.compulsory_min <= 12,
          "compulsory_min outside [7, 12]", ErrorCode::Config);
}

ScenarioConstraint scenario_from_name(std::string_view name) {
  ScenarioConstraint c;
  if (name == "baseline") return c;
  if (name == "reform9") {
    c.compulsory_min = 9;
  } else if (name == "reform10") {
    c.compulsory_min = 10;
  } else if (name == "no-wage-risk") {
    c.zero_wage_risk = true;
  } else if (name == "no-shocks") {
    c.zero_wage_risk = true;
    c.zero_taste_shocks = true;
  } else if (name == "no-future-schooling") {
    c.no_future_schooling = true;
  } else {
    fail(ErrorCode::Config, "unknown scenario '" + std::string(name) + "'");
  }
  return c;
}

std::string scenario_label(const ScenarioConstraint& c) {
  std::string out = "compulsory" + std::to_string(c.compulsory_min);
  if (c.no_future_schooling) out += "+noschool";
  if (c.zero_wage_risk) out += "+nowagerisk";
  if (c.zero_taste_shocks) out += "+notaste";
  return out;
}

}  // namespace eduopt
