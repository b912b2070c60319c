#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace eduopt {

inline constexpr int kEntryAge = 15;
inline constexpr int kFinalAge = 58;
inline constexpr int kBasicSchooling = 7;
inline constexpr int kMaxSchooling = 25;
inline constexpr int kMaxExtraSchooling = kMaxSchooling - kBasicSchooling;  // nA + nV cap
inline constexpr int kNumTypes = 3;

// Canonical order Work < Academic < Vocational < Home; ties are always broken
// toward the lower enumerator.
enum class ChoiceAlt : std::uint8_t { Work = 0, Academic = 1, Vocational = 2, Home = 3 };
inline constexpr int kNumChoices = 4;
inline constexpr std::array<ChoiceAlt, kNumChoices> kAllChoices = {
    ChoiceAlt::Work, ChoiceAlt::Academic, ChoiceAlt::Vocational, ChoiceAlt::Home};

inline constexpr int index(ChoiceAlt a) { return static_cast<int>(a); }
inline constexpr bool is_schooling(ChoiceAlt a) {
  return a == ChoiceAlt::Academic || a == ChoiceAlt::Vocational;
}

char choice_code(ChoiceAlt a);            // W, A, V, H
ChoiceAlt choice_from_code(char c);       // throws on unknown code
std::string_view choice_name(ChoiceAlt a);

enum class AbilityGroup : std::uint8_t { Low = 0, Medium = 1, High = 2 };
inline constexpr int kNumAbilities = 3;
inline constexpr std::array<AbilityGroup, kNumAbilities> kAllAbilities = {
    AbilityGroup::Low, AbilityGroup::Medium, AbilityGroup::High};

inline constexpr int index(AbilityGroup g) { return static_cast<int>(g); }
std::string_view ability_name(AbilityGroup g);  // low, medium, high
AbilityGroup ability_from_name(std::string_view name);

// Shock-free part of the dynamic state. Schooling counts are years beyond the
// seven compulsory years, per track.
struct StateCore {
  int t = kEntryAge;
  int k = 0;
  int nA = 0;
  int nV = 0;
  ChoiceAlt lag = ChoiceAlt::Home;
  int jtype = 3;
  bool hsprox = false;

  int academic_years() const { return kBasicSchooling + nA; }
  int vocational_years() const { return kBasicSchooling + nV; }
  int total_schooling() const { return kBasicSchooling + nA + nV; }

  friend bool operator==(const StateCore&, const StateCore&) = default;
};

StateCore entry_state(int jtype, bool hsprox);

// Throws if any bookkeeping invariant is violated.
void validate(const StateCore& s);

// Standard-normal deviates, stored before scaling by the shock SDs.
struct ShockVec {
  double zW = 0.0;
  double zA = 0.0;
  double zV = 0.0;
  double zH = 0.0;

  double operator[](ChoiceAlt a) const {
    switch (a) {
      case ChoiceAlt::Work: return zW;
      case ChoiceAlt::Academic: return zA;
      case ChoiceAlt::Vocational: return zV;
      case ChoiceAlt::Home: return zH;
    }
    return 0.0;
  }
  friend bool operator==(const ShockVec&, const ShockVec&) = default;
};

struct ScenarioConstraint {
  int compulsory_min = kBasicSchooling;
  bool no_future_schooling = false;
  bool zero_wage_risk = false;
  bool zero_taste_shocks = false;

  friend bool operator==(const ScenarioConstraint&, const ScenarioConstraint&) = default;
};

void validate(const ScenarioConstraint& c);

// Named scenarios: baseline, reform9, reform10, no-wage-risk, no-shocks,
// no-future-schooling.
ScenarioConstraint scenario_from_name(std::string_view name);
std::string scenario_label(const ScenarioConstraint& c);

}  // namespace eduopt
