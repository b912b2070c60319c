#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eduopt/params.hpp"
#include "eduopt/solver.hpp"
#include "eduopt/types.hpp"

namespace eduopt {

// Standard-normal draws per (individual, period); entry (i, p) is a pure
// function of (seed, i, p).
class ShockPanel {
 public:
  ShockPanel(std::uint64_t seed, int n_individuals, int periods, std::vector<ShockVec> draws);

  std::uint64_t seed() const { return seed_; }
  int n_individuals() const { return n_; }
  int periods() const { return periods_; }
  const ShockVec& at(int individual, int period) const {
    return draws_[static_cast<std::size_t>(individual) * periods_ + period];
  }

 private:
  std::uint64_t seed_;
  int n_;
  int periods_;
  std::vector<ShockVec> draws_;
};

ShockPanel draw_shock_panel(std::uint64_t seed, int n_individuals, int periods);

struct InitialConditions {
  std::array<double, kNumAbilities> ability_shares{1.0 / 3, 1.0 / 3, 1.0 / 3};
  // type_probs[ability][jtype - 1]
  std::array<std::array<double, kNumTypes>, kNumAbilities> type_probs{
      {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  double hsprox_share = 0.5;

  // Everyone in one ability group.
  static InitialConditions single_ability(AbilityGroup g);
};

void validate(const InitialConditions& init);

struct Individual {
  int id = 0;
  AbilityGroup ability = AbilityGroup::Low;
  int jtype = 3;
  bool hsprox = false;
};

// Population composition drawn on streams separate from the shocks, so it is
// identical under every scenario that shares the seed.
std::vector<Individual> assign_population(std::uint64_t seed, int n, const InitialConditions& init);

struct PanelRecord {
  int id = 0;
  AbilityGroup ability = AbilityGroup::Low;
  int jtype = 3;
  bool hsprox = false;
  int age = kEntryAge;
  ChoiceAlt choice = ChoiceAlt::Home;
  std::optional<double> earnings;  // Work periods only
  int nA = 0;                      // after the period
  int nV = 0;
  int k = 0;

  friend bool operator==(const PanelRecord&, const PanelRecord&) = default;
};

// Rows ordered by (id, age); every individual covers first..last age.
struct Panel {
  int first_age = kEntryAge;
  int last_age = kFinalAge;
  std::vector<PanelRecord> records;

  int periods() const { return last_age - first_age + 1; }
  int n_individuals() const { return static_cast<int>(records.size()) / periods(); }
  std::span<const PanelRecord> history(int individual) const {
    return std::span<const PanelRecord>(records).subspan(static_cast<std::size_t>(individual) * periods(),
                                                         static_cast<std::size_t>(periods()));
  }
};

// Shock-free state at which the decision in records[row] was taken.
StateCore state_before(const Panel& panel, std::size_t row);

// Final total schooling (7 + nA + nV at the last age), per individual.
std::vector<int> final_schooling(const Panel& panel);

using ValueTableSet = std::map<AbilityGroup, ValueTable>;

struct SimulateOptions {
  int threads = 0;
};

Panel simulate_panel(const ParamSet& params, const ValueTableSet& tables, const ShockPanel& shocks,
                     const InitialConditions& init, const ScenarioConstraint& c, const SimulateOptions& opts = {});

// Solves one table per ability group present in params.
ValueTableSet solve_all(const ParamSet& params, const ScenarioConstraint& c, const IntegrationSpec& spec,
                        const std::string& cache_dir = {}, const SolveOptions& opts = {});

struct PairedPanel {
  Panel base;
  Panel alt;
};

PairedPanel simulate_counterfactual_pair(const ParamSet& params, const ValueTableSet& base_tables,
                                         const ValueTableSet& alt_tables, const ShockPanel& shocks,
                                         const InitialConditions& init, const SimulateOptions& opts = {});

PairedPanel simulate_counterfactual_pair(const ParamSet& params, const ScenarioConstraint& base_c,
                                         const ScenarioConstraint& alt_c, const IntegrationSpec& spec,
                                         const ShockPanel& shocks, const InitialConditions& init,
                                         const std::string& cache_dir = {});

// CSV with header id,ability,type,hsprox,age,choice,earnings,nA,nV,k. Lines
// starting with '#' are metadata; the reader skips them.
void write_panel_csv(const Panel& panel, std::ostream& out, const std::string& metadata = {});
Panel read_panel_csv(std::istream& in);

std::string format_number(double x);

}  // namespace eduopt
