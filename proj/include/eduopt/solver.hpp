#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eduopt/params.hpp"
#include "eduopt/types.hpp"

namespace eduopt {

struct IntegrationSpec {
  int n_draws = 200;
  std::uint64_t seed = 20240101;
  bool antithetic = false;
  // Optional explicit equal-weight quadrature nodes, used in every period
  // instead of Monte-Carlo draws when non-empty.
  std::vector<ShockVec> nodes;
};

void validate(const IntegrationSpec& spec);

// The shock sample used to integrate period t.
std::vector<ShockVec> integration_draws(const IntegrationSpec& spec, int t);

// Shock-free state without the fixed traits (type, proximity).
struct CoreState {
  std::int16_t k = 0;
  std::int16_t nA = 0;
  std::int16_t nV = 0;
  ChoiceAlt lag = ChoiceAlt::Home;
};

// Reachable shock-free states per period for one compulsory floor and horizon.
// The forward sweep ignores no_future_schooling so that a restricted table is
// defined on every state the unrestricted policy can visit.
class StateSpace {
 public:
  StateSpace(int compulsory_min, int last_age);

  int first_age() const { return kEntryAge; }
  int last_age() const { return last_age_; }
  int compulsory_min() const { return compulsory_min_; }

  std::size_t size() const { return states_.size(); }
  std::size_t period_begin(int t) const { return offsets_[static_cast<std::size_t>(t - kEntryAge)]; }
  std::size_t period_end(int t) const { return offsets_[static_cast<std::size_t>(t - kEntryAge) + 1]; }
  const CoreState& state(std::size_t idx) const { return states_[idx]; }

  // Global index, or -1 when (t, k, nA, nV, lag) is not reachable.
  std::int64_t find(int t, int k, int nA, int nV, ChoiceAlt lag) const;

  static std::size_t estimate_bytes(int last_age);

 private:
  std::size_t slot(int t, int k, int nA, int nV, ChoiceAlt lag) const;

  int compulsory_min_;
  int last_age_;
  std::vector<CoreState> states_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<std::int32_t>> lookup_;  // per period, local index or -1
};

std::shared_ptr<const StateSpace> shared_state_space(int compulsory_min, int last_age);

inline constexpr int kNumTraitCombos = kNumTypes * 2;
inline constexpr int trait_combo(int jtype, bool hsprox) { return (jtype - 1) * 2 + (hsprox ? 1 : 0); }

class ValueTable {
 public:
  ValueTable(std::shared_ptr<const StateSpace> space, ScenarioConstraint constraint, AbilityGroup ability,
             IntegrationSpec integration, std::vector<double> emax);

  const ScenarioConstraint& constraint() const { return constraint_; }
  AbilityGroup ability() const { return ability_; }
  const IntegrationSpec& integration() const { return integration_; }
  const StateSpace& space() const { return *space_; }
  int last_age() const { return space_->last_age(); }

  // Throws ErrorCode::OutOfRange for states outside the reachable set.
  double emax(const StateCore& s) const;
  bool contains(const StateCore& s) const;

  std::span<const double> raw() const { return emax_; }

 private:
  std::shared_ptr<const StateSpace> space_;
  ScenarioConstraint constraint_;
  AbilityGroup ability_;
  IntegrationSpec integration_;
  std::vector<double> emax_;  // [state * kNumTraitCombos + combo]
};

struct SolveOptions {
  int threads = 0;  // 0: default_thread_count()
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
};

ValueTable solve(const ModelParams& p, const ScenarioConstraint& c, const IntegrationSpec& spec,
                 const SolveOptions& opts = {});

// flow_utility + delta * emax(successor); no continuation in the final period.
double alt_value(const StateCore& s, ChoiceAlt a, const ShockVec& z, const ValueTable& vt, const ModelParams& p);

// All alternative values; infeasible slots hold nullopt.
std::array<std::optional<double>, kNumChoices> alt_values(const StateCore& s, const ShockVec& z,
                                                          const ValueTable& vt, const ModelParams& p);

// Index of the maximum over present entries; ties go to the canonical order.
ChoiceAlt argmax_choice(const std::array<std::optional<double>, kNumChoices>& values);

ChoiceAlt decide(const StateCore& s, const ShockVec& z, const ValueTable& vt, const ModelParams& p);

// Binary cache keyed by a content hash of (params, constraint, integration).
std::uint64_t content_hash(const ModelParams& p, const ScenarioConstraint& c, const IntegrationSpec& spec);
std::string cache_path(const std::string& dir, const ModelParams& p, const ScenarioConstraint& c,
                       const IntegrationSpec& spec);
void save_value_table(const ValueTable& vt, const ModelParams& p, const std::string& path);
std::optional<ValueTable> load_value_table(const std::string& path, const ModelParams& p,
                                           const ScenarioConstraint& c, const IntegrationSpec& spec);

// Loads from cache_dir when present, else solves and stores. *hit reports which.
ValueTable solve_cached(const ModelParams& p, const ScenarioConstraint& c, const IntegrationSpec& spec,
                        const std::string& cache_dir, bool* hit = nullptr, const SolveOptions& opts = {});

}  // namespace eduopt
