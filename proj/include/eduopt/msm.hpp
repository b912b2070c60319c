#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eduopt/optimizer.hpp"
#include "eduopt/params.hpp"
#include "eduopt/simulator.hpp"
#include "eduopt/solver.hpp"

namespace eduopt {

enum class MomentKind { EarningsMean, EarningsSD, ShareAcademic, ShareVocational, ShareWork, ShareHome, FinalSchoolDist };

std::string_view moment_kind_name(MomentKind k);

inline constexpr int kNumSchoolingBuckets = 18;

// Final schooling 7..23 map to buckets 1..17; 24 and 25 share bucket 18.
int schooling_bucket(int years);

struct MomentKey {
  MomentKind kind = MomentKind::EarningsMean;
  int index = 0;  // age, or schooling bucket for FinalSchoolDist
  AbilityGroup ability = AbilityGroup::Low;
  bool hsprox = false;

  auto operator<=>(const MomentKey&) const = default;
  std::string label() const;
};

// Every key for a panel covering first_age..last_age.
std::vector<MomentKey> moment_keys(int first_age, int last_age);

struct MomentVector {
  std::vector<MomentKey> keys;
  std::vector<double> values;
  std::vector<char> present;  // empty cells are masked

  std::size_t size() const { return keys.size(); }
  std::size_t n_present() const;
  std::optional<double> get(const MomentKey& key) const;
};

MomentVector compute_moments(const Panel& panel);

// Frequency-weighted version; weights[i] multiplies individual i.
MomentVector compute_moments(const Panel& panel, const std::vector<int>& weights);

void write_moments_csv(const MomentVector& m, std::ostream& out, const std::string& metadata = {});

struct WeightDiag {
  std::vector<MomentKey> keys;
  std::vector<double> variance;
  double floor = 1e-12;
};

struct BootstrapOptions {
  int replications = 200;
  std::uint64_t seed = 1;
  double floor = 1e-12;  // relative to max(moment^2, 1)
};

// Bootstrap variance of each observed moment, resampling individuals.
WeightDiag weight_from_observed(const Panel& panel, const BootstrapOptions& opts = {});

struct CriterionValue {
  double value = 0.0;
  int used = 0;        // keys present in both vectors
  int mismatched = 0;  // present in exactly one
};

// Sum over jointly present keys of (observed - simulated)^2 / variance.
CriterionValue criterion(const MomentVector& observed, const MomentVector& simulated, const WeightDiag& w);

struct SimConfig {
  int n = 50000;
  std::uint64_t seed = 1;
  IntegrationSpec integration;
  InitialConditions init;
  ScenarioConstraint constraint;
  int threads = 0;
};

MomentVector simulate_moments(const ParamSet& params, const SimConfig& sim, const ShockPanel& shocks);

// A free parameter: "wage.beta1" moves that field in every ability group,
// "high.wage.beta1" only in one.
struct FreeParam {
  std::string path;
  double lower = 0.0;
  double upper = 0.0;
  double start = 0.0;
};

void apply_theta(ParamSet& params, const std::vector<FreeParam>& free, std::span<const double> theta);
std::vector<double> read_theta(const ParamSet& params, const std::vector<FreeParam>& free);

// Criterion as a function of the free parameters, with the shock panel
// drawn once so every evaluation sees the same random numbers.
class MsmProblem {
 public:
  MsmProblem(ParamSet base, std::vector<FreeParam> free, MomentVector observed, WeightDiag weights, SimConfig sim);

  const ParamSet& base() const { return base_; }
  const std::vector<FreeParam>& free() const { return free_; }
  const SimConfig& sim() const { return sim_; }
  ParamSet params_at(std::span<const double> theta) const;
  CriterionValue evaluate(std::span<const double> theta) const;
  double operator()(std::span<const double> theta) const { return evaluate(theta).value; }

 private:
  ParamSet base_;
  std::vector<FreeParam> free_;
  MomentVector observed_;
  WeightDiag weights_;
  SimConfig sim_;
  ShockPanel shocks_;
};

struct FitResult {
  std::vector<double> theta;
  double value = 0.0;
  ParamSet estimates;
  MinimizeResult search;
};

FitResult fit(const MsmProblem& problem, const MinimizeOptions& opts = {});

void write_trace_csv(const MinimizeResult& r, std::ostream& out, const std::string& metadata = {});

}  // namespace eduopt
