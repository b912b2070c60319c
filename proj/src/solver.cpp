#include "eduopt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "eduopt/error.hpp"
#include "eduopt/model.hpp"
#include "eduopt/parallel.hpp"
#include "eduopt/random.hpp"

namespace eduopt {

void validate(const IntegrationSpec& spec) {
  if (!spec.nodes.empty()) return;
  require(spec.n_draws >= 1, "n_draws must be at least 1", ErrorCode::Config);
  require(!spec.antithetic || spec.n_draws % 2 == 0, "antithetic integration needs an even n_draws",
          ErrorCode::Config);
}

std::vector<ShockVec> integration_draws(const IntegrationSpec& spec, int t) {
  if (!spec.nodes.empty()) return spec.nodes;
  const auto n = static_cast<std::size_t>(spec.n_draws);
  std::vector<ShockVec> draws(n);
  const std::size_t base = spec.antithetic ? n / 2 : n;
  for (std::size_t d = 0; d < base; ++d)
    draws[d] = normal_shock(spec.seed, Stream::EmaxDraws, static_cast<std::uint32_t>(t),
                            static_cast<std::uint32_t>(d));
  if (spec.antithetic)
    for (std::size_t d = 0; d < base; ++d) {
      const auto& z = draws[d];
      draws[base + d] = {-z.zW, -z.zA, -z.zV, -z.zH};
    }
  return draws;
}

// ---------------------------------------------------------------- StateSpace

namespace {
constexpr int kSchoolDim = kMaxExtraSchooling + 1;
}

std::size_t StateSpace::slot(int t, int k, int nA, int nV, ChoiceAlt lag) const {
  (void)t;
  return ((static_cast<std::size_t>(k) * kSchoolDim + nA) * kSchoolDim + nV) * kNumChoices + index(lag);
}

StateSpace::StateSpace(int compulsory_min, int last_age) : compulsory_min_(compulsory_min), last_age_(last_age) {
  require(last_age >= kEntryAge && last_age <= kFinalAge, "last_age outside [15, 58]");
  const int periods = last_age - kEntryAge + 1;
  ScenarioConstraint reach;
  reach.compulsory_min = compulsory_min;

  lookup_.resize(static_cast<std::size_t>(periods));
  offsets_.assign(1, 0);
  std::vector<char> marked(kSchoolDim * kSchoolDim * kNumChoices, 0);
  marked[slot(kEntryAge, 0, 0, 0, ChoiceAlt::Home)] = 1;

  for (int p = 0; p < periods; ++p) {
    const int t = kEntryAge + p;
    auto& table = lookup_[static_cast<std::size_t>(p)];
    table.assign(marked.size(), -1);
    const std::size_t first = states_.size();
    for (std::size_t sl = 0; sl < marked.size(); ++sl) {
      if (!marked[sl]) continue;
      CoreState cs;
      cs.lag = static_cast<ChoiceAlt>(sl % kNumChoices);
      std::size_t rest = sl / kNumChoices;
      cs.nV = static_cast<std::int16_t>(rest % kSchoolDim);
      rest /= kSchoolDim;
      cs.nA = static_cast<std::int16_t>(rest % kSchoolDim);
      cs.k = static_cast<std::int16_t>(rest / kSchoolDim);
      table[sl] = static_cast<std::int32_t>(states_.size() - first);
      states_.push_back(cs);
    }
    offsets_.push_back(states_.size());
    if (t == last_age) break;

    std::vector<char> next((static_cast<std::size_t>(p) + 2) * kSchoolDim * kSchoolDim * kNumChoices, 0);
    for (std::size_t i = first; i < states_.size(); ++i) {
      const CoreState cs = states_[i];
      const unsigned mask = feasible_mask(cs.nA, cs.nV, reach);
      for (auto a : kAllChoices) {
        if (!((mask >> index(a)) & 1u)) continue;
        const int k = cs.k + (a == ChoiceAlt::Work);
        const int nA = cs.nA + (a == ChoiceAlt::Academic);
        const int nV = cs.nV + (a == ChoiceAlt::Vocational);
        next[slot(t + 1, k, nA, nV, a)] = 1;
      }
    }
    marked = std::move(next);
  }
}

std::int64_t StateSpace::find(int t, int k, int nA, int nV, ChoiceAlt lag) const {
  if (t < kEntryAge || t > last_age_) return -1;
  const auto p = static_cast<std::size_t>(t - kEntryAge);
  if (k < 0 || k > t - kEntryAge || nA < 0 || nV < 0 || nA + nV > kMaxExtraSchooling) return -1;
  const auto& table = lookup_[p];
  const std::size_t sl = slot(t, k, nA, nV, lag);
  if (sl >= table.size() || table[sl] < 0) return -1;
  return static_cast<std::int64_t>(offsets_[p]) + table[sl];
}

std::size_t StateSpace::estimate_bytes(int last_age) {
  std::size_t bytes = 0;
  for (int p = 0; p <= last_age - kEntryAge; ++p)
    bytes += (static_cast<std::size_t>(p) + 1) * kSchoolDim * kSchoolDim * kNumChoices * sizeof(std::int32_t);
  return bytes;
}

std::shared_ptr<const StateSpace> shared_state_space(int compulsory_min, int last_age) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const StateSpace>> spaces;
  std::lock_guard lock(mutex);
  auto& slot = spaces[{compulsory_min, last_age}];
  if (!slot) slot = std::make_shared<const StateSpace>(compulsory_min, last_age);
  return slot;
}

// ---------------------------------------------------------------- ValueTable

ValueTable::ValueTable(std::shared_ptr<const StateSpace> space, ScenarioConstraint constraint,
                       AbilityGroup ability, IntegrationSpec integration, std::vector<double> emax)
    : space_(std::move(space)),
      constraint_(constraint),
      ability_(ability),
      integration_(std::move(integration)),
      emax_(std::move(emax)) {
  require(emax_.size() == space_->size() * kNumTraitCombos, "value table size does not match state space");
}

bool ValueTable::contains(const StateCore& s) const { return space_->find(s.t, s.k, s.nA, s.nV, s.lag) >= 0; }

double ValueTable::emax(const StateCore& s) const {
  const std::int64_t idx = space_->find(s.t, s.k, s.nA, s.nV, s.lag);
  if (idx < 0)
    fail(ErrorCode::OutOfRange, fmt::format("state (t={}, k={}, nA={}, nV={}, lag={}) is outside the value table",
                                            s.t, s.k, s.nA, s.nV, choice_code(s.lag)));
  require(s.jtype >= 1 && s.jtype <= kNumTypes, "latent type outside {1,2,3}");
  return emax_[static_cast<std::size_t>(idx) * kNumTraitCombos + trait_combo(s.jtype, s.hsprox)];
}

// -------------------------------------------------------------------- solve

ValueTable solve(const ModelParams& p, const ScenarioConstraint& c, const IntegrationSpec& spec,
                 const SolveOptions& opts) {
  validate(p);
  validate(c);
  validate(spec);
  const std::size_t lookup_bytes = StateSpace::estimate_bytes(p.last_age);
  if (lookup_bytes > opts.memory_budget_bytes)
    fail(ErrorCode::Numeric, fmt::format("state-space index needs {} bytes, over the {} byte budget", lookup_bytes,
                                         opts.memory_budget_bytes));
  auto space = shared_state_space(c.compulsory_min, p.last_age);
  const std::size_t table_bytes = space->size() * kNumTraitCombos * sizeof(double) + lookup_bytes;
  if (table_bytes > opts.memory_budget_bytes)
    fail(ErrorCode::Numeric, fmt::format("{} states need {} bytes, over the {} byte budget", space->size(),
                                         table_bytes, opts.memory_budget_bytes));

  std::vector<double> emax(space->size() * kNumTraitCombos, 0.0);
  const int threads = opts.threads > 0 ? opts.threads : default_thread_count();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  for (int t = p.last_age; t >= kEntryAge; --t) {
    const auto draws = integration_draws(spec, t);
    const std::size_t n = draws.size();
    std::vector<double> wage_mult(n), shockA(n), shockV(n), shockH(n);
    for (std::size_t d = 0; d < n; ++d) {
      const ShockVec z = effective_shocks(draws[d], c);
      wage_mult[d] = std::exp(p.shock_sd.work * z.zW);
      shockA[d] = p.shock_sd.academic * z.zA;
      shockV[d] = p.shock_sd.vocational * z.zV;
      shockH[d] = p.shock_sd.home * z.zH;
    }
    const bool final_period = t == p.last_age;
    const std::size_t begin = space->period_begin(t);
    const std::size_t count = space->period_end(t) - begin;

    parallel_for(count, threads, [&](std::size_t lo, std::size_t hi) {
      std::vector<double> best(n);
      for (std::size_t local = lo; local < hi; ++local) {
        const std::size_t idx = begin + local;
        const CoreState& cs = space->state(idx);
        const unsigned mask = feasible_mask(cs.nA, cs.nV, c);
        std::array<std::int64_t, kNumChoices> next{-1, -1, -1, -1};
        if (!final_period) {
          for (auto a : kAllChoices) {
            if (!((mask >> index(a)) & 1u)) continue;
            next[index(a)] = space->find(t + 1, cs.k + (a == ChoiceAlt::Work), cs.nA + (a == ChoiceAlt::Academic),
                                         cs.nV + (a == ChoiceAlt::Vocational), a);
            if (next[index(a)] < 0) fail(ErrorCode::Numeric, "successor state missing from state space");
          }
        }
        for (int jtype = 1; jtype <= kNumTypes; ++jtype) {
          for (int prox = 0; prox < 2; ++prox) {
            const int combo = trait_combo(jtype, prox != 0);
            StateCore s{t, cs.k, cs.nA, cs.nV, cs.lag, jtype, prox != 0};
            std::array<double, kNumChoices> base{};
            for (auto a : kAllChoices) {
              if (!((mask >> index(a)) & 1u)) continue;
              double v = nonpecuniary(s, a, p);
              if (!final_period)
                v += p.delta * emax[static_cast<std::size_t>(next[index(a)]) * kNumTraitCombos + combo];
              base[index(a)] = v;
            }
            std::fill(best.begin(), best.end(), kNegInf);
            if (mask & (1u << index(ChoiceAlt::Work))) {
              const double wage = std::exp(log_wage_mean(s, p));
              const double b = base[index(ChoiceAlt::Work)];
              for (std::size_t d = 0; d < n; ++d) best[d] = b + wage * wage_mult[d];
            }
            auto fold = [&](ChoiceAlt a, const std::vector<double>& shock) {
              if (!(mask & (1u << index(a)))) return;
              const double b = base[index(a)];
              for (std::size_t d = 0; d < n; ++d) best[d] = std::max(best[d], b + shock[d]);
            };
            fold(ChoiceAlt::Academic, shockA);
            fold(ChoiceAlt::Vocational, shockV);
            fold(ChoiceAlt::Home, shockH);
            long double sum = 0.0L;
            for (std::size_t d = 0; d < n; ++d) sum += best[d];
            emax[idx * kNumTraitCombos + combo] = static_cast<double>(sum / static_cast<long double>(n));
          }
        }
      }
    });
  }
  return ValueTable(std::move(space), c, p.ability, spec, std::move(emax));
}

// ------------------------------------------------------------ alternatives

namespace {
void check_table(const ValueTable& vt, const ModelParams& p) {
  require(vt.last_age() == p.last_age, "parameter horizon does not match the value table");
  require(vt.ability() == p.ability, "parameter ability group does not match the value table");
}
}  // namespace

double alt_value(const StateCore& s, ChoiceAlt a, const ShockVec& z, const ValueTable& vt, const ModelParams& p) {
  check_table(vt, p);
  require(is_feasible(s, a, vt.constraint()), "alternative is infeasible at this state");
  double v = flow_utility(s, a, p, z, vt.constraint());
  if (s.t < vt.last_age()) v += p.delta * vt.emax(transition(s, a, vt.last_age()));
  return v;
}

std::array<std::optional<double>, kNumChoices> alt_values(const StateCore& s, const ShockVec& z,
                                                          const ValueTable& vt, const ModelParams& p) {
  std::array<std::optional<double>, kNumChoices> out;
  const unsigned mask = feasible_mask(s.nA, s.nV, vt.constraint());
  for (auto a : kAllChoices)
    if ((mask >> index(a)) & 1u) out[index(a)] = alt_value(s, a, z, vt, p);
  return out;
}

ChoiceAlt argmax_choice(const std::array<std::optional<double>, kNumChoices>& values) {
  std::optional<ChoiceAlt> best;
  double best_value = 0.0;
  for (auto a : kAllChoices) {
    const auto& v = values[index(a)];
    if (!v) continue;
    if (!best || *v > best_value) {
      best = a;
      best_value = *v;
    }
  }
  if (!best) fail(ErrorCode::InvalidArgument, "no feasible alternative");
  return *best;
}

ChoiceAlt decide(const StateCore& s, const ShockVec& z, const ValueTable& vt, const ModelParams& p) {
  return argmax_choice(alt_values(s, z, vt, p));
}

// ------------------------------------------------------------------- cache

namespace {

constexpr char kMagic[8] = {'E', 'D', 'U', 'V', 'T', '0', '0', '1'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::ifstream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::uint64_t content_hash(const ModelParams& p, const ScenarioConstraint& c, const IntegrationSpec& spec) {
  nlohmann::json key;
  key["format"] = "eduopt-value-table-1";
  key["params"] = to_json(p);
  key["params"]["last_age"] = p.last_age;
  key["ability"] = std::string(ability_name(p.ability));
  key["constraint"] = {c.compulsory_min, c.no_future_schooling, c.zero_wage_risk, c.zero_taste_shocks};
  key["integration"] = {spec.n_draws, spec.seed, spec.antithetic};
  for (const auto& z : spec.nodes) key["nodes"].push_back({z.zW, z.zA, z.zV, z.zH});
  return fnv1a(key.dump());
}

std::string cache_path(const std::string& dir, const ModelParams& p, const ScenarioConstraint& c,
                       const IntegrationSpec& spec) {
  return (std::filesystem::path(dir) / fmt::format("vt-{:016x}.bin", content_hash(p, c, spec))).string();
}

void save_value_table(const ValueTable& vt, const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write value-table cache " + path);
  out.write(kMagic, sizeof(kMagic));
  put(out, content_hash(p, vt.constraint(), vt.integration()));
  put(out, static_cast<std::uint64_t>(vt.space().size()));
  put(out, static_cast<std::int32_t>(vt.last_age()));
  put(out, static_cast<std::int32_t>(vt.constraint().compulsory_min));
  const auto raw = vt.raw();
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size_bytes()));
  if (!out) fail(ErrorCode::Io, "failed writing value-table cache " + path);
}

std::optional<ValueTable> load_value_table(const std::string& path, const ModelParams& p,
                                           const ScenarioConstraint& c, const IntegrationSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMagic)) return std::nullopt;
  std::uint64_t hash = 0, n_states = 0;
  std::int32_t last_age = 0, compulsory = 0;
  if (!get(in, hash) || !get(in, n_states) || !get(in, last_age) || !get(in, compulsory)) return std::nullopt;
  if (hash != content_hash(p, c, spec) || last_age != p.last_age || compulsory != c.compulsory_min)
    return std::nullopt;
  auto space = shared_state_space(c.compulsory_min, p.last_age);
  if (n_states != space->size()) return std::nullopt;
  std::vector<double> emax(space->size() * kNumTraitCombos);
  if (!in.read(reinterpret_cast<char*>(emax.data()), static_cast<std::streamsize>(emax.size() * sizeof(double))))
    return std::nullopt;
  return ValueTable(std::move(space), c, p.ability, spec, std::move(emax));
}

ValueTable solve_cached(const ModelParams& p, const ScenarioConstraint& c, const IntegrationSpec& spec,
                        const std::string& cache_dir, bool* hit, const SolveOptions& opts) {
  const std::string path = cache_path(cache_dir, p, c, spec);
  if (auto vt = load_value_table(path, p, c, spec)) {
    if (hit) *hit = true;
    return std::move(*vt);
  }
  if (hit) *hit = false;
  ValueTable vt = solve(p, c, spec, opts);
  std::filesystem::create_directories(cache_dir);
  save_value_table(vt, p, path);
  return vt;
}

}  // namespace eduopt
