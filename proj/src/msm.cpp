#include "eduopt/msm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "eduopt/error.hpp"
#include "eduopt/random.hpp"

namespace eduopt {
namespace {

constexpr int kPerPeriodKinds = 6;

struct Layout {
  int first_age;
  int periods;

  std::size_t per_period_block() const { return static_cast<std::size_t>(kNumAbilities * 2 * periods); }
  std::size_t size() const { return kPerPeriodKinds * per_period_block() + kNumAbilities * 2 * kNumSchoolingBuckets; }
  std::size_t at(MomentKind k, int age, int ability, bool hs) const {
    return static_cast<std::size_t>(k) * per_period_block() +
           static_cast<std::size_t>((ability * 2 + hs) * periods + (age - first_age));
  }
  std::size_t final_at(int bucket, int ability, bool hs) const {
    return kPerPeriodKinds * per_period_block() + static_cast<std::size_t>((ability * 2 + hs) * kNumSchoolingBuckets + bucket - 1);
  }
};

struct Cell {
  long long n = 0;
  long long choice[kNumChoices] = {0, 0, 0, 0};
  long long workers = 0;
  long double earn = 0.0L;
  long double dev2 = 0.0L;
};

}  // namespace

std::string_view moment_kind_name(MomentKind k) {
  switch (k) {
    case MomentKind::EarningsMean: return "earnings_mean";
    case MomentKind::EarningsSD: return "earnings_sd";
    case MomentKind::ShareAcademic: return "share_academic";
    case MomentKind::ShareVocational: return "share_vocational";
    case MomentKind::ShareWork: return "share_work";
    case MomentKind::ShareHome: return "share_home";
    case MomentKind::FinalSchoolDist: return "final_schooling";
  }
  return "?";
}

int schooling_bucket(int years) {
  require(years >= kBasicSchooling && years <= kMaxSchooling, "final schooling outside [7, 25]");
  return std::min(years - kBasicSchooling + 1, kNumSchoolingBuckets);
}

std::string MomentKey::label() const {
  return fmt::format("{}:{}:{}:{}", moment_kind_name(kind), index, ability_name(ability), hsprox ? 1 : 0);
}

std::vector<MomentKey> moment_keys(int first_age, int last_age) {
  require(first_age <= last_age, "empty age range");
  std::vector<MomentKey> keys;
  for (int k = 0; k < kPerPeriodKinds; ++k)
    for (auto g : kAllAbilities)
      for (bool hs : {false, true})
        for (int age = first_age; age <= last_age; ++age) keys.push_back({static_cast<MomentKind>(k), age, g, hs});
  for (auto g : kAllAbilities)
    for (bool hs : {false, true})
      for (int b = 1; b <= kNumSchoolingBuckets; ++b) keys.push_back({MomentKind::FinalSchoolDist, b, g, hs});
  return keys;
}

std::size_t MomentVector::n_present() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), 1));
}

std::optional<double> MomentVector::get(const MomentKey& key) const {
  const auto it = std::lower_bound(keys.begin(), keys.end(), key, [](const MomentKey& a, const MomentKey& b) {
    // keys are grouped by kind, ability, hsprox, then index
    return std::tie(a.kind, a.ability, a.hsprox, a.index) < std::tie(b.kind, b.ability, b.hsprox, b.index);
  });
  if (it == keys.end() || !(*it == key)) return std::nullopt;
  const auto i = static_cast<std::size_t>(it - keys.begin());
  return present[i] ? std::optional<double>(values[i]) : std::nullopt;
}

MomentVector compute_moments(const Panel& panel) {
  return compute_moments(panel, std::vector<int>(static_cast<std::size_t>(panel.n_individuals()), 1));
}

MomentVector compute_moments(const Panel& panel, const std::vector<int>& weights) {
  const int n_ind = panel.n_individuals();
  require(static_cast<int>(weights.size()) == n_ind, "one weight per individual");
  const Layout lay{panel.first_age, panel.periods()};
  const std::size_t per_cells = static_cast<std::size_t>(kNumAbilities * 2 * lay.periods);
  std::vector<Cell> cells(per_cells);
  std::array<std::array<long long, kNumSchoolingBuckets>, kNumAbilities * 2> finals{};
  std::array<long long, kNumAbilities * 2> final_n{};
  auto cell_of = [&](const PanelRecord& r) -> Cell& {
    return cells[static_cast<std::size_t>((index(r.ability) * 2 + r.hsprox) * lay.periods + (r.age - lay.first_age))];
  };

  for (int i = 0; i < n_ind; ++i) {
    const int w = weights[static_cast<std::size_t>(i)];
    if (w == 0) continue;
    const auto h = panel.history(i);
    for (const auto& r : h) {
      Cell& c = cell_of(r);
      c.n += w;
      c.choice[index(r.choice)] += w;
      if (r.earnings) {
        c.workers += w;
        c.earn += static_cast<long double>(w) * *r.earnings;
      }
    }
    const auto& last = h.back();
    const int group = index(last.ability) * 2 + last.hsprox;
    finals[static_cast<std::size_t>(group)][static_cast<std::size_t>(schooling_bucket(kBasicSchooling + last.nA + last.nV) - 1)] += w;
    final_n[static_cast<std::size_t>(group)] += w;
  }
  for (int i = 0; i < n_ind; ++i) {
    const int w = weights[static_cast<std::size_t>(i)];
    if (w == 0) continue;
    for (const auto& r : panel.history(i)) {
      if (!r.earnings) continue;
      Cell& c = cell_of(r);
      const long double d = *r.earnings - c.earn / c.workers;
      c.dev2 += static_cast<long double>(w) * d * d;
    }
  }

  MomentVector m;
  m.keys = moment_keys(panel.first_age, panel.last_age);
  m.values.assign(m.keys.size(), 0.0);
  m.present.assign(m.keys.size(), 0);
  auto set = [&](std::size_t at, double v) {
    m.values[at] = v;
    m.present[at] = 1;
  };
  for (int g = 0; g < kNumAbilities; ++g)
    for (int hs = 0; hs < 2; ++hs)
      for (int age = lay.first_age; age < lay.first_age + lay.periods; ++age) {
        const Cell& c = cells[static_cast<std::size_t>((g * 2 + hs) * lay.periods + (age - lay.first_age))];
        if (c.workers > 0) set(lay.at(MomentKind::EarningsMean, age, g, hs), static_cast<double>(c.earn / c.workers));
        if (c.workers > 1)
          set(lay.at(MomentKind::EarningsSD, age, g, hs), static_cast<double>(std::sqrt(c.dev2 / (c.workers - 1))));
        if (c.n == 0) continue;
        const double n = static_cast<double>(c.n);
        set(lay.at(MomentKind::ShareAcademic, age, g, hs), c.choice[index(ChoiceAlt::Academic)] / n);
        set(lay.at(MomentKind::ShareVocational, age, g, hs), c.choice[index(ChoiceAlt::Vocational)] / n);
        set(lay.at(MomentKind::ShareWork, age, g, hs), c.choice[index(ChoiceAlt::Work)] / n);
        set(lay.at(MomentKind::ShareHome, age, g, hs), c.choice[index(ChoiceAlt::Home)] / n);
      }
  for (int g = 0; g < kNumAbilities; ++g)
    for (int hs = 0; hs < 2; ++hs) {
      const auto group = static_cast<std::size_t>(g * 2 + hs);
      if (final_n[group] == 0) continue;
      for (int b = 1; b <= kNumSchoolingBuckets; ++b)
        set(lay.final_at(b, g, hs), static_cast<double>(finals[group][static_cast<std::size_t>(b - 1)]) / final_n[group]);
    }
  return m;
}

void write_moments_csv(const MomentVector& m, std::ostream& out, const std::string& metadata) {
  if (!metadata.empty()) out << "# " << metadata << "\n";
  out << "kind,index,ability,hsprox,value\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& k = m.keys[i];
    out << fmt::format("{},{},{},{},{}\n", moment_kind_name(k.kind), k.index, ability_name(k.ability), k.hsprox ? 1 : 0,
                       m.present[i] ? format_number(m.values[i]) : std::string());
  }
}

WeightDiag weight_from_observed(const Panel& panel, const BootstrapOptions& opts) {
  const int n = panel.n_individuals();
  require(n > 0, "bootstrap needs a non-empty panel");
  require(opts.replications >= 2, "bootstrap needs at least two replications");
  require(opts.floor > 0.0, "variance floor must be positive");
  // Resample positions in id order so the weights do not depend on row order.
  std::vector<int> by_id(static_cast<std::size_t>(n));
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](int a, int b) { return panel.history(a).front().id < panel.history(b).front().id; });

  const MomentVector observed = compute_moments(panel);
  const std::size_t K = observed.size();
  std::vector<long long> count(K, 0);
  std::vector<long double> mean(K, 0.0L), m2(K, 0.0L);
  std::vector<int> weights(static_cast<std::size_t>(n));
  for (int rep = 0; rep < opts.replications; ++rep) {
    std::fill(weights.begin(), weights.end(), 0);
    for (int j = 0; j < n; ++j) {
      const double u = uniform01(opts.seed, Stream::Bootstrap, static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(j));
      const int pick = std::min(n - 1, static_cast<int>(u * n));
      ++weights[static_cast<std::size_t>(by_id[static_cast<std::size_t>(pick)])];
    }
    const MomentVector b = compute_moments(panel, weights);
    for (std::size_t k = 0; k < K; ++k) {
      if (!b.present[k]) continue;
      ++count[k];
      const long double d = b.values[k] - mean[k];
      mean[k] += d / count[k];
      m2[k] += d * (b.values[k] - mean[k]);
    }
  }
  WeightDiag w;
  w.keys = observed.keys;
  w.floor = opts.floor;
  w.variance.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double v = count[k] > 1 ? static_cast<double>(m2[k] / (count[k] - 1)) : 0.0;
    const double scale = observed.present[k] ? std::max(observed.values[k] * observed.values[k], 1.0) : 1.0;
    w.variance[k] = std::max(v, opts.floor * scale);
  }
  return w;
}

CriterionValue criterion(const MomentVector& observed, const MomentVector& simulated, const WeightDiag& w) {
  if (observed.keys != simulated.keys || observed.keys != w.keys)
    fail(ErrorCode::Config, "observed, simulated and weight vectors cover different moment keys");
  CriterionValue out;
  long double total = 0.0L;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (observed.present[k] != simulated.present[k]) ++out.mismatched;
    if (!observed.present[k] || !simulated.present[k]) continue;
    ++out.used;
    const long double d = static_cast<long double>(observed.values[k]) - simulated.values[k];
    total += d * d / w.variance[k];
  }
  out.value = static_cast<double>(total);
  return out;
}

MomentVector simulate_moments(const ParamSet& params, const SimConfig& sim, const ShockPanel& shocks) {
  SolveOptions so;
  so.threads = sim.threads;
  const auto tables = solve_all(params, sim.constraint, sim.integration, {}, so);
  return compute_moments(simulate_panel(params, tables, shocks, sim.init, sim.constraint, SimulateOptions{sim.threads}));
}

namespace {

std::pair<std::optional<AbilityGroup>, std::string_view> split_path(std::string_view path) {
  const auto dot = path.find('.');
  if (dot != std::string_view::npos) {
    const auto head = path.substr(0, dot);
    for (auto g : kAllAbilities)
      if (head == ability_name(g)) return {g, path.substr(dot + 1)};
  }
  return {std::nullopt, path};
}

}  // namespace

void apply_theta(ParamSet& params, const std::vector<FreeParam>& free, std::span<const double> theta) {
  require(theta.size() == free.size(), "theta length does not match the free parameters");
  for (std::size_t i = 0; i < free.size(); ++i) {
    const auto [group, field] = split_path(free[i].path);
    if (group) {
      const auto it = params.find(*group);
      if (it == params.end()) fail(ErrorCode::Config, "free parameter " + free[i].path + " names a missing ability group");
      param_ref(it->second, field) = theta[i];
    } else {
      for (auto& [g, p] : params) param_ref(p, field) = theta[i];
    }
  }
}

std::vector<double> read_theta(const ParamSet& params, const std::vector<FreeParam>& free) {
  std::vector<double> theta;
  for (const auto& f : free) {
    const auto [group, field] = split_path(f.path);
    const auto it = group ? params.find(*group) : params.begin();
    if (it == params.end()) fail(ErrorCode::Config, "free parameter " + f.path + " names a missing ability group");
    theta.push_back(param_value(it->second, field));
  }
  return theta;
}

MsmProblem::MsmProblem(ParamSet base, std::vector<FreeParam> free, MomentVector observed, WeightDiag weights,
                       SimConfig sim)
    : base_(std::move(base)),
      free_(std::move(free)),
      observed_(std::move(observed)),
      weights_(std::move(weights)),
      sim_(std::move(sim)),
      shocks_(draw_shock_panel(sim_.seed, sim_.n, base_.empty() ? 1 : base_.begin()->second.last_age - kEntryAge + 1)) {
  require(!base_.empty(), "estimation needs parameters for at least one ability group", ErrorCode::Config);
  require(!free_.empty(), "estimation needs at least one free parameter", ErrorCode::Config);
  for (const auto& f : free_) {
    require(f.lower < f.upper, "free parameter " + f.path + " has empty bounds", ErrorCode::Config);
    require(f.start >= f.lower && f.start <= f.upper, "start of " + f.path + " lies outside its bounds", ErrorCode::Config);
  }
  read_theta(base_, free_);  // validates the paths
  require(observed_.keys == weights_.keys, "weights do not match the observed moments", ErrorCode::Config);
}

ParamSet MsmProblem::params_at(std::span<const double> theta) const {
  ParamSet p = base_;
  apply_theta(p, free_, theta);
  for (const auto& [g, mp] : p) validate(mp);
  return p;
}

CriterionValue MsmProblem::evaluate(std::span<const double> theta) const {
  const auto sim = simulate_moments(params_at(theta), sim_, shocks_);
  return criterion(observed_, sim, weights_);
}

FitResult fit(const MsmProblem& problem, const MinimizeOptions& opts) {
  std::vector<double> start, lower, upper;
  for (const auto& f : problem.free()) {
    start.push_back(f.start);
    lower.push_back(f.lower);
    upper.push_back(f.upper);
  }
  FitResult out;
  out.search = minimize([&](std::span<const double> x) { return problem(x); }, start, lower, upper, opts);
  out.theta = out.search.x;
  out.value = out.search.value;
  out.estimates = problem.params_at(out.theta);
  return out;
}

void write_trace_csv(const MinimizeResult& r, std::ostream& out, const std::string& metadata) {
  if (!metadata.empty()) out << "# " << metadata << "\n";
  out << "evaluation,restart,value,best\n";
  for (const auto& t : r.trace)
    out << fmt::format("{},{},{},{}\n", t.evaluation, t.restart, format_number(t.value), format_number(t.best));
}

}  // namespace eduopt
