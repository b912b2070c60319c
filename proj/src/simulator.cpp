#include "eduopt/simulator.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "eduopt/error.hpp"
#include "eduopt/model.hpp"
#include "eduopt/parallel.hpp"
#include "eduopt/random.hpp"

namespace eduopt {

ShockPanel::ShockPanel(std::uint64_t seed, int n_individuals, int periods, std::vector<ShockVec> draws)
    : seed_(seed), n_(n_individuals), periods_(periods), draws_(std::move(draws)) {
  require(n_individuals >= 1, "shock panel needs at least one individual");
  require(periods >= 1, "shock panel needs at least one period");
  require(draws_.size() == static_cast<std::size_t>(n_individuals) * periods, "shock panel size mismatch");
}

ShockPanel draw_shock_panel(std::uint64_t seed, int n_individuals, int periods) {
  require(n_individuals >= 1 && periods >= 1, "shock panel needs n >= 1 and periods >= 1");
  std::vector<ShockVec> draws(static_cast<std::size_t>(n_individuals) * periods);
  parallel_for(static_cast<std::size_t>(n_individuals), default_thread_count(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      for (int p = 0; p < periods; ++p)
        draws[i * periods + p] =
            normal_shock(seed, Stream::PanelShocks, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p));
  });
  return ShockPanel(seed, n_individuals, periods, std::move(draws));
}

InitialConditions InitialConditions::single_ability(AbilityGroup g) {
  InitialConditions init;
  init.ability_shares = {0.0, 0.0, 0.0};
  init.ability_shares[index(g)] = 1.0;
  return init;
}

namespace {

void check_distribution(std::span<const double> probs, const std::string& what) {
  double sum = 0.0;
  for (double q : probs) {
    require(q >= 0.0 && q <= 1.0, what + " probabilities must lie in [0, 1]", ErrorCode::Config);
    sum += q;
  }
  require(std::abs(sum - 1.0) <= 1e-12, what + " probabilities must sum to 1", ErrorCode::Config);
}

template <std::size_t N>
int inverse_cdf(const std::array<double, N>& probs, double u) {
  double cum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  for (std::size_t i = N; i-- > 0;)  // rounding slack: last category with mass
    if (probs[i] > 0.0) return static_cast<int>(i);
  return static_cast<int>(N) - 1;
}

}  // namespace

void validate(const InitialConditions& init) {
  check_distribution(init.ability_shares, "ability share");
  for (const auto& row : init.type_probs) check_distribution(row, "latent type");
  require(init.hsprox_share >= 0.0 && init.hsprox_share <= 1.0, "hsprox_share must lie in [0, 1]",
          ErrorCode::Config);
}

std::vector<Individual> assign_population(std::uint64_t seed, int n, const InitialConditions& init) {
  validate(init);
  std::vector<Individual> people(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    auto& who = people[static_cast<std::size_t>(i)];
    who.id = i;
    who.ability = static_cast<AbilityGroup>(inverse_cdf(init.ability_shares, uniform01(seed, Stream::Ability, id, 0)));
    who.jtype = 1 + inverse_cdf(init.type_probs[index(who.ability)], uniform01(seed, Stream::LatentType, id, 0));
    who.hsprox = uniform01(seed, Stream::Proximity, id, 0) < init.hsprox_share;
  }
  return people;
}

StateCore state_before(const Panel& panel, std::size_t row) {
  const PanelRecord& r = panel.records.at(row);
  StateCore s = entry_state(r.jtype, r.hsprox);
  s.t = r.age;
  if (r.age == panel.first_age) return s;
  const PanelRecord& prev = panel.records.at(row - 1);
  s.k = prev.k;
  s.nA = prev.nA;
  s.nV = prev.nV;
  s.lag = prev.choice;
  return s;
}

std::vector<int> final_schooling(const Panel& panel) {
  std::vector<int> out(static_cast<std::size_t>(panel.n_individuals()));
  for (int i = 0; i < panel.n_individuals(); ++i) {
    const auto h = panel.history(i);
    out[static_cast<std::size_t>(i)] = kBasicSchooling + h.back().nA + h.back().nV;
  }
  return out;
}

Panel simulate_panel(const ParamSet& params, const ValueTableSet& tables, const ShockPanel& shocks,
                     const InitialConditions& init, const ScenarioConstraint& c, const SimulateOptions& opts) {
  const auto people = assign_population(shocks.seed(), shocks.n_individuals(), init);
  int last_age = -1;
  for (const auto& who : people) {
    const auto pit = params.find(who.ability);
    const auto tit = tables.find(who.ability);
    if (pit == params.end()) fail(ErrorCode::Config, "no parameters for ability group " + std::string(ability_name(who.ability)));
    if (tit == tables.end()) fail(ErrorCode::Config, "no value table for ability group " + std::string(ability_name(who.ability)));
    require(tit->second.constraint() == c, "value table was solved under a different scenario");
    if (last_age < 0) last_age = pit->second.last_age;
    require(pit->second.last_age == last_age, "ability groups disagree on the horizon");
  }
  Panel panel;
  panel.last_age = last_age;
  const int periods = panel.periods();
  require(shocks.periods() >= periods, "shock panel covers fewer periods than the horizon");
  panel.records.resize(people.size() * static_cast<std::size_t>(periods));

  const int threads = opts.threads > 0 ? opts.threads : default_thread_count();
  parallel_for(people.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Individual& who = people[i];
      const ModelParams& p = params.at(who.ability);
      const ValueTable& vt = tables.at(who.ability);
      StateCore s = entry_state(who.jtype, who.hsprox);
      for (int q = 0; q < periods; ++q) {
        const ShockVec& z = shocks.at(who.id, q);
        const ChoiceAlt a = decide(s, z, vt, p);
        PanelRecord& r = panel.records[i * periods + q];
        r.id = who.id;
        r.ability = who.ability;
        r.jtype = who.jtype;
        r.hsprox = who.hsprox;
        r.age = s.t;
        r.choice = a;
        if (a == ChoiceAlt::Work) r.earnings = std::exp(log_wage(s, p, effective_shocks(z, c).zW));
        const StateCore after{s.t, s.k + (a == ChoiceAlt::Work), s.nA + (a == ChoiceAlt::Academic),
                              s.nV + (a == ChoiceAlt::Vocational), a, s.jtype, s.hsprox};
        r.k = after.k;
        r.nA = after.nA;
        r.nV = after.nV;
        if (s.t < last_age) s = transition(s, a, last_age);
      }
    }
  });
  return panel;
}

ValueTableSet solve_all(const ParamSet& params, const ScenarioConstraint& c, const IntegrationSpec& spec,
                        const std::string& cache_dir, const SolveOptions& opts) {
  ValueTableSet out;
  for (const auto& [g, p] : params)
    out.emplace(g, cache_dir.empty() ? solve(p, c, spec, opts) : solve_cached(p, c, spec, cache_dir, nullptr, opts));
  return out;
}

PairedPanel simulate_counterfactual_pair(const ParamSet& params, const ValueTableSet& base_tables,
                                         const ValueTableSet& alt_tables, const ShockPanel& shocks,
                                         const InitialConditions& init, const SimulateOptions& opts) {
  require(!base_tables.empty() && !alt_tables.empty(), "counterfactual pair needs value tables");
  const auto base_c = base_tables.begin()->second.constraint();
  const auto alt_c = alt_tables.begin()->second.constraint();
  return {simulate_panel(params, base_tables, shocks, init, base_c, opts),
          simulate_panel(params, alt_tables, shocks, init, alt_c, opts)};
}

PairedPanel simulate_counterfactual_pair(const ParamSet& params, const ScenarioConstraint& base_c,
                                         const ScenarioConstraint& alt_c, const IntegrationSpec& spec,
                                         const ShockPanel& shocks, const InitialConditions& init,
                                         const std::string& cache_dir) {
  const auto base_tables = solve_all(params, base_c, spec, cache_dir);
  const auto alt_tables = base_c == alt_c ? base_tables : solve_all(params, alt_c, spec, cache_dir);
  return simulate_counterfactual_pair(params, base_tables, alt_tables, shocks, init);
}

// ---------------------------------------------------------------------- CSV

std::string format_number(double x) { return fmt::format("{}", x); }

void write_panel_csv(const Panel& panel, std::ostream& out, const std::string& metadata) {
  if (!metadata.empty()) out << "# " << metadata << "\n";
  out << "id,ability,type,hsprox,age,choice,earnings,nA,nV,k\n";
  std::string line;
  for (const auto& r : panel.records) {
    line = fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.id, ability_name(r.ability), r.jtype, r.hsprox ? 1 : 0,
                       r.age, choice_code(r.choice), r.earnings ? format_number(*r.earnings) : std::string(), r.nA,
                       r.nV, r.k);
    out << line;
  }
}

Panel read_panel_csv(std::istream& in) {
  Panel panel;
  std::string line;
  bool header = false;
  int min_age = kFinalAge + 1, max_age = kEntryAge - 1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "id,ability,type,hsprox,age,choice,earnings,nA,nV,k")
        fail(ErrorCode::Config, "unexpected panel CSV header: " + line);
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 10) fail(ErrorCode::Config, "malformed panel CSV row: " + line);
    PanelRecord r;
    try {
      r.id = std::stoi(cells[0]);
      r.ability = ability_from_name(cells[1]);
      r.jtype = std::stoi(cells[2]);
      r.hsprox = cells[3] == "1";
      r.age = std::stoi(cells[4]);
      require(cells[5].size() == 1, "bad choice code");
      r.choice = choice_from_code(cells[5][0]);
      if (!cells[6].empty()) r.earnings = std::stod(cells[6]);
      r.nA = std::stoi(cells[7]);
      r.nV = std::stoi(cells[8]);
      r.k = std::stoi(cells[9]);
    } catch (const std::exception& e) {
      fail(ErrorCode::Config, "malformed panel CSV row: " + line);
    }
    require(r.earnings.has_value() == (r.choice == ChoiceAlt::Work), "earnings must be present exactly for Work rows",
            ErrorCode::Config);
    min_age = std::min(min_age, r.age);
    max_age = std::max(max_age, r.age);
    panel.records.push_back(r);
  }
  require(header, "panel CSV has no header", ErrorCode::Config);
  require(!panel.records.empty(), "panel CSV has no rows", ErrorCode::Config);
  panel.first_age = min_age;
  panel.last_age = max_age;
  const auto periods = static_cast<std::size_t>(panel.periods());
  require(panel.records.size() % periods == 0, "panel is not balanced", ErrorCode::Config);
  for (std::size_t row = 0; row < panel.records.size(); ++row) {
    const auto& r = panel.records[row];
    require(r.age == panel.first_age + static_cast<int>(row % periods) &&
                r.id == panel.records[row - row % periods].id,
            "panel rows must be sorted by id then age and cover every age", ErrorCode::Config);
  }
  return panel;
}

}  // namespace eduopt
