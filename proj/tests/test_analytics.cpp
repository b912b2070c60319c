#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "eduopt/analytics.hpp"
#include "eduopt/error.hpp"
#include "eduopt/model.hpp"
#include "test_support.hpp"

using namespace eduopt;
using namespace eduopt::testing;

namespace {

ScenarioConstraint restricted(ScenarioConstraint c) {
  c.no_future_schooling = true;
  return c;
}

}  // namespace

TEST_CASE("toy model: ex-ante returns and option values match the event-tree oracle") {
  for (auto g : kAllAbilities) {
    const auto p = toy_params(g, 17);
    const auto c = scenario_from_name("baseline");
    const oracle::Model full{p, c, oracle::two_point_grid()};
    const oracle::Model nos{p, restricted(c), oracle::two_point_grid()};
    const auto vt = solve(p, c, grid_spec());
    const auto vn = solve(p, restricted(c), grid_spec());
    double worst = 0.0;
    int checked = 0;
    for (const auto& s : oracle::enumerate_states(p, c)) {
      for (const auto& z : oracle::two_point_grid()) {
        double outside = -std::numeric_limits<double>::infinity();
        for (auto a : oracle::allowed(s, c))
          if (!is_schooling(a)) outside = std::max(outside, oracle::choice_value(full, s, a, z));
        if (outside == -std::numeric_limits<double>::infinity()) continue;
        for (auto track : {ChoiceAlt::Academic, ChoiceAlt::Vocational}) {
          const auto allow = oracle::allowed(s, c);
          if (std::find(allow.begin(), allow.end(), track) == allow.end()) continue;
          const double vg = oracle::choice_value(full, s, track, z);
          const auto er = ex_ante_return(s, track, z, vt, p);
          REQUIRE(er.has_value() == (outside > 0));
          if (er) worst = std::max(worst, rel_err(*er, (vg - outside) / outside));
          double vhat = flow_utility(s, track, p, z, c);
          if (s.t < p.last_age) vhat += p.delta * oracle::expected_max(nos, oracle::step(s, track));
          const auto ov = option_value(s, track, z, vt, vn, p);
          worst = std::max(worst, rel_err(ov.value_optimal, vg));
          worst = std::max(worst, rel_err(ov.value_restricted, vhat));
          worst = std::max(worst, rel_err(ov.ov, vg - vhat));
          ++checked;
        }
      }
    }
    CHECK(checked > 100);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("two-period model: option value is the discounted gain in expected maximum") {
  const auto p = toy_params(AbilityGroup::Medium, 16);
  const auto c = scenario_from_name("baseline");
  const auto vt = solve(p, c, grid_spec());
  const auto vn = solve(p, restricted(c), grid_spec());
  const oracle::Model full{p, c, oracle::two_point_grid()};
  const oracle::Model nos{p, restricted(c), oracle::two_point_grid()};
  const StateCore s = entry_state(2, true);
  for (auto track : {ChoiceAlt::Academic, ChoiceAlt::Vocational}) {
    const auto next = oracle::step(s, track);
    const double expected = p.delta * (oracle::expected_max(full, next) - oracle::expected_max(nos, next));
    const auto ov = option_value(s, track, ShockVec{0.3, -1.1, 0.4, 2.0}, vt, vn, p);
    CHECK(rel_err(ov.ov, expected) <= 1e-9);
    CHECK(ov.ov >= 0.0);
  }
}

TEST_CASE("option value is zero at the schooling cap") {
  const auto p = toy_params(AbilityGroup::High, 34);
  const auto c = scenario_from_name("baseline");
  const IntegrationSpec spec{10};
  const auto vt = solve(p, c, spec);
  const auto vn = solve(p, restricted(c), spec);
  StateCore s = entry_state(1, false);
  s.t = 33;
  s.nA = 18;
  s.lag = ChoiceAlt::Academic;
  REQUIRE(vt.contains(s));
  const auto ov = option_value(s, ChoiceAlt::Academic, ShockVec{}, vt, vn, p);
  CHECK(ov.ov == 0.0);
  if (ov.ovc) CHECK(*ov.ovc == 0.0);
  CHECK_THROWS_AS(option_value(s, ChoiceAlt::Academic, ShockVec{}, vt, vt, p), Error);
}

TEST_CASE("returns agree with choices and option values are non-negative along a panel") {
  const auto p = toy_params(AbilityGroup::Medium, 32);
  const auto c = scenario_from_name("baseline");
  const IntegrationSpec spec{40};
  const ValueTableSet full{{p.ability, solve(p, c, spec)}};
  const ValueTableSet nos{{p.ability, solve(p, restricted(c), spec)}};
  const auto shocks = draw_shock_panel(31, 400, 18);
  const auto panel = simulate_panel(single(p), full, shocks, InitialConditions::single_ability(p.ability), c);
  const auto& vt = full.at(p.ability);
  const auto& vn = nos.at(p.ability);
  int violations = 0, negative_ov = 0, evaluated = 0, partition = 0;
  for (std::size_t r = 0; r < panel.records.size(); ++r) {
    const auto& rec = panel.records[r];
    const StateCore s = state_before(panel, r);
    const auto& z = shocks.at(rec.id, s.t - kEntryAge);
    if (!is_feasible(s, ChoiceAlt::Work, c) && !is_feasible(s, ChoiceAlt::Home, c)) continue;
    for (auto track : {ChoiceAlt::Academic, ChoiceAlt::Vocational}) {
      if (!is_feasible(s, track, c)) continue;
      ++evaluated;
      const auto er = ex_ante_return(s, track, z, vt, p);
      if (er) {
        if (rec.choice == track && *er < 0.0) ++violations;
        if (!is_schooling(rec.choice) && *er > 0.0) ++violations;
      }
      const auto ov = option_value(s, track, z, vt, vn, p);
      negative_ov += ov.ov < 0.0;
      if (ov.ovc) CHECK(*ov.ovc < 1.0);
      const auto cls = classify_complier(s, track, z, vt, vn, p);
      const double outside = best_outside_value(s, z, vt, p);
      const bool always = ov.value_restricted > outside, never = ov.value_optimal < outside;
      CHECK_FALSE((always && never));
      partition += (cls == ComplierClass::AlwaysTaker) != always || (cls == ComplierClass::NeverTaker) != never;
      if (cls == ComplierClass::AlwaysTaker) CHECK(is_schooling(decide(s, z, vt, p)));
    }
  }
  CHECK(evaluated > 500);
  CHECK(violations == 0);
  CHECK(negative_ov == 0);
  CHECK(partition == 0);
}

TEST_CASE("without shocks the ex-post return equals the ex-ante return") {
  const auto p = toy_params(AbilityGroup::Medium, kFinalAge);
  const auto c = scenario_from_name("no-shocks");
  const ValueTableSet full{{p.ability, solve(p, c, IntegrationSpec{2})}};
  const auto shocks = draw_shock_panel(3, 60, 44);
  const auto panel = simulate_panel(single(p), full, shocks, InitialConditions::single_ability(p.ability), c);
  int compared = 0;
  for (std::size_t r = 0; r < panel.records.size(); ++r) {
    const auto& rec = panel.records[r];
    if (!is_schooling(rec.choice)) continue;
    const StateCore s = state_before(panel, r);
    const auto path = panel_path(panel, shocks, r);
    const auto ea = ex_ante_return(s, rec.choice, path.front().shock, full.at(p.ability), p);
    const auto ep = ex_post_return(path, s, rec.choice, full.at(p.ability), p);
    REQUIRE(ea.has_value() == ep.has_value());
    if (ea) {
      CHECK(std::abs(*ea - *ep) <= 1e-12 * std::max(1.0, std::abs(*ea)));
      ++compared;
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("complier classes follow their definitions") {
  auto p = toy_params(AbilityGroup::High, 17);
  const auto c = scenario_from_name("baseline");
  const auto vt = solve(p, c, grid_spec());
  const auto vn = solve(p, restricted(c), grid_spec());
  const StateCore s = entry_state(1, true);
  // A huge academic taste draw makes school attractive even with the option removed.
  const ShockVec keen{0.0, 40.0, 0.0, 0.0};
  CHECK(classify_complier(s, ChoiceAlt::Academic, keen, vt, vn, p) == ComplierClass::AlwaysTaker);
  const ShockVec averse{0.0, -40.0, 0.0, 0.0};
  CHECK(classify_complier(s, ChoiceAlt::Academic, averse, vt, vn, p) == ComplierClass::NeverTaker);
  CHECK(complier_name(ComplierClass::Marginal) == "marginal");
}

TEST_CASE("cohort specs") {
  const auto spec = parse_cohort_spec("track=academic,year=11,ability=high");
  CHECK(spec.track == ChoiceAlt::Academic);
  CHECK(spec.year == 11);
  CHECK(spec.ability == AbilityGroup::High);
  CHECK(spec.decision_age() == 18);
  CHECK(parse_cohort_spec("year=9,track=vocational").label() == "vocational-9");
  for (const char* bad : {"track=academic", "track=home,year=9", "track=academic,year=x", "track=academic,year=7",
                          "track=academic,year=9,colour=red", "track=academic,year=9,ability=genius", "year"}) {
    INFO(bad);
    CHECK_THROWS_AS(parse_cohort_spec(bad), Error);
  }
}

TEST_CASE("cohort membership requires an uninterrupted single-track career") {
  Panel panel;
  panel.last_age = 19;
  auto person = [&](int id, std::vector<ChoiceAlt> choices) {
    int nA = 0, nV = 0, k = 0, age = kEntryAge;
    for (auto a : choices) {
      nA += a == ChoiceAlt::Academic;
      nV += a == ChoiceAlt::Vocational;
      k += a == ChoiceAlt::Work;
      PanelRecord r;
      r.id = id;
      r.ability = AbilityGroup::Medium;
      r.jtype = 2;
      r.age = age++;
      r.choice = a;
      if (a == ChoiceAlt::Work) r.earnings = 1.0;
      r.nA = nA;
      r.nV = nV;
      r.k = k;
      panel.records.push_back(r);
    }
  };
  using enum ChoiceAlt;
  person(0, {Academic, Academic, Academic, Work, Work});
  person(1, {Academic, Vocational, Academic, Academic, Work});
  person(2, {Academic, Academic, Home, Academic, Work});
  person(3, {Academic, Academic, Work, Work, Work});
  const auto cohort = find_cohort(panel, parse_cohort_spec("track=academic,year=10"));
  // Person 1 switched tracks; the others reach the decision at 17 whatever they do there.
  REQUIRE(cohort.rows.size() == 3);
  CHECK(cohort.rows[0] == 2);
  CHECK(cohort.rows[1] == 12);
  CHECK(cohort.rows[2] == 17);
  CHECK(cohort.members.at(AbilityGroup::Medium) == 3);
  CHECK(cohort.population.at(AbilityGroup::Medium) == 4);
  CHECK_FALSE(cohort.excluded(AbilityGroup::Medium));
  CHECK(cohort.excluded(AbilityGroup::Low));
  CHECK(state_before(panel, cohort.rows[0]).nA == 2);

  const auto none = find_cohort(panel, parse_cohort_spec("track=academic,year=10,ability=low"));
  CHECK(none.rows.empty());

  const auto dropouts = reenrollment_outcomes(panel, 9);
  CHECK(dropouts.totals.at(AbilityGroup::Medium) == 2);  // persons 2 and 3
  CHECK(dropouts.final_counts.at(AbilityGroup::Medium).at(10) == 1);
  CHECK(dropouts.final_counts.at(AbilityGroup::Medium).at(9) == 1);
  const auto later = reenrollment_outcomes(panel, 10);
  CHECK(later.totals.at(AbilityGroup::Medium) == 1);
  CHECK(later.final_counts.at(AbilityGroup::Medium).at(10) == 1);
  CHECK(reenrollment_outcomes(panel, 14).totals.empty());
}

TEST_CASE("summaries of identical values have exactly zero variance") {
  const std::vector<double> same(1000, 0.1);
  const auto m = summarize(same);
  CHECK(m.n == 1000);
  CHECK(m.var == 0.0);
  CHECK(m.sd == 0.0);
  CHECK(m.mean == 0.1);
  const std::vector<double> xs{1.0, 2.0, 4.0};
  const auto s = summarize(xs);
  CHECK(s.mean == doctest::Approx(7.0 / 3.0));
  CHECK(s.var == doctest::Approx(7.0 / 3.0));
  CHECK(summarize(std::vector<double>{3.0}).sd == 0.0);
}

TEST_CASE("shock shut-off study leaves no within-cell variance when every shock is off") {
  ParamSet params;
  for (auto g : kAllAbilities) params[g] = toy_params(g, kFinalAge);
  const std::vector<CohortSpec> cohorts{parse_cohort_spec("track=academic,year=9"),
                                        parse_cohort_spec("track=vocational,year=9")};
  const auto shocks = draw_shock_panel(77, 900, 44);
  const auto rows = shock_shutoff_study(params, cohorts, IntegrationSpec{10}, shocks, InitialConditions{});
  int zero_cells = 0, noisy_cells = 0;
  for (const auto& row : rows) {
    for (const auto& [cell, m] : row.er_cells) {
      if (row.scenario == "no-shocks") {
        CHECK(m.var == 0.0);
        ++zero_cells;
      } else if (row.scenario == "baseline" && m.n > 5 && m.var > 0.0) {
        ++noisy_cells;
      }
    }
  }
  CHECK(zero_cells > 0);
  CHECK(noisy_cells > 0);
}
