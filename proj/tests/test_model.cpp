#include <doctest.h>

#include <cmath>
#include <random>

#include "eduopt/error.hpp"
#include "eduopt/model.hpp"
#include "eduopt/params.hpp"

using namespace eduopt;

namespace {

const ModelParams& shipped(AbilityGroup g) { return shipped_params().at(g); }

StateCore make_state(int t, int k, int nA, int nV, ChoiceAlt lag, int jtype = 3, bool hsprox = false) {
  return StateCore{t, k, nA, nV, lag, jtype, hsprox};
}

}  // namespace

TEST_CASE("diploma flags follow the attainment thresholds") {
  CHECK(diploma_flags(0, 0) == DiplomaFlags{});
  CHECK(diploma_flags(5, 0) == DiplomaFlags{true, true, false, false, false});
  CHECK(diploma_flags(2, 2) == DiplomaFlags{true, false, false, true, false});
  CHECK(diploma_flags(9, 0).college);
  CHECK_THROWS_AS(diploma_flags(-1, 0), Error);

  // Monotone in both arguments.
  auto le = [](const DiplomaFlags& a, const DiplomaFlags& b) {
    return (!a.acadMid || b.acadMid) && (!a.acadHS || b.acadHS) && (!a.college || b.college) &&
           (!a.vocMid || b.vocMid) && (!a.vocHS || b.vocHS);
  };
  for (int nA = 0; nA < kMaxExtraSchooling; ++nA)
    for (int nV = 0; nV + nA < kMaxExtraSchooling; ++nV) {
      CHECK(le(diploma_flags(nA, nV), diploma_flags(nA + 1, nV)));
      CHECK(le(diploma_flags(nA, nV), diploma_flags(nA, nV + 1)));
    }
}

TEST_CASE("log wage at the entry schooling level") {
  // ln r + 7 * beta1 + 7 * beta2 + 2 * nu1, low ability, reference type.
  const auto s = make_state(17, 0, 0, 0, ChoiceAlt::Home);
  CHECK(log_wage(s, shipped(AbilityGroup::Low), 0.0) ==
        doctest::Approx(10.3 + 7 * 0.11372 + 7 * 0.16168 - 2 * 0.07726).epsilon(1e-14));
  CHECK(log_wage(s, shipped(AbilityGroup::Low), 0.0) == doctest::Approx(12.07328).epsilon(1e-12));
}

TEST_CASE("log wage schooling increments") {
  const auto& p = shipped(AbilityGroup::High);
  const auto s0 = make_state(25, 2, 0, 0, ChoiceAlt::Work);
  auto s1 = s0;
  s1.nA = 1;
  CHECK(log_wage(s1, p, 0.3) - log_wage(s0, p, 0.3) == doctest::Approx(0.18123).epsilon(1e-12));

  auto s4 = s0, s5 = s0;
  s4.nA = 4;
  s5.nA = 5;
  CHECK(log_wage(s5, p, 0.0) - log_wage(s4, p, 0.0) == doctest::Approx(0.18123 + 0.10376).epsilon(1e-12));

  CHECK_THROWS_AS(log_wage(make_state(59, 0, 0, 0, ChoiceAlt::Home), p, 0.0), Error);
}

TEST_CASE("untabulated coefficients contribute nothing for low ability") {
  const auto& p = shipped(AbilityGroup::Low);
  // h^A goes 15 -> 16: only the linear years term moves.
  const auto s8 = make_state(40, 10, 8, 0, ChoiceAlt::Work);
  auto s9 = s8;
  s9.nA = 9;
  CHECK(log_wage(s9, p, 0.0) - log_wage(s8, p, 0.0) == doctest::Approx(0.11372).epsilon(1e-12));
  CHECK(nonpecuniary(s9, ChoiceAlt::Work, p) - nonpecuniary(s8, ChoiceAlt::Work, p) ==
        doctest::Approx(1401.4).epsilon(1e-12));
  CHECK(nonpecuniary(s9, ChoiceAlt::Home, p) == nonpecuniary(s8, ChoiceAlt::Home, p) + 9119.3 * 0);
  // h^A 11 -> 12 (academic high school): no diploma term for low ability.
  auto a4 = make_state(30, 5, 4, 0, ChoiceAlt::Academic);
  auto a5 = a4;
  a5.nA = 5;
  CHECK(log_wage(a5, p, 0.0) - log_wage(a4, p, 0.0) == doctest::Approx(0.11372).epsilon(1e-12));
}

TEST_CASE("flow utility examples") {
  const ShockVec zero{};
  SUBCASE("home, low ability") {
    const auto s = make_state(16, 1, 0, 0, ChoiceAlt::Work);
    CHECK(flow_utility(s, ChoiceAlt::Home, shipped(AbilityGroup::Low), zero) ==
          doctest::Approx(-58833.5 + 151586.6 + 9119.3).epsilon(1e-14));
    CHECK(flow_utility(s, ChoiceAlt::Home, shipped(AbilityGroup::Low), zero) ==
          doctest::Approx(101872.4).epsilon(1e-12));
  }
  SUBCASE("academic, high ability, near a high school") {
    const auto s = make_state(15, 0, 0, 0, ChoiceAlt::Home, 3, true);
    CHECK(flow_utility(s, ChoiceAlt::Academic, shipped(AbilityGroup::High), zero) ==
          doctest::Approx(-18118.6).epsilon(1e-12));
  }
  SUBCASE("vocational continuation bonus, medium ability") {
    const auto& p = shipped(AbilityGroup::Medium);
    const auto lagV = make_state(18, 0, 0, 3, ChoiceAlt::Vocational);
    auto lagH = lagV;
    lagH.lag = ChoiceAlt::Home;
    CHECK(flow_utility(lagV, ChoiceAlt::Vocational, p, zero) - flow_utility(lagH, ChoiceAlt::Vocational, p, zero) ==
          doctest::Approx(18929.3).epsilon(1e-12));
  }
  SUBCASE("taste shocks scale by their SD and vanish under the switch") {
    const auto& p = shipped(AbilityGroup::Medium);
    const auto s = make_state(20, 3, 2, 0, ChoiceAlt::Work);
    const ShockVec z{0.5, -1.0, 2.0, 0.25};
    CHECK(flow_utility(s, ChoiceAlt::Home, p, z) - flow_utility(s, ChoiceAlt::Home, p, zero) ==
          doctest::Approx(0.25 * 916222.1).epsilon(1e-12));
    ScenarioConstraint off;
    off.zero_taste_shocks = true;
    CHECK(flow_utility(s, ChoiceAlt::Academic, p, z, off) == flow_utility(s, ChoiceAlt::Academic, p, zero));
    off.zero_wage_risk = true;
    CHECK(flow_utility(s, ChoiceAlt::Work, p, z, off) == flow_utility(s, ChoiceAlt::Work, p, zero));
  }
  SUBCASE("schooling at the cap is a contract violation") {
    const auto s = make_state(40, 0, 18, 0, ChoiceAlt::Academic);
    CHECK_THROWS_AS(flow_utility(s, ChoiceAlt::Academic, shipped(AbilityGroup::High), zero), Error);
  }
}

TEST_CASE("work utility with zero wage shock is nonpecuniary plus r exp(Gamma)") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = kAllAbilities[rng() % 3];
    const auto& p = shipped(g);
    StateCore s;
    s.t = 15 + static_cast<int>(rng() % 44);
    const int elapsed = s.t - 15;
    s.nA = elapsed ? static_cast<int>(rng() % (std::min(elapsed, 18) + 1)) : 0;
    s.nV = static_cast<int>(rng() % (std::min(elapsed - s.nA, 18 - s.nA) + 1));
    s.k = static_cast<int>(rng() % (elapsed - s.nA - s.nV + 1));
    s.lag = kAllChoices[rng() % 4];
    s.jtype = 1 + static_cast<int>(rng() % 3);
    s.hsprox = rng() % 2;
    const double u = flow_utility(s, ChoiceAlt::Work, p, ShockVec{});
    const double earnings = std::exp(log_wage_mean(s, p));
    CHECK(earnings > 0.0);
    CHECK(u == doctest::Approx(nonpecuniary(s, ChoiceAlt::Work, p) + earnings).epsilon(1e-14));
  }
}

TEST_CASE("transition law") {
  const auto a = transition(make_state(15, 0, 0, 0, ChoiceAlt::Home), ChoiceAlt::Work);
  CHECK(a == make_state(16, 1, 0, 0, ChoiceAlt::Work));
  const auto b = transition(make_state(20, 2, 3, 0, ChoiceAlt::Academic), ChoiceAlt::Academic);
  CHECK(b == make_state(21, 2, 4, 0, ChoiceAlt::Academic));
  const auto s = make_state(30, 4, 2, 3, ChoiceAlt::Vocational, 2, true);
  const auto h = transition(s, ChoiceAlt::Home);
  CHECK(h.k == 4);
  CHECK(h.nA == 2);
  CHECK(h.nV == 3);
  CHECK(h.jtype == 2);
  CHECK(h.hsprox);
  CHECK_THROWS_AS(transition(make_state(58, 0, 0, 0, ChoiceAlt::Home), ChoiceAlt::Work), Error);
}

TEST_CASE("random paths keep the activity bookkeeping") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    StateCore s = entry_state(1 + static_cast<int>(rng() % 3), rng() % 2);
    int home = 0;
    while (s.t < kFinalAge) {
      const auto choices = feasible_choices(s, {});
      const auto a = choices[rng() % choices.size()];
      home += a == ChoiceAlt::Home;
      s = transition(s, a);
      validate(s);
      CHECK(s.t - 15 == s.k + s.nA + s.nV + home);
    }
  }
}

TEST_CASE("feasible choice sets") {
  using V = std::vector<ChoiceAlt>;
  const V all{ChoiceAlt::Work, ChoiceAlt::Academic, ChoiceAlt::Vocational, ChoiceAlt::Home};
  const V school{ChoiceAlt::Academic, ChoiceAlt::Vocational};
  const V outside{ChoiceAlt::Work, ChoiceAlt::Home};
  CHECK(feasible_choices(make_state(15, 0, 0, 0, ChoiceAlt::Home), {}) == all);
  CHECK(feasible_choices(make_state(15, 0, 0, 0, ChoiceAlt::Home), scenario_from_name("reform9")) == school);
  CHECK(feasible_choices(make_state(17, 0, 1, 1, ChoiceAlt::Vocational), scenario_from_name("reform9")) == all);
  CHECK(feasible_choices(make_state(17, 0, 1, 1, ChoiceAlt::Vocational), scenario_from_name("reform10")) == school);
  CHECK(feasible_choices(make_state(35, 0, 18, 0, ChoiceAlt::Academic), {}) == outside);
  CHECK(feasible_choices(make_state(30, 5, 2, 3, ChoiceAlt::Work), scenario_from_name("no-future-schooling")) ==
        outside);
  // The compulsory floor outranks the no-further-schooling restriction.
  ScenarioConstraint both = scenario_from_name("reform9");
  both.no_future_schooling = true;
  CHECK(feasible_choices(make_state(16, 0, 1, 0, ChoiceAlt::Academic), both) == school);
  CHECK(feasible_choices(make_state(17, 0, 2, 0, ChoiceAlt::Academic), both) == outside);
}

TEST_CASE("parameter file schema") {
  const auto& ps = shipped_params();
  REQUIRE(ps.size() == 3);
  CHECK(ps.at(AbilityGroup::Low).delta == 0.96586);
  CHECK(ps.at(AbilityGroup::Medium).vocational.thetaV12 == 403.6);
  CHECK(ps.at(AbilityGroup::High).academic.beta4 == 0.0);
  CHECK(ps.at(AbilityGroup::High).shock_sd.home == 789137.5);
  CHECK(ps.at(AbilityGroup::Low).endowment(2).home == 3632.8);
  CHECK(param_value(ps.at(AbilityGroup::Medium), "wage.gammaA16") == 0.00940);

  // Round trip through JSON preserves every coefficient.
  const auto again = param_set_from_json(to_json(ps));
  for (auto g : kAllAbilities) CHECK(to_json(again.at(g)) == to_json(ps.at(g)));

  auto j = to_json(ps);
  j["low"]["wage"]["beta9"] = 1.0;
  CHECK_THROWS_AS(param_set_from_json(j), Error);
  j = to_json(ps);
  j["medium"]["delta"] = 1.2;
  CHECK_THROWS_AS(param_set_from_json(j), Error);
  j = to_json(ps);
  j["high"]["endow"]["type3"]["home"] = 5.0;
  CHECK_THROWS_AS(param_set_from_json(j), Error);
  ModelParams p = ps.at(AbilityGroup::Low);
  CHECK_THROWS_AS(param_ref(p, "wage.nope"), Error);
}
