#pragma once

// Exhaustive event-tree oracle for short-horizon models. It walks every
// (shock node, action) path without any state indexing or value tables, so
// it shares only the reward functions with the solver under test.

#include <algorithm>
#include <array>
#include <limits>
#include <vector>

#include "eduopt/model.hpp"
#include "eduopt/params.hpp"

namespace eduopt::oracle {

// All 16 sign combinations of a two-point (+/-1) grid per shock dimension.
inline std::vector<ShockVec> two_point_grid() {
  std::vector<ShockVec> nodes;
  for (int m = 0; m < 16; ++m)
    nodes.push_back({m & 1 ? 1.0 : -1.0, m & 2 ? 1.0 : -1.0, m & 4 ? 1.0 : -1.0, m & 8 ? 1.0 : -1.0});
  return nodes;
}

inline std::vector<ChoiceAlt> allowed(const StateCore& s, const ScenarioConstraint& c) {
  std::vector<ChoiceAlt> out;
  const int total = 7 + s.nA + s.nV;
  for (auto a : {ChoiceAlt::Work, ChoiceAlt::Academic, ChoiceAlt::Vocational, ChoiceAlt::Home}) {
    const bool school = a == ChoiceAlt::Academic || a == ChoiceAlt::Vocational;
    if (total >= 25 && school) continue;
    if (total < c.compulsory_min && !school) continue;
    if (total >= c.compulsory_min && c.no_future_schooling && school) continue;
    out.push_back(a);
  }
  return out;
}

inline StateCore step(StateCore s, ChoiceAlt a) {
  s.t += 1;
  s.k += a == ChoiceAlt::Work;
  s.nA += a == ChoiceAlt::Academic;
  s.nV += a == ChoiceAlt::Vocational;
  s.lag = a;
  return s;
}

struct Model {
  ModelParams params;
  ScenarioConstraint constraint;
  std::vector<ShockVec> nodes;
};

double expected_max(const Model& m, const StateCore& s);

// Value of taking a at s under realized shock z, optimal thereafter.
inline double choice_value(const Model& m, const StateCore& s, ChoiceAlt a, const ShockVec& z) {
  double v = flow_utility(s, a, m.params, z, m.constraint);
  if (s.t < m.params.last_age) v += m.params.delta * expected_max(m, step(s, a));
  return v;
}

inline double expected_max(const Model& m, const StateCore& s) {
  double total = 0.0;
  for (const auto& z : m.nodes) {
    double best = -std::numeric_limits<double>::infinity();
    for (auto a : allowed(s, m.constraint)) best = std::max(best, choice_value(m, s, a, z));
    total += best;
  }
  return total / static_cast<double>(m.nodes.size());
}

inline ChoiceAlt best_choice(const Model& m, const StateCore& s, const ShockVec& z) {
  ChoiceAlt best = ChoiceAlt::Home;
  double best_v = -std::numeric_limits<double>::infinity();
  for (auto a : allowed(s, m.constraint)) {
    const double v = choice_value(m, s, a, z);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

// Deterministic world: best total discounted utility over every open-loop
// action sequence from s to the final period.
inline double best_open_loop(const ModelParams& p, const ScenarioConstraint& c, const StateCore& s) {
  const int periods = p.last_age - s.t + 1;
  int combos = 1;
  for (int i = 0; i < periods; ++i) combos *= 4;
  double best = -std::numeric_limits<double>::infinity();
  for (int code = 0; code < combos; ++code) {
    StateCore cur = s;
    double total = 0.0, disc = 1.0;
    int rest = code;
    bool ok = true;
    for (int i = 0; i < periods && ok; ++i) {
      const auto a = static_cast<ChoiceAlt>(rest % 4);
      rest /= 4;
      const auto allow = allowed(cur, c);
      if (std::find(allow.begin(), allow.end(), a) == allow.end()) {
        ok = false;
        break;
      }
      total += disc * flow_utility(cur, a, p, ShockVec{}, c);
      disc *= p.delta;
      if (cur.t < p.last_age) cur = step(cur, a);
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

// Every reachable shock-free state of a short model, with all trait combos.
inline std::vector<StateCore> enumerate_states(const ModelParams& p, const ScenarioConstraint& c) {
  std::vector<StateCore> frontier, all;
  for (int j = 1; j <= 3; ++j)
    for (int h = 0; h < 2; ++h) frontier.push_back(entry_state(j, h != 0));
  ScenarioConstraint reach = c;
  reach.no_future_schooling = false;
  while (!frontier.empty()) {
    std::vector<StateCore> next;
    for (const auto& s : frontier) {
      all.push_back(s);
      if (s.t == p.last_age) continue;
      for (auto a : allowed(s, reach)) {
        const auto n = step(s, a);
        if (std::find(next.begin(), next.end(), n) == next.end()) next.push_back(n);
      }
    }
    frontier = std::move(next);
  }
  return all;
}

}  // namespace eduopt::oracle
