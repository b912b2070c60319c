#include "eduopt/model.hpp"

#include <cmath>

#include "eduopt/error.hpp"

namespace eduopt {

DiplomaFlags diploma_flags(int nA, int nV) {
  require(nA >= 0 && nV >= 0, "negative schooling years");
  const int hA = kBasicSchooling + nA;
  const int hV = kBasicSchooling + nV;
  return {hA >= 9, hA >= 12, hA >= 16, hV >= 9, hV >= 12};
}

namespace {

inline double ind(bool b) { return b ? 1.0 : 0.0; }

// Gamma(s) without the rental price.
double skill_index(const StateCore& s, const ModelParams& p) {
  const auto& w = p.wage;
  const auto d = diploma_flags(s.nA, s.nV);
  const double k = s.k;
  return p.endowment(s.jtype).wage + w.beta1 * s.academic_years() + w.beta2 * s.vocational_years() +
         w.beta3 * k + w.beta4 * (k * k) / w.exp_sq_divisor + w.gammaA9 * ind(d.acadMid) +
         w.gammaA12 * ind(d.acadHS) + w.gammaA16 * ind(d.college) + w.gammaV9 * ind(d.vocMid) +
         w.gammaV12 * ind(d.vocHS) + w.eta1 * ind(s.lag == ChoiceAlt::Work) +
         w.nu1 * (s.t - kEntryAge) + w.nu2 * ind(s.t < 17);
}

}  // namespace

double log_wage_mean(const StateCore& s, const ModelParams& p) {
  require(s.t >= kEntryAge && s.t <= kFinalAge, "age outside [15, 58]", ErrorCode::OutOfRange);
  return p.ln_r + skill_index(s, p);
}

double log_wage(const StateCore& s, const ModelParams& p, double zW) {
  return log_wage_mean(s, p) + p.shock_sd.work * zW;
}

double nonpecuniary(const StateCore& s, ChoiceAlt a, const ModelParams& p) {
  const auto d = diploma_flags(s.nA, s.nV);
  const auto& e = p.endowment(s.jtype);
  const double period = s.t - kEntryAge;
  const bool minor = s.t < 17;
  switch (a) {
    case ChoiceAlt::Work: {
      const auto& q = p.work_nonpec;
      return e.work_nonpec + q.constant + q.beta2 * ind(s.k > 0) + q.beta3 * ind(minor) +
             q.beta4 * s.k + q.beta5 * s.academic_years() + q.beta6 * s.vocational_years() +
             q.thetaA9 * ind(d.acadMid) + q.thetaA12 * ind(d.acadHS) + q.thetaA16 * ind(d.college) +
             q.thetaV9 * ind(d.vocMid) + q.thetaV12 * ind(d.vocHS);
    }
    case ChoiceAlt::Academic: {
      const auto& q = p.academic;
      const bool lagA = s.lag == ChoiceAlt::Academic;
      return e.academic + q.constant + q.beta1 * ind(lagA) + q.beta2 * ind(s.lag == ChoiceAlt::Vocational) +
             q.beta3 * period + q.beta4 * s.nV + q.beta6 * ind(lagA && d.acadHS) + q.beta7 * ind(s.hsprox) +
             q.thetaA9 * ind(d.acadMid) + q.thetaA12 * ind(d.acadHS) + q.thetaA16 * ind(d.college);
    }
    case ChoiceAlt::Vocational: {
      const auto& q = p.vocational;
      return e.vocational + q.constant + q.beta1 * ind(s.lag == ChoiceAlt::Academic) +
             q.beta2 * ind(s.lag == ChoiceAlt::Vocational) + q.beta3 * period + q.beta4 * s.nA +
             q.beta7 * ind(s.hsprox) + q.thetaV9 * ind(d.vocMid) + q.thetaV12 * ind(d.vocHS);
    }
    case ChoiceAlt::Home: {
      const auto& q = p.home;
      return e.home + q.constant + q.beta1 * ind(minor) + q.beta2 * period + q.thetaA12 * ind(d.acadHS) +
             q.thetaA16 * ind(d.college) + q.thetaV12 * ind(d.vocHS);
    }
  }
  return 0.0;
}

double deterministic_utility(const StateCore& s, ChoiceAlt a, const ModelParams& p) {
  double u = nonpecuniary(s, a, p);
  if (a == ChoiceAlt::Work) u += std::exp(log_wage_mean(s, p));
  return u;
}

ShockVec effective_shocks(const ShockVec& z, const ScenarioConstraint& c) {
  ShockVec out = z;
  if (c.zero_wage_risk) out.zW = 0.0;
  if (c.zero_taste_shocks) out.zA = out.zV = out.zH = 0.0;
  return out;
}

double flow_utility(const StateCore& s, ChoiceAlt a, const ModelParams& p, const ShockVec& z,
                    const ScenarioConstraint& c) {
  require(s.t >= kEntryAge && s.t <= kFinalAge, "age outside [15, 58]", ErrorCode::OutOfRange);
  require(is_feasible(s, a, c), "infeasible alternative for state");
  const ShockVec ze = effective_shocks(z, c);
  const double base = nonpecuniary(s, a, p);
  switch (a) {
    case ChoiceAlt::Work: return base + std::exp(log_wage(s, p, ze.zW));
    case ChoiceAlt::Academic: return base + p.shock_sd.academic * ze.zA;
    case ChoiceAlt::Vocational: return base + p.shock_sd.vocational * ze.zV;
    case ChoiceAlt::Home: return base + p.shock_sd.home * ze.zH;
  }
  return base;
}

StateCore transition(const StateCore& s, ChoiceAlt a, int last_age) {
  require(s.t < last_age, "no successor state after the final period", ErrorCode::OutOfRange);
  StateCore n = s;
  n.t += 1;
  if (a == ChoiceAlt::Work) ++n.k;
  if (a == ChoiceAlt::Academic) ++n.nA;
  if (a == ChoiceAlt::Vocational) ++n.nV;
  n.lag = a;
  return n;
}

unsigned feasible_mask(int nA, int nV, const ScenarioConstraint& c) {
  constexpr unsigned all = 0b1111u;
  constexpr unsigned school = (1u << index(ChoiceAlt::Academic)) | (1u << index(ChoiceAlt::Vocational));
  const int total = kBasicSchooling + nA + nV;
  if (total >= kMaxSchooling) return all & ~school;
  if (total < c.compulsory_min) return school;
  if (c.no_future_schooling) return all & ~school;
  return all;
}

std::vector<ChoiceAlt> feasible_choices(const StateCore& s, const ScenarioConstraint& c) {
  const unsigned mask = feasible_mask(s.nA, s.nV, c);
  std::vector<ChoiceAlt> out;
  for (auto a : kAllChoices)
    if ((mask >> index(a)) & 1u) out.push_back(a);
  if (out.empty()) fail(ErrorCode::InvalidArgument, "constraint set leaves no feasible alternative");
  return out;
}

}  // namespace eduopt
