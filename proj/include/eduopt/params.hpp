#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "eduopt/types.hpp"

namespace eduopt {

// Log-wage (skill production) coefficients. Years terms use track attainment
// h = 7 + n.
struct WageParams {
  double beta1 = 0.0;  // years academic
  double beta2 = 0.0;  // years vocational
  double beta3 = 0.0;  // experience
  double beta4 = 0.0;  // experience squared, divided by exp_sq_divisor
  double gammaA9 = 0.0, gammaA12 = 0.0, gammaA16 = 0.0;
  double gammaV9 = 0.0, gammaV12 = 0.0;
  double eta1 = 0.0;  // lagged work
  double nu1 = 0.0;   // period trend
  double nu2 = 0.0;   // minor (t < 17)
  double exp_sq_divisor = 1.0;
};

struct WorkNonpecParams {
  double constant = 0.0;
  double beta2 = 0.0;  // any past experience
  double beta3 = 0.0;  // minor
  double beta4 = 0.0;  // experience
  double beta5 = 0.0;  // academic attainment
  double beta6 = 0.0;  // vocational attainment
  double thetaA9 = 0.0, thetaA12 = 0.0, thetaA16 = 0.0;
  double thetaV9 = 0.0, thetaV12 = 0.0;
};

struct AcademicParams {
  double constant = 0.0;
  double beta1 = 0.0;  // lag academic
  double beta2 = 0.0;  // lag vocational
  double beta3 = 0.0;  // period
  double beta4 = 0.0;  // vocational years beyond compulsory
  double beta6 = 0.0;  // lag academic and academic high-school diploma
  double beta7 = 0.0;  // local high school
  double thetaA9 = 0.0, thetaA12 = 0.0, thetaA16 = 0.0;
};

struct VocationalParams {
  double constant = 0.0;
  double beta1 = 0.0;  // lag academic
  double beta2 = 0.0;  // lag vocational
  double beta3 = 0.0;  // period
  double beta4 = 0.0;  // academic years beyond compulsory
  double beta7 = 0.0;  // local high school
  double thetaV9 = 0.0, thetaV12 = 0.0;
};

struct HomeParams {
  double constant = 0.0;
  double beta1 = 0.0;  // minor
  double beta2 = 0.0;  // period
  double thetaA12 = 0.0, thetaA16 = 0.0;
  double thetaV12 = 0.0;
};

struct ShockSd {
  double work = 0.0;  // log-wage units
  double academic = 0.0;
  double vocational = 0.0;
  double home = 0.0;
};

// Latent-type skill endowments, one row per type. Type 3 is the reference.
struct Endowment {
  double wage = 0.0;
  double work_nonpec = 0.0;
  double academic = 0.0;
  double vocational = 0.0;
  double home = 0.0;
};

struct ModelParams {
  AbilityGroup ability = AbilityGroup::Low;
  double delta = 0.95;
  double ln_r = 0.0;
  int last_age = kFinalAge;
  WageParams wage;
  WorkNonpecParams work_nonpec;
  AcademicParams academic;
  VocationalParams vocational;
  HomeParams home;
  ShockSd shock_sd;
  std::array<Endowment, kNumTypes> endow{};

  const Endowment& endowment(int jtype) const { return endow.at(static_cast<std::size_t>(jtype - 1)); }
};

void validate(const ModelParams& p);

// One ModelParams per ability group.
using ParamSet = std::map<AbilityGroup, ModelParams>;

nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j, AbilityGroup ability);

nlohmann::json to_json(const ParamSet& ps);
ParamSet param_set_from_json(const nlohmann::json& j);

ParamSet load_param_set(const std::string& path);
void save_param_set(const ParamSet& ps, const std::string& path);

// The shipped estimates (data/default_params.json, compiled in).
const ParamSet& shipped_params();

// Access to scalar coefficients by dotted path, e.g. "wage.beta1", "delta",
// "endow.type1.home". Unknown paths throw.
double& param_ref(ModelParams& p, std::string_view path);
double param_value(const ModelParams& p, std::string_view path);

}  // namespace eduopt
