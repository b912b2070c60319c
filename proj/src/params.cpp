#include "eduopt/params.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "eduopt/error.hpp"
#include "shipped_params_json.hpp"

namespace eduopt {
namespace {

using Accessor = std::function<double&(ModelParams&)>;

struct Field {
  std::string path;
  Accessor get;
};

#define EDUOPT_FIELD(path, member) Field{path, [](ModelParams& p) -> double& { return p.member; }}

std::vector<Field> build_fields() {
  std::vector<Field> f = {
      EDUOPT_FIELD("delta", delta),
      EDUOPT_FIELD("ln_r", ln_r),
      EDUOPT_FIELD("wage.beta1", wage.beta1),
      EDUOPT_FIELD("wage.beta2", wage.beta2),
      EDUOPT_FIELD("wage.beta3", wage.beta3),
      EDUOPT_FIELD("wage.beta4", wage.beta4),
      EDUOPT_FIELD("wage.gammaA9", wage.gammaA9),
      EDUOPT_FIELD("wage.gammaA12", wage.gammaA12),
      EDUOPT_FIELD("wage.gammaA16", wage.gammaA16),
      EDUOPT_FIELD("wage.gammaV9", wage.gammaV9),
      EDUOPT_FIELD("wage.gammaV12", wage.gammaV12),
      EDUOPT_FIELD("wage.eta1", wage.eta1),
      EDUOPT_FIELD("wage.nu1", wage.nu1),
      EDUOPT_FIELD("wage.nu2", wage.nu2),
      EDUOPT_FIELD("wage.exp_sq_divisor", wage.exp_sq_divisor),
      EDUOPT_FIELD("work_nonpec.constant", work_nonpec.constant),
      EDUOPT_FIELD("work_nonpec.beta2", work_nonpec.beta2),
      EDUOPT_FIELD("work_nonpec.beta3", work_nonpec.beta3),
      EDUOPT_FIELD("work_nonpec.beta4", work_nonpec.beta4),
      EDUOPT_FIELD("work_nonpec.beta5", work_nonpec.beta5),
      EDUOPT_FIELD("work_nonpec.beta6", work_nonpec.beta6),
      EDUOPT_FIELD("work_nonpec.thetaA9", work_nonpec.thetaA9),
      EDUOPT_FIELD("work_nonpec.thetaA12", work_nonpec.thetaA12),
      EDUOPT_FIELD("work_nonpec.thetaA16", work_nonpec.thetaA16),
      EDUOPT_FIELD("work_nonpec.thetaV9", work_nonpec.thetaV9),
      EDUOPT_FIELD("work_nonpec.thetaV12", work_nonpec.thetaV12),
      EDUOPT_FIELD("academic.constant", academic.constant),
      EDUOPT_FIELD("academic.beta1", academic.beta1),
      EDUOPT_FIELD("academic.beta2", academic.beta2),
      EDUOPT_FIELD("academic.beta3", academic.beta3),
      EDUOPT_FIELD("academic.beta4", academic.beta4),
      EDUOPT_FIELD("academic.beta6", academic.beta6),
      EDUOPT_FIELD("academic.beta7", academic.beta7),
      EDUOPT_FIELD("academic.thetaA9", academic.thetaA9),
      EDUOPT_FIELD("academic.thetaA12", academic.thetaA12),
      EDUOPT_FIELD("academic.thetaA16", academic.thetaA16),
      EDUOPT_FIELD("vocational.constant", vocational.constant),
      EDUOPT_FIELD("vocational.beta1", vocational.beta1),
      EDUOPT_FIELD("vocational.beta2", vocational.beta2),
      EDUOPT_FIELD("vocational.beta3", vocational.beta3),
      EDUOPT_FIELD("vocational.beta4", vocational.beta4),
      EDUOPT_FIELD("vocational.beta7", vocational.beta7),
      EDUOPT_FIELD("vocational.thetaV9", vocational.thetaV9),
      EDUOPT_FIELD("vocational.thetaV12", vocational.thetaV12),
      EDUOPT_FIELD("home.constant", home.constant),
      EDUOPT_FIELD("home.beta1", home.beta1),
      EDUOPT_FIELD("home.beta2", home.beta2),
      EDUOPT_FIELD("home.thetaA12", home.thetaA12),
      EDUOPT_FIELD("home.thetaA16", home.thetaA16),
      EDUOPT_FIELD("home.thetaV12", home.thetaV12),
      EDUOPT_FIELD("shock_sd.work", shock_sd.work),
      EDUOPT_FIELD("shock_sd.academic", shock_sd.academic),
      EDUOPT_FIELD("shock_sd.vocational", shock_sd.vocational),
      EDUOPT_FIELD("shock_sd.home", shock_sd.home),
  };
  constexpr const char* channels[] = {"wage", "work_nonpec", "academic", "vocational", "home"};
  for (int j = 0; j < kNumTypes; ++j) {
    for (int c = 0; c < 5; ++c) {
      const std::string path = "endow.type" + std::to_string(j + 1) + "." + channels[c];
      f.push_back({path, [j, c](ModelParams& p) -> double& {
                     auto& e = p.endow[static_cast<std::size_t>(j)];
                     double* slots[] = {&e.wage, &e.work_nonpec, &e.academic, &e.vocational, &e.home};
                     return *slots[c];
                   }});
    }
  }
  return f;
}

#undef EDUOPT_FIELD

const std::vector<Field>& fields() {
  static const std::vector<Field> f = build_fields();
  return f;
}

const Field* find_field(std::string_view path) {
  for (const auto& f : fields())
    if (f.path == path) return &f;
  return nullptr;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  return parts;
}

void read_leaves(const nlohmann::json& j, const std::string& prefix, ModelParams& p) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (prefix.empty() && key == "last_age") {
      require(value.is_number_integer(), "last_age must be an integer", ErrorCode::Config);
      p.last_age = value.get<int>();
      continue;
    }
    if (value.is_object()) {
      read_leaves(value, path, p);
      continue;
    }
    const Field* f = find_field(path);
    if (!f) fail(ErrorCode::Config, "unknown parameter field '" + path + "'");
    if (!value.is_number()) fail(ErrorCode::Config, "parameter '" + path + "' is not a number");
    f->get(p) = value.get<double>();
  }
}

}  // namespace

void validate(const ModelParams& p) {
  require(p.delta > 0.0 && p.delta < 1.0, "delta must lie in (0, 1)", ErrorCode::Config);
  require(p.shock_sd.work >= 0 && p.shock_sd.academic >= 0 && p.shock_sd.vocational >= 0 &&
              p.shock_sd.home >= 0,
          "shock standard deviations must be non-negative", ErrorCode::Config);
  require(p.wage.exp_sq_divisor > 0, "wage.exp_sq_divisor must be positive", ErrorCode::Config);
  require(p.last_age > kEntryAge - 1 && p.last_age <= kFinalAge, "last_age outside [15, 58]",
          ErrorCode::Config);
  const auto& e3 = p.endow[2];
  require(e3.wage == 0 && e3.work_nonpec == 0 && e3.academic == 0 && e3.vocational == 0 && e3.home == 0,
          "type-3 endowments are the reference and must be zero", ErrorCode::Config);
}

nlohmann::json to_json(const ModelParams& p) {
  nlohmann::json j = nlohmann::json::object();
  ModelParams copy = p;
  for (const auto& f : fields()) {
    nlohmann::json* node = &j;
    for (const auto& part : split_path(f.path)) node = &(*node)[part];
    *node = f.get(copy);
  }
  if (p.last_age != kFinalAge) j["last_age"] = p.last_age;
  return j;
}

ModelParams params_from_json(const nlohmann::json& j, AbilityGroup ability) {
  require(j.is_object(), "parameter block must be a JSON object", ErrorCode::Config);
  ModelParams p;
  p.ability = ability;
  read_leaves(j, "", p);
  validate(p);
  return p;
}

nlohmann::json to_json(const ParamSet& ps) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [g, p] : ps) j[std::string(ability_name(g))] = to_json(p);
  return j;
}

ParamSet param_set_from_json(const nlohmann::json& j) {
  require(j.is_object(), "parameter file must hold a JSON object", ErrorCode::Config);
  ParamSet ps;
  for (const auto& [key, value] : j.items()) {
    AbilityGroup g{};
    try {
      g = ability_from_name(key);
    } catch (const Error&) {
      fail(ErrorCode::Config, "unknown ability group '" + key + "' in parameter file");
    }
    ps[g] = params_from_json(value, g);
  }
  require(!ps.empty(), "parameter file has no ability groups", ErrorCode::Config);
  return ps;
}

ParamSet load_param_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open parameter file " + path);
  // Metadata lines are skipped, so fit output can be fed back in.
  std::string text, line;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') text += line + "\n";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, "malformed parameter file " + path + ": " + e.what());
  }
  if (j.is_object() && j.contains("params")) return param_set_from_json(j.at("params"));
  return param_set_from_json(j);
}

void save_param_set(const ParamSet& ps, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << to_json(ps).dump(2) << "\n";
}

const ParamSet& shipped_params() {
  static const ParamSet ps = param_set_from_json(nlohmann::json::parse(kShippedParamsJson));
  return ps;
}

double& param_ref(ModelParams& p, std::string_view path) {
  const Field* f = find_field(path);
  if (!f) fail(ErrorCode::Config, "unknown parameter path '" + std::string(path) + "'");
  return f->get(p);
}

double param_value(const ModelParams& p, std::string_view path) {
  ModelParams copy = p;
  return param_ref(copy, path);
}

}  // namespace eduopt
