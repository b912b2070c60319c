// Command-line front end. Talks to the library only through eduopt.h.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eduopt.h"

namespace {

struct Args {
  std::string config;
  std::string seed;
  std::string out;
  std::string scenario;
  std::vector<std::string> cohorts;
  std::string panel;
  std::string base;
  std::string alt;
  bool shutoff = false;
  bool zero_shock = false;
};

int report_failure(eduopt_status st) {
  std::fprintf(stderr, "eduopt: %s\n", eduopt_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic schooling and work choice model: solve, simulate, estimate, analyze"};
  app.set_version_flag("--version", std::string(eduopt_version()));
  app.require_subcommand(1, 1);

  Args args;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve", "Solve value tables (cached) and report state-space size"},
      {"simulate", "Simulate a panel to panel.csv"},
      {"moments", "Compute estimation moments to moments.csv"},
      {"fit", "Estimate free parameters by simulated moments"},
      {"returns", "Ex-ante and ex-post returns for transition cohorts"},
      {"option-values", "Option values and their contribution for transition cohorts"},
      {"compliers", "Complier classes for transition cohorts"},
      {"policy", "Compare two scenarios on common random numbers"},
      {"validate", "Reform 9 and Reform 10 validation checks"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "Simulation seed");
    sub->add_option("--out", args.out, "Output directory");
    sub->add_option("--scenario", args.scenario, "baseline, reform9, reform10, no-wage-risk, no-shocks, no-future-schooling");
    if (name == "returns" || name == "option-values" || name == "compliers") {
      sub->add_option("--cohort", args.cohorts, "track=academic,year=11[,ability=high]; repeatable");
      sub->add_flag("--zero-shock", args.zero_shock, "Evaluate cohort members at zero shocks");
    }
    if (name == "option-values") sub->add_flag("--shutoff", args.shutoff, "Baseline, no wage risk and no shocks");
    if (name == "moments") sub->add_option("--panel", args.panel, "Existing panel CSV")->check(CLI::ExistingFile);
    if (name == "policy") {
      sub->add_option("--base", args.base, "Baseline scenario name");
      sub->add_option("--alt", args.alt, "Alternative scenario name");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return EDUOPT_ERR_CONFIG;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  eduopt_context* ctx = nullptr;
  eduopt_status st = eduopt_context_create(args.config.empty() ? nullptr : args.config.c_str(), &ctx);
  if (st != EDUOPT_OK) return report_failure(st);

  std::vector<std::pair<std::string, std::string>> settings;
  if (!args.seed.empty()) settings.emplace_back("seed", args.seed);
  if (!args.out.empty()) settings.emplace_back("out", args.out);
  if (!args.scenario.empty()) settings.emplace_back("scenario", args.scenario);
  for (const auto& c : args.cohorts) settings.emplace_back("cohort", c);
  if (!args.panel.empty()) settings.emplace_back("panel", args.panel);
  if (!args.base.empty()) settings.emplace_back("base", args.base);
  if (!args.alt.empty()) settings.emplace_back("alt", args.alt);
  if (args.shutoff) settings.emplace_back("shutoff", "1");
  if (args.zero_shock) settings.emplace_back("zero-shock", "1");
  for (const auto& [key, value] : settings) {
    st = eduopt_context_set(ctx, key.c_str(), value.c_str());
    if (st != EDUOPT_OK) {
      eduopt_context_destroy(ctx);
      return report_failure(st);
    }
  }

  st = eduopt_run(ctx, command.c_str());
  std::fputs(eduopt_context_report(ctx), stdout);
  eduopt_context_destroy(ctx);
  if (st != EDUOPT_OK) return report_failure(st);
  return 0;
}
